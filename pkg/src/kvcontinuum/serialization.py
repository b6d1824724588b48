"""Canonical JSON encoding shared by the CLI and the HTTP API.

Both transports must emit byte-identical payloads for the same logical
request, so everything machine-readable funnels through canonical_json.
"""

from __future__ import annotations

import json


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def pretty_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def request_handlers():
    """Logical request name -> handler(body dict) -> payload dict.

    One table backs both the HTTP routes and the CLI subcommands to keep
    the two transports identical.
    """
    from .continuum import (
        DesignKnobs,
        Environment,
        PRESET_NAMES,
        cost,
        derive,
        preset,
    )
    from .gradients import MemoryPoint, grid_sweep, sgd_descend
    from .navigator import WorkloadMix, auto_design, navigate, theta
    from .simulator import SimConfig
    from .transitions import TransitionState, choose_strategy, transition_costs
    from .workloads import WorkloadSpec

    def presets_handler(_body):
        return {"presets": list(PRESET_NAMES)}

    def cost_handler(body):
        env = Environment.from_json(_require(body, "env"))
        if "preset" in body:
            knobs = preset(body["preset"], env)
        else:
            knobs = DesignKnobs.from_json(_require(body, "knobs"))
        selectivity = body.get("range_selectivity", 0.001)
        vec = cost(env, knobs, selectivity)
        payload = {
            "knobs": knobs.to_json(),
            "cost": vec.to_json(),
            "derived": derive(env, knobs).to_json(),
        }
        if "mix" in body:
            mix = WorkloadMix.from_json(body["mix"])
            terms = {
                "zero_point_read": mix.zero_point_frac * vec.zero_point_read,
                "point_read": mix.point_frac * vec.point_read,
                "short_range": mix.short_range_frac * vec.short_range,
                "long_range": mix.long_range_frac * vec.long_range,
                "update": mix.update_frac * vec.update,
            }
            payload["theta"] = theta(vec, mix)
            payload["theta_terms"] = terms
        return payload

    def navigate_handler(body):
        env = Environment.from_json(_require(body, "env"))
        mix = WorkloadMix.from_json(_require(body, "mix"))
        start = DesignKnobs.from_json(_require(body, "start"))
        trace = navigate(env, mix, start)
        return trace.to_json()

    def auto_handler(body):
        env = Environment.from_json(_require(body, "env"))
        mix = WorkloadMix.from_json(_require(body, "mix"))
        knobs, th = auto_design(env, mix, full_kz_sweep=body.get("full_kz_sweep", False))
        return {"knobs": knobs.to_json(), "theta": th}

    def grid_handler(body):
        env = Environment.from_json(_require(body, "env"))
        spec = WorkloadSpec.from_json(_require(body, "spec"))
        resolution = int(_require(body, "resolution"))
        base = _sim_config(env, spec, body.get("sim", {}))
        rows = grid_sweep(spec, env, resolution, base_config=base,
                          jobs=int(body.get("jobs", 1)))
        return {"resolution": resolution, "rows": [_grid_row(r) for r in rows]}

    def sgd_handler(body):
        env = Environment.from_json(_require(body, "env"))
        spec = WorkloadSpec.from_json(_require(body, "spec"))
        start = _require(body, "start")
        point = MemoryPoint(cache_bits=int(_require(start, "cache_bits")),
                            buffer_bits=int(_require(start, "buffer_bits")),
                            bloom_bits=int(_require(start, "bloom_bits")))
        base = _sim_config(env, spec, body.get("sim", {}))
        out = sgd_descend(spec, env, point, base_config=base,
                          step_bits=int(body.get("step_bits", 64)),
                          max_steps=int(body.get("max_steps", 10000)))
        return {
            "trajectory": [p.to_json() for p in out["trajectory"]],
            "predicted_min": out["predicted_min"].to_json(),
            "io_by_step": out["io_by_step"],
        }

    def transition_handler(body):
        state = TransitionState.from_json(_require(body, "state"))
        return {
            "costs": transition_costs(state),
            "strategy": choose_strategy(state),
        }

    def _sim_config(env, spec, sim_body):
        return SimConfig(
            env=env,
            growth_factor=int(sim_body.get("growth_factor", 2)),
            hot_merge_threshold=int(sim_body.get("hot_merge_threshold", 1)),
            cold_merge_threshold=int(sim_body.get("cold_merge_threshold", 1)),
            bloom_allocation=sim_body.get("bloom_allocation", "monkey"),
            fpr_mode=sim_body.get("fpr_mode", "analytic_bernoulli"),
            seed=int(sim_body.get("seed", spec.seed)),
        )

    return {
        "presets": presets_handler,
        "cost": cost_handler,
        "navigate": navigate_handler,
        "auto": auto_handler,
        "grid": grid_handler,
        "sgd": sgd_handler,
        "transition": transition_handler,
    }


def _grid_row(row: dict) -> dict:
    out = dict(row)
    out["cell"] = list(row["cell"])
    return out


def _require(body: dict, field: str):
    if not isinstance(body, dict) or field not in body:
        raise KeyError(field)
    return body[field]
