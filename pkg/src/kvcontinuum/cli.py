"""Command-line interface.

Machine-readable JSON or CSV goes to stdout; progress chatter stays on
stderr; --pretty renders small human tables. Exit codes: 0 success,
1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .continuum import DomainError, Environment, PRESET_NAMES, UnknownPreset
from .serialization import canonical_json, pretty_json, request_handlers
from .simulator import ConfigError, SimConfig, run_trace
from .workloads import SpecError, TraceParseError, WorkloadSpec, generate, read_trace, write_trace

_DOMAIN_ERRORS = (DomainError, SpecError, ConfigError, TraceParseError,
                  UnknownPreset, ValueError, KeyError)


def _load_json_arg(value: str, what: str) -> dict:
    """Accept inline JSON or an @file / plain path."""
    text = value
    if value.startswith("@"):
        text = open(value[1:]).read()
    elif not value.lstrip().startswith("{"):
        text = open(value).read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{what}: invalid JSON ({exc.msg})") from exc


def _emit(payload: dict, pretty: bool, out=None) -> None:
    stream = out or sys.stdout
    stream.write((pretty_json(payload) if pretty else canonical_json(payload)) + "\n")


def _table(rows, headers) -> str:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(headers, widths))]
    for r in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kvcontinuum",
        description="Design-continuum engine for key-value storage layouts",
    )
    parser.add_argument("--pretty", action="store_true", help="human-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    design = sub.add_parser("design", help="cost model and knob search")
    dsub = design.add_subparsers(dest="design_command", required=True)
    for name in ("instantiate", "cost"):
        p = dsub.add_parser(name)
        p.add_argument("--env", required=True, help="environment JSON (inline or path)")
        p.add_argument("--preset", choices=PRESET_NAMES)
        p.add_argument("--knobs", help="knob JSON (inline or path)")
        p.add_argument("--mix", help="workload mix JSON")
        p.add_argument("--selectivity", type=float, default=0.001)
    p = dsub.add_parser("navigate")
    p.add_argument("--env", required=True)
    p.add_argument("--mix", required=True)
    p.add_argument("--start", help="starting knob JSON; defaults to lazy_leveled_lsm")
    p = dsub.add_parser("auto")
    p.add_argument("--env", required=True)
    p.add_argument("--mix", required=True)
    p.add_argument("--full-kz-sweep", action="store_true")

    workload = sub.add_parser("workload", help="trace generation")
    wsub = workload.add_subparsers(dest="workload_command", required=True)
    p = wsub.add_parser("gen")
    p.add_argument("--spec", required=True, help="workload spec JSON (inline or path)")
    p.add_argument("--seed", type=int, help="override the workload seed")
    p.add_argument("--out", help="trace file (JSON lines); stdout when omitted")

    p = sub.add_parser("simulate", help="run a trace against the simulator")
    p.add_argument("--env", required=True)
    p.add_argument("--spec", help="generate the trace from this spec")
    p.add_argument("--trace", help="or replay a saved trace file")
    p.add_argument("--sim", help="simulator config JSON overrides")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="simplex grid sweep")
    p.add_argument("--env", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--resolution", type=int, default=15)
    p.add_argument("--sim", help="simulator config JSON overrides")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path; stdout when omitted")

    p = sub.add_parser("sgd", help="discrete gradient descent on the memory simplex")
    p.add_argument("--env", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--start", required=True, help='{"cache_bits":..,"buffer_bits":..,"bloom_bits":..}')
    p.add_argument("--step-bits", type=int, default=64)
    p.add_argument("--sim", help="simulator config JSON overrides")

    p = sub.add_parser("validate", help="paired-simulation gradient validation")
    p.add_argument("--env", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--trials", type=int, default=64)
    p.add_argument("--delta-bits", type=int, default=64)
    p.add_argument("--sim", help="simulator config JSON overrides")
    p.add_argument("--jobs", type=int, default=1)

    transition = sub.add_parser("transition", help="layout transition planning and execution")
    tsub = transition.add_subparsers(dest="transition_command", required=True)
    p = tsub.add_parser("plan")
    p.add_argument("--levels", required=True, help="comma-separated entries per level, smallest first")
    p.add_argument("--entry-bytes", type=int, required=True)
    p.add_argument("--page-bytes", type=int, required=True)
    p.add_argument("--phi", type=float, default=1.0, help="write/read cost ratio")
    p.add_argument("--buffer-bytes", type=int, default=0)
    p.add_argument("--gradual-pages", type=int, help="emit a gradual plan with k pages per step")
    p = tsub.add_parser("exec")
    p.add_argument("--snapshot", required=True, help="SimState snapshot JSON file")
    p.add_argument("--strategy", choices=("auto", "sort_merge", "batch_insert"), default="auto")
    p.add_argument("--phi", type=float, default=1.0)
    p = tsub.add_parser("hybrid")
    p.add_argument("--env", required=True)
    p.add_argument("--phase-ops", type=int, default=2000)
    p.add_argument("--initial-keys", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="HTTP JSON API (and the web explorer, when built)")
    p.add_argument("--port", type=int, default=8731)
    p.add_argument("--static", help="static bundle directory (webui/dist)")

    return parser


def _sim_config(env: Environment, overrides: dict, seed: int) -> SimConfig:
    kwargs = dict(growth_factor=2, seed=seed)
    kwargs.update(overrides)
    return SimConfig(env=env, **kwargs)


def _cmd_design(args, handlers, pretty: bool) -> int:
    body: dict = {"env": _load_json_arg(args.env, "--env")}
    if args.design_command in ("instantiate", "cost"):
        if args.preset:
            body["preset"] = args.preset
        elif args.knobs:
            body["knobs"] = _load_json_arg(args.knobs, "--knobs")
        else:
            raise DomainError("one of --preset or --knobs is required")
        if args.mix:
            body["mix"] = _load_json_arg(args.mix, "--mix")
        body["range_selectivity"] = args.selectivity
        payload = handlers["cost"](body)
        if pretty:
            rows = [(k, f"{v:.6g}") for k, v in sorted(payload["cost"].items())]
            print(_table(rows, ("metric", "I/Os")))
            print()
        _emit(payload, pretty)
    elif args.design_command == "navigate":
        body["mix"] = _load_json_arg(args.mix, "--mix")
        if args.start:
            body["start"] = _load_json_arg(args.start, "--start")
        else:
            from .continuum import preset as make_preset
            env = Environment.from_json(body["env"])
            body["start"] = make_preset("lazy_leveled_lsm", env).to_json()
        _emit(handlers["navigate"](body), pretty)
    else:
        body["mix"] = _load_json_arg(args.mix, "--mix")
        body["full_kz_sweep"] = args.full_kz_sweep
        _emit(handlers["auto"](body), pretty)
    return 0


def _cmd_workload(args, pretty: bool) -> int:
    spec_data = _load_json_arg(args.spec, "--spec")
    if args.seed is not None:
        spec_data["seed"] = args.seed
    spec = WorkloadSpec.from_json(spec_data)
    trace = generate(spec)
    if args.out:
        write_trace(args.out, trace)
        _emit({"ops": len(trace), "path": args.out}, pretty)
    else:
        for op in trace:
            sys.stdout.write(json.dumps({"op": op.op, "key": op.key},
                                        separators=(",", ":")) + "\n")
    return 0


def _cmd_simulate(args, pretty: bool) -> int:
    env = Environment.from_json(_load_json_arg(args.env, "--env"))
    overrides = _load_json_arg(args.sim, "--sim") if args.sim else {}
    config = _sim_config(env, overrides, args.seed)
    if args.spec:
        trace = generate(WorkloadSpec.from_json(_load_json_arg(args.spec, "--spec")))
    elif args.trace:
        trace = read_trace(args.trace)
    else:
        raise DomainError("one of --spec or --trace is required")
    stats = run_trace(config, trace)
    _emit(stats.to_json(), pretty)
    return 0


def _cmd_sweep(args, pretty: bool) -> int:
    from .gradients import grid_sweep

    env = Environment.from_json(_load_json_arg(args.env, "--env"))
    spec = WorkloadSpec.from_json(_load_json_arg(args.spec, "--spec"))
    overrides = _load_json_arg(args.sim, "--sim") if args.sim else {}
    base = _sim_config(env, overrides, overrides.get("seed", spec.seed))
    print(f"sweeping {args.resolution}-resolution simplex "
          f"({args.resolution * (args.resolution + 1) // 2} cells)", file=sys.stderr)
    rows = grid_sweep(spec, env, args.resolution, base_config=base, jobs=args.jobs)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cache_frac", "buffer_frac", "bloom_frac", "total_io",
                     "arrow_from", "arrow_to"])
    for r in rows:
        writer.writerow([f"{r['cache_frac']:.6g}", f"{r['buffer_frac']:.6g}",
                         f"{r['bloom_frac']:.6g}", r["total_io"],
                         r["arrow_from"], r["arrow_to"]])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _cmd_sgd(args, handlers, pretty: bool) -> int:
    body = {
        "env": _load_json_arg(args.env, "--env"),
        "spec": _load_json_arg(args.spec, "--spec"),
        "start": _load_json_arg(args.start, "--start"),
        "step_bits": args.step_bits,
    }
    if args.sim:
        body["sim"] = _load_json_arg(args.sim, "--sim")
    print(f"descending from {body['start']} in {args.step_bits}-bit steps",
          file=sys.stderr)
    payload = handlers["sgd"](body)
    print(f"stopped after {len(payload['trajectory'])} points", file=sys.stderr)
    _emit(payload, pretty)
    return 0


def _cmd_validate(args, pretty: bool) -> int:
    from .gradients import validate_gradients

    env = Environment.from_json(_load_json_arg(args.env, "--env"))
    spec = WorkloadSpec.from_json(_load_json_arg(args.spec, "--spec"))
    overrides = _load_json_arg(args.sim, "--sim") if args.sim else {}
    base = _sim_config(env, overrides, overrides.get("seed", spec.seed))
    report = validate_gradients(spec, env, args.trials, base_config=base,
                                delta_bits=args.delta_bits, jobs=args.jobs)
    payload = {comp: {"estimated_mean": r["estimated_mean"],
                      "actual_mean": r["actual_mean"],
                      "ci95": list(r["ci95"]),
                      "actual_std": r["actual_std"]}
               for comp, r in report.items()}
    _emit(payload, pretty)
    return 0


def _cmd_transition(args, handlers, pretty: bool) -> int:
    from .transitions import (
        TransitionState,
        choose_strategy,
        execute_lsm_to_btree,
        hybrid_benefit,
        plan_gradual,
        transition_costs,
    )

    if args.transition_command == "plan":
        levels = tuple(int(x) for x in args.levels.split(","))
        state = TransitionState(level_entries=levels, entry_bytes=args.entry_bytes,
                                page_bytes=args.page_bytes,
                                write_read_ratio=args.phi,
                                buffer_bytes=args.buffer_bytes)
        payload = {"costs": transition_costs(state), "strategy": choose_strategy(state)}
        if args.gradual_pages:
            payload["gradual"] = plan_gradual(state, args.gradual_pages).to_json()
        _emit(payload, pretty)
    elif args.transition_command == "exec":
        from .simulator import SimState

        snap = _load_json_arg(args.snapshot, "--snapshot")
        sim = SimState.from_snapshot(snap)
        from .transitions import sim_state_to_transition_state

        t_state = sim_state_to_transition_state(sim, args.phi)
        strategy = args.strategy
        if strategy == "auto":
            strategy = choose_strategy(t_state)
        btree, measured = execute_lsm_to_btree(sim, strategy, args.phi)
        _emit({"strategy": strategy, "measured": measured,
               "planned": transition_costs(t_state),
               "leaf_pages": len(btree.leaves)}, pretty)
    else:
        env = Environment.from_json(_load_json_arg(args.env, "--env"))
        payload = _run_hybrid_scenario(env, args.phase_ops, args.initial_keys, args.seed)
        _emit(payload, pretty)
    return 0


def _run_hybrid_scenario(env: Environment, phase_ops: int, initial_keys: int,
                         seed: int) -> dict:
    """The two-phase scenario: short-range-scan heavy, then write heavy."""
    from .rng import SplitMix64
    from .transitions import PhaseOp, hybrid_benefit

    rng = SplitMix64(seed)
    keys = list(range(initial_keys))
    next_key = initial_keys
    # Scans dominate phase one, but the trickle of inserts keeps the LSM
    # side fragmented across runs, which is what scans pay for there.
    scan_phase = []
    for _ in range(phase_ops):
        r = rng.random()
        if r < 0.7:
            scan_phase.append(PhaseOp("scan", rng.randint(initial_keys), pages=2))
        elif r < 0.9:
            scan_phase.append(PhaseOp("read", rng.randint(initial_keys)))
        else:
            scan_phase.append(PhaseOp("insert", next_key))
            next_key += 1
    write_phase = []
    for _ in range(phase_ops):
        if rng.random() < 0.8:
            write_phase.append(PhaseOp("insert", next_key))
            next_key += 1
        else:
            write_phase.append(PhaseOp("read", rng.randint(next_key)))
    config = SimConfig(env=env, growth_factor=2,
                       buffer_bits=64 * env.entry_bits, seed=seed)
    return hybrid_benefit([scan_phase, write_phase], keys, config)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = request_handlers()
    pretty = args.pretty
    try:
        if args.command == "design":
            return _cmd_design(args, handlers, pretty)
        if args.command == "workload":
            return _cmd_workload(args, pretty)
        if args.command == "simulate":
            return _cmd_simulate(args, pretty)
        if args.command == "sweep":
            return _cmd_sweep(args, pretty)
        if args.command == "sgd":
            return _cmd_sgd(args, handlers, pretty)
        if args.command == "validate":
            return _cmd_validate(args, pretty)
        if args.command == "transition":
            return _cmd_transition(args, handlers, pretty)
        if args.command == "serve":
            from .server import serve

            serve(args.port, args.static)
            return 0
    except _DOMAIN_ERRORS as exc:
        message = exc.args[0] if exc.args else str(exc)
        sys.stderr.write(canonical_json({"error": str(message)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
