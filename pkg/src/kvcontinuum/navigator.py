"""Navigating the design space: workload-weighted cost and knob search.

theta weights the five cost metrics by the workload mix. navigate moves
one knob at a time, picked from the dominant cost term, monotonically and
without backtracking. auto_design sweeps exponentially spaced grids over
all knobs and the memory split.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .continuum import (
    CostVector,
    DesignKnobs,
    DomainError,
    Environment,
    PRESET_NAMES,
    cost,
    preset,
)


@dataclass(frozen=True)
class WorkloadMix:
    """Operation proportions: zero-result reads, point reads, short and
    long ranges, updates. Must sum to one."""

    zero_point_frac: float = 0.0
    point_frac: float = 0.0
    short_range_frac: float = 0.0
    long_range_frac: float = 0.0
    update_frac: float = 0.0

    def __post_init__(self):
        vals = [getattr(self, f.name) for f in fields(self)]
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise DomainError("mix fractions must be in [0, 1]")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise DomainError(f"mix fractions must sum to 1 (got {sum(vals)!r})")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, data: dict) -> "WorkloadMix":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise DomainError(f"mix: unknown field(s) {', '.join(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class NavigationTrace:
    steps: tuple          # ((knobs, theta), ...)
    final: DesignKnobs

    def to_json(self) -> dict:
        return {
            "steps": [{"knobs": k.to_json(), "theta": t} for k, t in self.steps],
            "final": self.final.to_json(),
        }


def theta(costs: CostVector, mix: WorkloadMix) -> float:
    """Average operation cost: r*R + v*V + q*Q + c*C + w*W."""
    return (mix.zero_point_frac * costs.zero_point_read
            + mix.point_frac * costs.point_read
            + mix.short_range_frac * costs.short_range
            + mix.long_range_frac * costs.long_range
            + mix.update_frac * costs.update)


def _theta_terms(costs: CostVector, mix: WorkloadMix) -> list:
    """(term_name, weighted value) in the documented order R, V, Q, C, W."""
    return [
        ("zero_point_read", mix.zero_point_frac * costs.zero_point_read),
        ("point_read", mix.point_frac * costs.point_read),
        ("short_range", mix.short_range_frac * costs.short_range),
        ("long_range", mix.long_range_frac * costs.long_range),
        ("update", mix.update_frac * costs.update),
    ]


def _try_theta(env, knobs, mix, selectivity) -> float | None:
    try:
        return theta(cost(env, knobs, selectivity), mix)
    except DomainError:
        return None


def _replace(knobs: DesignKnobs, **changes) -> DesignKnobs:
    data = knobs.to_json()
    data.update(changes)
    return DesignKnobs(**data)


def _steps_toward(current: int, bound: int) -> list:
    """Exponentially thinned integer ladder from current (exclusive) to the
    bound (inclusive), nearest first."""
    if bound == current:
        return []
    sign = 1 if bound > current else -1
    ladder = []
    stride = 1
    v = current
    while (bound - v) * sign > 0:
        v = v + sign * stride
        if (bound - v) * sign < 0:
            v = bound
        ladder.append(v)
        stride *= 2
    if ladder[-1] != bound:
        ladder.append(bound)
    return ladder


def _move_ladder(env: Environment, knobs: DesignKnobs, knob: str, direction: int) -> list:
    """All candidate knob settings along one direction, nearest first.
    A line search over the ladder rides out ceiling plateaus (e.g. D must
    quadruple before L drops)."""
    t = knobs.growth_factor
    out = []
    if knob == "Z":
        bound = t - 1 if direction > 0 else 1
        for z in _steps_toward(knobs.cold_merge_threshold, bound):
            out.append(_replace(knobs, cold_merge_threshold=z))
    elif knob == "K":
        bound = t - 1 if direction > 0 else 1
        for k in _steps_toward(knobs.hot_merge_threshold, bound):
            out.append(_replace(knobs, hot_merge_threshold=k))
    elif knob == "T":
        t_max = int(env.n_entries * env.entry_bits / knobs.buffer_memory_bits)
        new_t = t
        while True:
            new_t = new_t * 2 if direction > 0 else new_t // 2
            if not 2 <= new_t <= t_max:
                break
            # Thresholds sitting at the T-1 bound ride it as T moves.
            k = new_t - 1 if knobs.hot_merge_threshold == t - 1 \
                else min(knobs.hot_merge_threshold, new_t - 1)
            z = new_t - 1 if knobs.cold_merge_threshold == t - 1 \
                else min(knobs.cold_merge_threshold, new_t - 1)
            out.append(_replace(knobs, growth_factor=new_t,
                                hot_merge_threshold=k, cold_merge_threshold=z))
    elif knob == "D":
        d = knobs.node_size_pages
        while True:
            d = d * 2 if direction > 0 else d // 2
            if d < 1:
                break
            node_bits = d * env.entries_per_page * env.entry_bits
            grow = max(0, node_bits - knobs.buffer_memory_bits)
            if grow > knobs.fence_filter_memory_bits:
                break
            # Larger nodes need a buffer of at least one node; top it up
            # from the fence/filter budget.
            out.append(_replace(knobs, node_size_pages=d,
                                buffer_memory_bits=knobs.buffer_memory_bits + grow,
                                fence_filter_memory_bits=knobs.fence_filter_memory_bits - grow))
            if d > env.n_entries // env.entries_per_page:
                break
    elif knob == "MEM":
        node_bits = knobs.node_size_pages * env.entries_per_page * env.entry_bits
        m_b, m_f = knobs.buffer_memory_bits, knobs.fence_filter_memory_bits
        for _ in range(40):
            if direction > 0:
                shift = min(m_b // 2, m_b - node_bits)
            else:
                shift = m_f // 2
            if shift <= 0:
                break
            if direction > 0:
                m_b, m_f = m_b - shift, m_f + shift
            else:
                m_b, m_f = m_b + shift, m_f - shift
            out.append(_replace(knobs, buffer_memory_bits=m_b,
                                fence_filter_memory_bits=m_f))
    return out


# Scenario table: dominant cost term -> ordered (knob, direction) moves.
# Update pressure relaxes merging (Z up, then T up); short ranges tighten
# hot merging (K down, then T up); point reads rebalance memory toward
# fences and filters. Depth reduction through larger nodes is the shared
# last resort for every bottleneck.
_BOTTLENECK_MOVES = {
    "update": (("Z", +1), ("T", +1), ("D", +1)),
    "short_range": (("K", -1), ("T", +1), ("D", +1)),
    "zero_point_read": (("MEM", +1), ("T", -1), ("D", +1)),
    "point_read": (("MEM", +1), ("T", -1), ("D", +1)),
    "long_range": (("T", +1), ("K", -1), ("D", +1)),
}


def navigate(env: Environment, mix: WorkloadMix, start: DesignKnobs,
             range_selectivity: float = 0.001) -> NavigationTrace:
    """Greedy coordinate descent from the dominant theta term.

    Each (knob, direction) pair is walked monotonically while theta
    improves and never revisited, so the trace has no backtracking and
    theta is non-increasing along it.
    """
    current = start
    current_theta = _try_theta(env, start, mix, range_selectivity)
    if current_theta is None:
        raise DomainError("starting knobs are outside their domain")
    steps = [(current, current_theta)]
    used: set = set()

    while True:
        ranked = sorted(_theta_terms(cost(env, current, range_selectivity), mix),
                        key=lambda kv: -kv[1])
        moved = False
        for term, weight in ranked:
            if weight <= 0:
                break
            for move in _BOTTLENECK_MOVES[term]:
                if move in used:
                    continue
                used.add(move)
                # Line search along this direction: take the prefix that
                # minimizes theta, recording each strict improvement.
                improved = False
                while True:
                    ladder = _move_ladder(env, current, *move)
                    best = None
                    for cand in ladder:
                        cand_theta = _try_theta(env, cand, mix, range_selectivity)
                        if cand_theta is None:
                            continue
                        if cand_theta < current_theta - 1e-12 and \
                                (best is None or cand_theta < best[1] - 1e-12):
                            best = (cand, cand_theta)
                    if best is None:
                        break
                    current, current_theta = best
                    steps.append(best)
                    improved = moved = True
                if improved:
                    break
            if moved:
                break
        if not moved:
            break
    return NavigationTrace(steps=tuple(steps), final=current)


def _exp_ints(lo: int, hi: int) -> list:
    vals = []
    v = lo
    while v <= hi:
        vals.append(v)
        v *= 2
    if vals and vals[-1] != hi and hi >= lo:
        vals.append(hi)
    return vals


def auto_design(env: Environment, mix: WorkloadMix,
                range_selectivity: float = 0.001,
                full_kz_sweep: bool = False,
                d_grid=(1, 2, 4, 8),
                split_steps: int = 8) -> tuple:
    """Pruned exhaustive search.

    T runs over exponentially spaced integers up to the extended maximum
    (N*E)/M_B for the current split; the M_F/M_B split over exponentially
    spaced fractions; K and Z over {1, T-1} (or the full range with
    full_kz_sweep); D over powers of two. The eight presets are included as
    candidates, so the result is never worse than any of them. Ties break
    toward smaller T, K, Z, D.
    """
    n, e = env.n_entries, env.entry_bits
    m = env.total_memory_bits
    best: tuple | None = None

    def consider(knobs: DesignKnobs):
        nonlocal best
        th = _try_theta(env, knobs, mix, range_selectivity)
        if th is None:
            return
        key = (th, knobs.growth_factor, knobs.hot_merge_threshold,
               knobs.cold_merge_threshold, knobs.node_size_pages,
               knobs.buffer_memory_bits)
        if best is None or key < best[0]:
            best = (key, knobs)

    for name in PRESET_NAMES:
        try:
            consider(preset(name, env))
        except DomainError:
            continue

    splits = [2 ** -i for i in range(1, split_steps + 1)]
    for frac in splits:
        for d in d_grid:
            node_bits = d * env.entries_per_page * env.entry_bits
            m_b = max(int(m * frac), node_bits)
            m_f = m - m_b
            if m_f <= 0:
                continue
            t_max = (n * e) // m_b
            for t in _exp_ints(2, max(2, t_max)):
                kz_domain = range(1, t) if full_kz_sweep else sorted({1, t - 1})
                for k in kz_domain:
                    for z in kz_domain:
                        consider(DesignKnobs(
                            growth_factor=t,
                            hot_merge_threshold=k,
                            cold_merge_threshold=z,
                            node_size_pages=d,
                            fence_filter_memory_bits=m_f,
                            buffer_memory_bits=m_b,
                        ))
    return _finish(best)


def _finish(best):
    if best is None:
        raise DomainError("no feasible design in the search grid")
    return best[1], best[0][0]
