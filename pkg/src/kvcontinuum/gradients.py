"""Memory-allocation tuning from O(1) simulation statistics.

Estimates the I/O saved by growing each memory component (cache, write
buffer, bloom filters) using only counters kept during a run, sweeps the
constrained memory simplex, follows the estimated gradients in discrete
steps, checks per-level filter reallocation, and validates the estimators
against paired simulations.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .continuum import FPR_BASE, Environment
from .simulator import SimConfig, IOStats, bloom_bit_allocation, run_trace
from .workloads import WorkloadSpec, generate

COMPONENTS = ("cache", "buffer", "bloom")


class EmptyStats(ValueError):
    pass


@dataclass(frozen=True)
class MemoryPoint:
    cache_bits: int
    buffer_bits: int
    bloom_bits: int

    def total(self) -> int:
        return self.cache_bits + self.buffer_bits + self.bloom_bits

    def get(self, component: str) -> int:
        return getattr(self, f"{component}_bits")

    def moved(self, src: str, dst: str, bits: int) -> "MemoryPoint":
        data = {c: self.get(c) for c in COMPONENTS}
        data[src] -= bits
        data[dst] += bits
        return MemoryPoint(**{f"{c}_bits": data[c] for c in COMPONENTS})

    def to_json(self) -> dict:
        return {"cache_bits": self.cache_bits, "buffer_bits": self.buffer_bits,
                "bloom_bits": self.bloom_bits}


@dataclass(frozen=True)
class GradientEstimate:
    """Expected I/O savings from adding delta_bits to each component."""

    cache_savings: float
    buffer_read_savings: float
    buffer_write_savings: float
    bloom_savings: float
    per_level_bloom_savings: dict
    delta_bits: int

    @property
    def buffer_savings(self) -> float:
        return self.buffer_read_savings + self.buffer_write_savings

    def component(self, name: str) -> float:
        if name == "cache":
            return self.cache_savings
        if name == "buffer":
            return self.buffer_savings
        return self.bloom_savings

    def to_json(self) -> dict:
        return {
            "cache_savings": self.cache_savings,
            "buffer_read_savings": self.buffer_read_savings,
            "buffer_write_savings": self.buffer_write_savings,
            "bloom_savings": self.bloom_savings,
            "per_level_bloom_savings": {str(k): v for k, v in
                                        sorted(self.per_level_bloom_savings.items())},
            "delta_bits": self.delta_bits,
        }


def _count_merge_io(arrivals: int, buffer_entries: int, config: SimConfig,
                    dup_pct: dict) -> float:
    """Deterministic page-I/O replay of the flush/merge arithmetic for a
    hypothetical buffer size, adjusted by the observed per-level duplicate
    percentages. Pure counting; mirrors the simulator's merge policy,
    including how many of the arriving entries ever flush."""
    b = config.env.entries_per_page
    t = config.growth_factor
    k, z = config.hot_merge_threshold, config.cold_merge_threshold
    buffer_entries = max(buffer_entries, 1)
    nominal = max(1, math.ceil(
        math.log(config.env.n_entries * (t - 1) / buffer_entries + 1, t) - 1e-9))
    io = 0.0
    levels: list[list[float]] = [[]]

    def push(index: int, entries: float) -> float:
        nonlocal io
        while index >= len(levels):
            levels.append([])
        level = levels[index]
        level.append(entries)
        allowed = k if index + 1 < nominal - config.cold_levels else z
        cap = buffer_entries * t ** (index + 1)
        charged = 0.0
        if len(level) > allowed or sum(level) >= cap:
            if len(level) > 1:
                inputs = sum(level)
                out = inputs * (1.0 - dup_pct.get(index + 1, 0.0))
                pages = sum(math.ceil(x / b) for x in level) + math.ceil(out / b)
                io += pages
                charged += pages
                level[:] = [out]
            if level and sum(level) >= cap:
                moved = level.pop()
                charged += push(index + 1, moved)
        return charged

    for _ in range(arrivals // buffer_entries):
        io += math.ceil(buffer_entries / b)  # flush write
        push(0, float(buffer_entries))
    return io


def estimate_gradients(stats: IOStats, config: SimConfig,
                       delta_bits: int | None = None) -> GradientEstimate:
    """The four estimators, computed from the stored statistics only.

    cache: extra entries * last-slot hit count * mean read cost.
    bloom: sum over levels of (rolling FPR at m minus at m+share) times the
      count of lookups the filter could have rejected.
    buffer reads: per level, extra hits proportional to the level growth
      dM*T^i, each saving the level's empirical false positive rate (one
      full I/O at the buffer itself).
    buffer writes: counting replay of the merge arithmetic at the enlarged
      buffer (duplicate-adjusted for T=2, the no-duplicate closed form
      otherwise).
    """
    if stats.query_count + stats.inserts_total == 0:
        raise EmptyStats("no operations recorded")
    if delta_bits is None:
        delta_bits = config.grad_delta_bits
    env = config.env
    e = env.entry_bits

    avg_read_cost = stats.read_io / stats.query_count if stats.query_count else 0.0
    cache_savings = (delta_bits / e) * stats.last_cache_slot_hits * avg_read_cost

    per_level_bloom = {}
    use_rolling = delta_bits == config.grad_delta_bits or not stats.n_histograms
    if not use_rolling:
        # The per-query n histograms support evaluating the rolling
        # statistic at any hypothetical allocation after the fact.
        bits_now = bloom_bit_allocation(config)
        bits_delta = bloom_bit_allocation(config, config.bloom_bits + delta_bits)
    for level, n_false in sorted(stats.bloom_false_events.items()):
        if use_rolling:
            scale = delta_bits / config.grad_delta_bits
            fp_now = stats.rolling_fpr(level)
            fp_delta = stats.rolling_fpr_delta(level)
            per_level_bloom[level] = (fp_now - fp_delta) * n_false * scale
        else:
            hist = stats.n_histograms.get(level, {})
            m_now = bits_now[level - 1] if level - 1 < len(bits_now) else 0.0
            m_new = bits_delta[level - 1] if level - 1 < len(bits_delta) else 0.0
            per_level_bloom[level] = (_hist_fpr(hist, m_now) - _hist_fpr(hist, m_new)) * n_false
    bloom_savings = sum(per_level_bloom.values())

    # Level 0: extra buffer slots see what the oldest occupied slot saw,
    # saving a full I/O per hit. The buffer drains wholesale, so marginal
    # capacity is occupied half a fill cycle on average (hence the 1/2); a
    # buffer that never filled gains nothing from more slack. Deeper
    # levels grow by dM*T^i entries whose hits save that level's
    # empirical FP rate.
    if stats.total_entries_through.get(1, 0) > 0:
        buffer_read = 0.5 * (delta_bits / e) * stats.buffer_last_slot_hits
    else:
        buffer_read = 0.0
    for level, hits in sorted(stats.hits_per_level.items()):
        if level == 0:
            continue
        accesses = stats.bloom_accesses.get(level, 0)
        if accesses == 0:
            continue
        fp_rate = stats.bloom_fp_events.get(level, 0) / accesses
        size_bits = config.level_capacity(level) * e
        extra_hits = hits * (delta_bits * config.growth_factor ** level / size_bits)
        buffer_read += extra_hits * fp_rate

    dup_pct = {}
    for level, through in stats.total_entries_through.items():
        if through > 0:
            dup_pct[level] = min(stats.duplicates_removed.get(level, 0) / through, 1.0)
    cap_entries = max(config.buffer_capacity_entries, 1)
    extra_entries = delta_bits // e
    # The buffer absorbs duplicate updates in place, so the stream the
    # merge hierarchy sees is the count of new-key arrivals; the replay
    # derives flush boundaries from it for each capacity.
    arrivals = stats.buffer_arrivals
    if arrivals == 0 or extra_entries == 0:
        buffer_write = 0.0
    elif config.growth_factor == 2:
        buffer_write = (_count_merge_io(arrivals, cap_entries, config, dup_pct)
                        - _count_merge_io(arrivals, cap_entries + extra_entries,
                                          config, dup_pct))
    else:
        # No-duplicate closed form: arrivals/B * log_T((C + dC)/C).
        buffer_write = (arrivals / env.entries_per_page
                        * math.log((cap_entries + extra_entries) / cap_entries)
                        / math.log(config.growth_factor))

    return GradientEstimate(
        cache_savings=cache_savings,
        buffer_read_savings=buffer_read,
        buffer_write_savings=buffer_write,
        bloom_savings=bloom_savings,
        per_level_bloom_savings=per_level_bloom,
        delta_bits=delta_bits,
    )


# -- simplex sweep ---------------------------------------------------------


def simplex_lattice(resolution: int) -> list:
    """Barycentric lattice with `resolution` points per edge (corners
    included): all non-negative integer triples summing to resolution-1."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    n = resolution - 1
    points = []
    for a in range(n, -1, -1):
        for b_ in range(n - a, -1, -1):
            points.append((a, b_, n - a - b_))
    return points


def _config_at(env: Environment, base: SimConfig, point: MemoryPoint) -> SimConfig:
    return replace(base, cache_bits=point.cache_bits, buffer_bits=point.buffer_bits,
                   bloom_bits=point.bloom_bits)


def gradient_field(stats: IOStats, config: SimConfig, move_bits: int | None = None) -> dict:
    """Per-bit I/O derivatives for each component at a move quantum.

    up[c] estimates the savings rate from growing c by move_bits; down[c]
    the loss rate from shrinking it by the same amount (they differ at
    page seams, so both sides are evaluated). Cache extrapolation is
    capped by the reads that actually paid I/O; a component's removal
    can never "save" (negative losses clamp to zero).
    """
    env = config.env
    e = env.entry_bits
    if move_bits is None:
        move_bits = env.entries_per_page * e
    move_bits = max(move_bits, e)

    avg_read_cost = stats.read_io / stats.query_count if stats.query_count else 0.0
    deep_hits = sum(v for lvl, v in stats.hits_per_level.items() if lvl >= 1)
    # Tail-slot rate, variance-stabilized: under LRU the coldest slot's
    # rate never exceeds the per-slot average, and the raw single-slot
    # count is Poisson noise at desk scale.
    cache_entries = max(config.cache_capacity_entries, 1)
    slot_rate = min(stats.cache_hits / cache_entries, float(stats.last_cache_slot_hits))
    cache_hits_linear = (move_bits / e) * slot_rate
    cache_up = min(cache_hits_linear, deep_hits) * avg_read_cost / move_bits
    cache_down = cache_up

    # Buffer: merge-arithmetic replay both directions, plus the oldest-slot
    # read term (sawtooth-mean occupancy of marginal capacity).
    cap = max(config.buffer_capacity_entries, 1)
    grow = move_bits // e
    shrink = min(grow, cap - 1)
    dup_pct = {}
    for level, through in stats.total_entries_through.items():
        if through > 0:
            dup_pct[level] = min(stats.duplicates_removed.get(level, 0) / through, 1.0)

    def replay(entries: int) -> float:
        if not stats.buffer_arrivals:
            return 0.0
        if config.growth_factor == 2:
            return _count_merge_io(stats.buffer_arrivals, entries, config, dup_pct)
        return (stats.buffer_arrivals / env.entries_per_page
                * math.log(max(stats.buffer_arrivals / entries, 1.000001))
                / math.log(config.growth_factor))

    def level_growth_reads(bits: int) -> float:
        """Read I/Os tied to the structure shift when the buffer changes by
        `bits`: every level grows by T^i of it, and hits on the shifted
        entries save (or pay) that level's empirical false positive rate."""
        gain = 0.0
        for level, hits in stats.hits_per_level.items():
            if level == 0:
                continue
            accesses = stats.bloom_accesses.get(level, 0)
            if accesses == 0:
                continue
            fp_rate = stats.bloom_fp_events.get(level, 0) / accesses
            size_bits = config.level_capacity(level) * e
            gain += hits * (bits * config.growth_factor ** level / size_bits) * fp_rate
        return gain

    io_now = replay(cap)
    flushed = stats.total_entries_through.get(1, 0) > 0
    slot_term = 0.5 * stats.buffer_last_slot_hits if flushed else 0.0
    up_gain = (io_now - replay(cap + grow)) + slot_term * grow \
        + level_growth_reads(move_bits)
    buffer_up = up_gain / move_bits
    if shrink > 0:
        down_loss = (replay(cap - shrink) - io_now) + slot_term * shrink \
            + level_growth_reads(shrink * e)
        buffer_down = down_loss / (shrink * e)
    else:
        buffer_down = 0.0

    # Filters: histogram re-evaluation at shifted allocations.
    def bloom_delta(total_bits: int) -> float:
        bits_now = bloom_bit_allocation(config)
        bits_new = bloom_bit_allocation(config, total_bits)
        diff = 0.0
        for level, n_false in stats.bloom_false_events.items():
            hist = stats.n_histograms.get(level, {})
            if not hist:
                continue
            m_now = bits_now[level - 1] if level - 1 < len(bits_now) else 0.0
            m_new = bits_new[level - 1] if level - 1 < len(bits_new) else 0.0
            diff += (_hist_fpr(hist, m_now) - _hist_fpr(hist, m_new)) * n_false
        return diff

    if stats.n_histograms:
        bloom_up = bloom_delta(config.bloom_bits + move_bits) / move_bits
        shrink_bits = min(move_bits, config.bloom_bits)
        bloom_down = (-bloom_delta(config.bloom_bits - shrink_bits) / shrink_bits
                      if shrink_bits else 0.0)
    else:
        est = estimate_gradients(stats, config, delta_bits=move_bits)
        bloom_up = bloom_down = est.bloom_savings / move_bits

    up = {"cache": cache_up, "buffer": buffer_up, "bloom": bloom_up}
    down = {"cache": max(cache_down, 0.0), "buffer": max(buffer_down, 0.0),
            "bloom": max(bloom_down, 0.0)}
    return {"up": up, "down": down}


def pick_arrow(field: dict, point=None, require_net_gain: bool = False) -> tuple:
    """(src, dst) of the move with the best estimated net saving.

    Components already at zero cannot source bits and the destination
    must have a positive gain rate; where no component gains, the point
    has no outward arrow and returns (None, None). With require_net_gain
    the move must also beat the source's estimated loss, which makes the
    walk stop at its estimated optimum instead of coasting to an edge.
    """
    up, down = field["up"], field["down"]
    sources = [c for c in COMPONENTS if point is None or point.get(c) > 0]
    best = None
    for s in sources:
        for d in COMPONENTS:
            if s == d or up[d] <= 0:
                continue
            net = up[d] - down[s]
            if best is None or net > best[0]:
                best = (net, s, d)
    if best is None or (require_net_gain and best[0] <= 0):
        return None, None
    return best[1], best[2]


def _sweep_cell(args):
    spec_json, env_json, base_kwargs, cell, point_bits, cell_bits = args
    spec = WorkloadSpec.from_json(spec_json)
    env = Environment.from_json(env_json)
    base = SimConfig(env=env, **base_kwargs)
    point = MemoryPoint(*point_bits)
    config = _config_at(env, base, point)
    stats = run_trace(config, generate(spec))
    field = gradient_field(stats, config, move_bits=cell_bits)
    src, dst = pick_arrow(field, point)
    arrow_from = src if src is not None else "none"
    arrow_to = dst if dst is not None else "none"
    return cell, point_bits, stats.total_io(), arrow_from, arrow_to, field


def grid_sweep(spec: WorkloadSpec, env: Environment, resolution: int,
               base_config: SimConfig | None = None,
               total_bits: int | None = None,
               jobs: int = 1) -> list:
    """Simulate every simplex lattice point with the same trace and seed.

    Returns one row per cell: fractions, bit allocation, total I/O, and the
    gradient arrow (lowest component -> highest component).
    """
    if base_config is None:
        base_config = SimConfig(env=env, growth_factor=2, seed=spec.seed)
    if total_bits is None:
        total_bits = env.total_memory_bits
    n = resolution - 1
    cells = simplex_lattice(resolution)
    tasks = []
    base_kwargs = dict(
        growth_factor=base_config.growth_factor,
        hot_merge_threshold=base_config.hot_merge_threshold,
        cold_merge_threshold=base_config.cold_merge_threshold,
        bloom_allocation=base_config.bloom_allocation,
        fpr_mode=base_config.fpr_mode,
        cold_levels=base_config.cold_levels,
        seed=base_config.seed,
        grad_delta_bits=base_config.grad_delta_bits,
    )
    for cell in cells:
        bits = tuple(total_bits * c // n for c in cell)
        tasks.append((spec.to_json(), env.to_json(), base_kwargs, cell, bits,
                      total_bits // n))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, tasks))
    else:
        results = [_sweep_cell(t) for t in tasks]

    rows = []
    for cell, bits, total_io, arrow_from, arrow_to, comps in results:
        rows.append({
            "cache_frac": cell[0] / n,
            "buffer_frac": cell[1] / n,
            "bloom_frac": cell[2] / n,
            "cell": cell,
            "cache_bits": bits[0],
            "buffer_bits": bits[1],
            "bloom_bits": bits[2],
            "total_io": total_io,
            "arrow_from": arrow_from,
            "arrow_to": arrow_to,
            "gradients": comps,
        })
    return rows


def follow_arrows(rows, start_cell) -> list:
    """Walk the sweep lattice from a start cell, moving one lattice unit
    from the arrow's source component to its target, until there is no
    arrow, the move leaves the simplex, or a cell repeats. Returns the
    visited cells."""
    by_cell = {tuple(r["cell"]): r for r in rows}
    path = [tuple(start_cell)]
    visited = {tuple(start_cell)}
    current = tuple(start_cell)
    while True:
        row = by_cell[current]
        if row["arrow_from"] == "none" or row["arrow_from"] == row["arrow_to"]:
            break
        src = COMPONENTS.index(row["arrow_from"])
        dst = COMPONENTS.index(row["arrow_to"])
        nxt = list(current)
        nxt[src] -= 1
        nxt[dst] += 1
        nxt = tuple(nxt)
        if nxt[src] < 0 or nxt not in by_cell:
            break
        if nxt in visited:
            break
        path.append(nxt)
        visited.add(nxt)
        current = nxt
    return path


def descend_on_grid(rows, start_cell) -> tuple:
    """Follow the sweep's arrows from a start cell; the prediction is the
    best-I/O cell the walk visited (the walk simulated each of them)."""
    by_cell = {tuple(r["cell"]): r for r in rows}
    path = follow_arrows(rows, start_cell)
    best = min(path, key=lambda c: by_cell[c]["total_io"])
    return path, best


def sgd_descend(spec: WorkloadSpec, env: Environment, start: MemoryPoint,
                base_config: SimConfig | None = None,
                step_bits: int = 64, max_steps: int = 10000) -> dict:
    """Discrete SGD on the memory simplex.

    Each step re-simulates, estimates the three gradients, and moves
    step_bits from the lowest- to the highest-gradient component. A move
    that would overdraw a component drains it to zero instead (the simplex
    edge) and stops; revisiting a point also stops.
    """
    if base_config is None:
        base_config = SimConfig(env=env, growth_factor=2, seed=spec.seed)
    trace = generate(spec)
    point = start
    trajectory = [point]
    visited = {point}
    ios = []
    for _ in range(max_steps):
        config = _config_at(env, base_config, point)
        stats = run_trace(config, trace)
        ios.append(stats.total_io())
        field = gradient_field(stats, config, move_bits=step_bits)
        src, dst = pick_arrow(field, point, require_net_gain=True)
        if src is None:
            break  # no outward arrow here
        move = min(step_bits, point.get(src))
        if move <= 0:
            break  # already at the simplex edge
        nxt = point.moved(src, dst, move)
        if nxt in visited:
            break
        point = nxt
        trajectory.append(point)
        visited.add(point)
        if point.get(src) == 0:
            break  # drained a component: simplex edge
    if len(ios) < len(trajectory):
        final = run_trace(_config_at(env, base_config, trajectory[-1]), trace)
        ios.append(final.total_io())
    # The walk measured I/O at every point it visited; the best observed
    # point is the prediction.
    best = min(range(len(trajectory)), key=lambda i: ios[i])
    return {"trajectory": trajectory, "predicted_min": trajectory[best],
            "io_by_step": ios}


# -- bloom reallocation ----------------------------------------------------


def _hist_fpr(hist, bits: float) -> float:
    total = sum(hist.values())
    if total == 0:
        return 0.0
    return sum(cnt * FPR_BASE ** (bits / n) for n, cnt in hist.items()) / total


def bloom_realloc_check(spec: WorkloadSpec, env: Environment,
                        scheme: str, base_config: SimConfig | None = None,
                        quantum_bits: int | None = None) -> dict:
    """Estimated I/O change from moving a bit quantum between the filters
    of every level pair at constant total filter memory.

    matrix[i][j] > 0 means moving quantum bits from level i's filter to
    level j's is estimated to save I/Os. Near-zero entries everywhere mean
    the allocation scheme has nothing left on the table. The default
    quantum is the 8-byte step the descent itself moves.
    """
    if base_config is None:
        base_config = SimConfig(env=env, growth_factor=2, seed=spec.seed)
    config = replace(base_config, bloom_allocation=scheme, collect_histograms=True)
    stats = run_trace(config, generate(spec))
    bits = bloom_bit_allocation(config)
    levels = sorted(stats.bloom_accesses)
    if len(levels) < 2:
        raise ValueError("need at least two levels with filter traffic")
    if quantum_bits is None:
        quantum_bits = 64

    matrix = {}
    for i in levels:
        for j in levels:
            if i == j:
                matrix[(i, j)] = 0.0
                continue
            m_i, m_j = bits[i - 1], bits[j - 1]
            q = min(quantum_bits, m_i)
            hist_i = stats.n_histograms.get(i, {})
            hist_j = stats.n_histograms.get(j, {})
            added_i = (_hist_fpr(hist_i, m_i - q) - _hist_fpr(hist_i, m_i)) \
                * stats.bloom_false_events.get(i, 0)
            saved_j = (_hist_fpr(hist_j, m_j) - _hist_fpr(hist_j, m_j + q)) \
                * stats.bloom_false_events.get(j, 0)
            matrix[(i, j)] = saved_j - added_i
    return {"matrix": matrix, "quantum_bits": quantum_bits, "scheme": scheme,
            "bits_per_level": bits}


# -- paired validation -------------------------------------------------------


def validate_gradients(spec: WorkloadSpec, env: Environment, trials: int,
                       base_config: SimConfig | None = None,
                       delta_bits: int = 64, jobs: int = 1) -> dict:
    """Estimator accuracy against paired simulations.

    Every trial draws a fresh workload instantiation (seed + trial, with
    the operation count jittered +-10% so page-boundary alignment varies
    across trials the way it would across real workloads), runs the
    baseline, and reruns with delta_bits added to one component at a time
    under the same trace and simulator seed. Reports the mean estimate,
    the mean actual saving, and the 95% confidence interval of the actual
    mean.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    if base_config is None:
        base_config = SimConfig(env=env, growth_factor=2, seed=spec.seed)
    # The rolling hypothetical-filter statistics must be collected at the
    # same delta the paired runs apply.
    base_config = replace(base_config, grad_delta_bits=delta_bits)

    tasks = [(spec.to_json(), env.to_json(), _base_kwargs(base_config), t, delta_bits)
             for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_validation_trial, tasks))
    else:
        results = [_validation_trial(t) for t in tasks]

    report = {}
    for idx, comp in enumerate(COMPONENTS):
        estimates = [r[0][idx] for r in results]
        actuals = [r[1][idx] for r in results]
        est_mean = sum(estimates) / trials
        act_mean = sum(actuals) / trials
        var = sum((a - act_mean) ** 2 for a in actuals) / (trials - 1)
        half = 1.96 * math.sqrt(var / trials)
        report[comp] = {
            "estimated_mean": est_mean,
            "actual_mean": act_mean,
            "ci95": (act_mean - half, act_mean + half),
            "actual_std": math.sqrt(var),
        }
    return report


def _base_kwargs(config: SimConfig) -> dict:
    return dict(
        growth_factor=config.growth_factor,
        hot_merge_threshold=config.hot_merge_threshold,
        cold_merge_threshold=config.cold_merge_threshold,
        cache_bits=config.cache_bits,
        buffer_bits=config.buffer_bits,
        bloom_bits=config.bloom_bits,
        bloom_allocation=config.bloom_allocation,
        fpr_mode=config.fpr_mode,
        cold_levels=config.cold_levels,
        seed=config.seed,
        grad_delta_bits=config.grad_delta_bits,
    )


def _validation_trial(args):
    from .rng import SplitMix64

    spec_json, env_json, base_kwargs, trial, delta_bits = args
    spec = WorkloadSpec.from_json(spec_json)
    env = Environment.from_json(env_json)
    rng = SplitMix64(spec.seed * 7919 + trial)
    jitter = 0.9 + 0.2 * rng.random()
    spec = WorkloadSpec.from_json({
        **spec.to_json(),
        "seed": spec.seed + trial,
        "op_count": max(1, round(spec.op_count * jitter)),
    })
    trace = generate(spec)
    # Jitter the buffer's page phase as well: the marginal value of memory
    # is stepwise in page alignment, and the mean over nearby operating
    # points is the smooth derivative the estimators model. Each trial
    # runs its own simulator stream; the paired runs share it.
    base_kwargs = dict(base_kwargs)
    page_bits = env.entries_per_page * env.entry_bits
    phase = rng.randint(5) - 2
    base_kwargs["buffer_bits"] = max(page_bits,
                                     base_kwargs["buffer_bits"] + phase * page_bits)
    base_kwargs["seed"] = base_kwargs["seed"] + trial * 6151
    base = SimConfig(env=env, **base_kwargs)
    baseline = run_trace(base, trace)
    grad = estimate_gradients(baseline, base, delta_bits=delta_bits)
    estimates = (grad.cache_savings, grad.buffer_savings, grad.bloom_savings)
    actuals = []
    for comp in COMPONENTS:
        kwargs = dict(base_kwargs)
        kwargs[f"{comp}_bits"] = kwargs[f"{comp}_bits"] + delta_bits
        augmented = run_trace(SimConfig(env=env, **kwargs), trace)
        actuals.append(baseline.total_io() - augmented.total_io())
    return estimates, tuple(actuals)
