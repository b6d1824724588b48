"""Layout transitions between the LSM shape and the B+tree shape.

Planning is closed-form (page I/O costs from level sizes); execution runs
against simulator state and counts real page I/Os, which must never exceed
the plan. The B+tree side keeps leaves on disk and the whole index in
memory. The reverse direction avoids rewrites with a page-ID region map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .simulator import Run, SimState


@dataclass(frozen=True)
class TransitionState:
    """Level occupancy snapshot used by the closed forms.

    level_entries lists x_1..x_L smallest level first, x_L the largest;
    entry_bytes is d, page_bytes is p, write_read_ratio is phi, and
    buffer_bytes (s_0) feeds the preemptive geometric form.
    """

    level_entries: tuple
    entry_bytes: int
    page_bytes: int
    write_read_ratio: float = 1.0
    buffer_bytes: int = 0

    def __post_init__(self):
        if not self.level_entries or all(x == 0 for x in self.level_entries):
            raise ValueError("at least one level must be non-empty")
        if any(x < 0 for x in self.level_entries):
            raise ValueError("level entry counts must be non-negative")
        if self.entry_bytes <= 0 or self.page_bytes <= 0:
            raise ValueError("entry and page sizes must be positive")
        if self.write_read_ratio <= 0:
            raise ValueError("write_read_ratio must be positive")

    def to_json(self) -> dict:
        return {
            "level_entries": list(self.level_entries),
            "entry_bytes": self.entry_bytes,
            "page_bytes": self.page_bytes,
            "write_read_ratio": self.write_read_ratio,
            "buffer_bytes": self.buffer_bytes,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TransitionState":
        return cls(
            level_entries=tuple(data["level_entries"]),
            entry_bytes=data["entry_bytes"],
            page_bytes=data["page_bytes"],
            write_read_ratio=data.get("write_read_ratio", 1.0),
            buffer_bytes=data.get("buffer_bytes", 0),
        )


@dataclass(frozen=True)
class TransitionPlan:
    strategy: str
    predicted_io: float
    steps: tuple = ()   # (pages_read, pages_written, threshold) per step

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "predicted_io": self.predicted_io,
            "steps": [list(s) for s in self.steps],
        }


@dataclass(frozen=True)
class RegionMap:
    """Sorted compression of page-id -> disk-location into contiguous runs."""

    regions: tuple   # (start_page_id, disk_location, length)
    total_pages: int

    def to_json(self) -> dict:
        return {"regions": [list(r) for r in self.regions], "total_pages": self.total_pages}


@dataclass(frozen=True)
class IndirectionParams:
    """Cost constants for the page-indirection overhead expressions."""

    fill_amplification: float = 1.0   # alpha
    fragmentation: float = 0.0        # x in [0, 1]
    contiguous_read_cost: float = 1.0     # c
    random_read_cost: float = 2.0         # r
    contiguous_write_cost: float = 1.0    # w_c
    selectivity: float = 0.01             # s

    def __post_init__(self):
        if self.fill_amplification < 1:
            raise ValueError("fill_amplification must be >= 1")
        if not 0 <= self.fragmentation <= 1:
            raise ValueError("fragmentation must be in [0, 1]")
        if not self.random_read_cost >= self.contiguous_read_cost > 0:
            raise ValueError("need random_read_cost >= contiguous_read_cost > 0")


def transition_costs(state: TransitionState) -> dict:
    """Closed forms for the LSM -> B+tree strategies.

    sort_merge reads and rewrites every level; batch_insert adopts the
    bottom level as leaves and pays per-entry insertion for the rest. The
    lazy strategy's final natural merge moves the same data as a sort
    merge, so its bound equals it. threshold_ratio is the x_{-L}/x_L pivot
    below which batch insertion wins.
    """
    d, p, phi = state.entry_bytes, state.page_bytes, state.write_read_ratio
    xs = state.level_entries
    x_last = xs[-1]
    uppers = xs[:-1]

    sort_merge = sum(math.ceil(d * x / p) for x in xs) * (1 + phi)
    batch = math.ceil(d * x_last / p) + sum(x * (d / p + 1 + 2 * phi) for x in uppers)
    threshold = d * phi / (p + (2 * p - d) * phi)

    lvl = len(xs)
    if state.buffer_bytes > 0 and lvl >= 1:
        t_est = (d * x_last / state.buffer_bytes) ** (1.0 / lvl)
        preemptive = preemptive_geometric(state.buffer_bytes, t_est, lvl, p, phi)
    else:
        preemptive = sort_merge

    return {
        "sort_merge": sort_merge,
        "batch_insert": batch,
        "lazy_bound": sort_merge,
        "preemptive": preemptive,
        "threshold_ratio": threshold,
    }


def preemptive_geometric(s0: float, t: float, lvl: int, page_bytes: float,
                         phi: float) -> float:
    """(1 + phi) * s0 (T^{L+1} - 1) / (p (T - 1)): cost of preemptively
    merging geometrically full levels of sizes s0*T^i."""
    return (1 + phi) * s0 * (t ** (lvl + 1) - 1) / (page_bytes * (t - 1))


def choose_strategy(state: TransitionState) -> str:
    """batch_insert iff x_{-L}/x_L falls below the threshold ratio; ties go
    to sort_merge. Waiting (lazy) is never chosen: its final merge costs as
    much as merging preemptively, with sub-optimal performance meanwhile."""
    xs = state.level_entries
    x_last = xs[-1]
    if x_last == 0:
        return "sort_merge"
    ratio = sum(xs[:-1]) / x_last
    threshold = transition_costs(state)["threshold_ratio"]
    return "batch_insert" if ratio < threshold else "sort_merge"


def plan_gradual(state: TransitionState, k_pages_per_step: int) -> TransitionPlan:
    """Move k pages of globally smallest keys per step.

    Run cursors persist across steps, so every source page is read once and
    every output page written once; the per-step threshold (cumulative
    entries moved, i.e. the key rank routing boundary) strictly increases.
    Queries at threshold theta route: key <= theta to the B+tree side.
    """
    if k_pages_per_step < 1:
        raise ValueError("k_pages_per_step must be >= 1")
    d, p, phi = state.entry_bytes, state.page_bytes, state.write_read_ratio
    total_reads = sum(math.ceil(d * x / p) for x in state.level_entries)
    total_entries = sum(state.level_entries)
    total_out = math.ceil(d * total_entries / p)
    n_steps = max(1, math.ceil(total_out / k_pages_per_step))
    entries_per_page = p / d

    steps = []
    read_acc = 0
    for step in range(1, n_steps + 1):
        written = min(k_pages_per_step, total_out - k_pages_per_step * (step - 1))
        reads_so_far = round(total_reads * step / n_steps)
        reads = reads_so_far - read_acc
        read_acc = reads_so_far
        threshold = min(total_entries, math.ceil(entries_per_page * k_pages_per_step * step))
        steps.append((reads, written, threshold))
    predicted = sum(r + phi * w for r, w, _ in steps)
    return TransitionPlan(strategy="gradual", predicted_io=predicted, steps=tuple(steps))


# -- B+tree model ---------------------------------------------------------


class BTreeState:
    """Leaf pages on disk, the full index in memory.

    Lookups cost one leaf read; inserts re-read and rewrite the target leaf
    (two writes when it splits), the (1 + 2*phi)-per-update bound. Short
    scans pay one probe plus one I/O per additional leaf.
    """

    def __init__(self, entries_per_page: int, leaves=None):
        self.entries_per_page = entries_per_page
        self.leaves: list[list[int]] = leaves if leaves is not None else []
        self.page_reads = 0
        self.page_writes = 0

    @classmethod
    def bulk_load(cls, sorted_keys, entries_per_page: int) -> "BTreeState":
        leaves = [list(sorted_keys[i:i + entries_per_page])
                  for i in range(0, len(sorted_keys), entries_per_page)]
        return cls(entries_per_page, leaves)

    def _leaf_index(self, key: int) -> int:
        lo, hi = 0, len(self.leaves) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.leaves[mid] and self.leaves[mid][0] <= key:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def distinct_keys(self) -> set:
        keys = set()
        for leaf in self.leaves:
            keys.update(leaf)
        return keys

    def lookup(self, key: int) -> tuple:
        if not self.leaves:
            return False, 0
        self.page_reads += 1
        leaf = self.leaves[self._leaf_index(key)]
        return key in leaf, 1

    def insert(self, key: int) -> int:
        if not self.leaves:
            self.leaves.append([key])
            self.page_writes += 1
            return 1
        idx = self._leaf_index(key)
        leaf = self.leaves[idx]
        charged = 1
        self.page_reads += 1
        if key in leaf:
            self.page_writes += 1
            return charged + 1
        pos = 0
        while pos < len(leaf) and leaf[pos] < key:
            pos += 1
        leaf.insert(pos, key)
        if len(leaf) > self.entries_per_page:
            half = len(leaf) // 2
            self.leaves[idx:idx + 1] = [leaf[:half], leaf[half:]]
            self.page_writes += 2
            charged += 2
        else:
            self.page_writes += 1
            charged += 1
        return charged

    def scan(self, key: int, pages: int) -> int:
        if not self.leaves:
            return 0
        n = min(pages, len(self.leaves))
        self.page_reads += n
        return n


def sim_state_to_transition_state(sim: SimState, write_read_ratio: float = 1.0) -> TransitionState:
    """One x entry per run (buffer included as the smallest), bottom run
    last. Per-run granularity keeps the closed forms aligned with executed
    per-run page counting."""
    d = sim.env.entry_bits // 8
    xs: list[int] = []
    if sim.buffer:
        xs.append(len(sim.buffer))
    for level in sim.levels:
        for run in reversed(level):
            if len(run):
                xs.append(len(run))
    if not xs:
        raise ValueError("cannot build a transition state from an empty structure")
    return TransitionState(
        level_entries=tuple(xs),
        entry_bytes=d,
        page_bytes=sim.env.page_bytes,
        write_read_ratio=write_read_ratio,
        buffer_bytes=sim.config.buffer_bits // 8,
    )


def execute_lsm_to_btree(sim: SimState, strategy: str,
                         write_read_ratio: float = 1.0) -> tuple:
    """Run a transition against simulator state.

    Returns (BTreeState, measured) where measured has page_reads,
    page_writes and io (phi-weighted total). Sort-merge streams every run
    page through memory and writes the merged leaf level; batch insertion
    adopts the bottom run as the leaf level and merges upper entries into
    the touched leaves only.
    """
    b = sim.env.entries_per_page
    phi = write_read_ratio
    runs: list[Run] = []
    if sim.buffer:
        runs.append(Run(sorted(sim.buffer)))
    for level in sim.levels:
        for run in level:
            if len(run):
                runs.append(run)
    if not runs:
        raise ValueError("nothing to transition")

    reads = 0
    writes = 0
    if strategy == "sort_merge":
        keys = set()
        for run in runs:
            reads += run.page_count(b)
            keys |= run.keyset
        ordered = sorted(keys)
        writes = math.ceil(len(ordered) / b)
        btree = BTreeState.bulk_load(ordered, b)
    elif strategy == "batch_insert":
        bottom = max(runs, key=len)
        reads += bottom.page_count(b)   # one pass to extract the index keys
        btree = BTreeState.bulk_load(bottom.keys, b)
        upper_keys = set()
        for run in runs:
            if run is bottom:
                continue
            reads += run.page_count(b)
            upper_keys |= run.keyset
        upper_keys -= bottom.keyset
        # Group sorted insertions by target leaf: each touched leaf is read
        # once and its replacement pages written once.
        by_leaf: dict[int, list] = {}
        for key in sorted(upper_keys):
            by_leaf.setdefault(btree._leaf_index(key), []).append(key)
        new_leaves = []
        prev = 0
        for idx in sorted(by_leaf):
            new_leaves.extend(btree.leaves[prev:idx])
            merged = sorted(set(btree.leaves[idx]) | set(by_leaf[idx]))
            reads += 1
            pages = [merged[i:i + b] for i in range(0, len(merged), b)]
            writes += len(pages)
            new_leaves.extend(pages)
            prev = idx + 1
        new_leaves.extend(btree.leaves[prev:])
        btree.leaves = new_leaves
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    measured = {"page_reads": reads, "page_writes": writes, "io": reads + phi * writes}
    return btree, measured


def btree_to_sim_state(btree: BTreeState, sim_template: SimState) -> SimState:
    """Zero-I/O adoption of B+tree leaves as the bottom LSM run, scattered
    pages made logically contiguous by a region map. The map is dropped at
    the first full merge, when the level becomes physically contiguous."""
    state = SimState(sim_template.config)
    keys = sorted(btree.distinct_keys())
    if keys:
        run = Run(keys, pages=max(len(btree.leaves), 1))
        index = state._nominal - 1
        while index >= len(state.levels):
            state.levels.append([])
        state.levels[index].append(run)
        state._build_filter(index, run)
    return state


def plan_btree_to_lsm(env, params: IndirectionParams, mode: str,
                      growth_factor: int = 2) -> dict:
    """Predicted costs for the reverse transition.

    naive rewrites the leaf data into contiguous runs; indirection maps
    page regions instead and costs zero transition I/O, at the price of the
    range-scan and first-merge overheads (reported in (c, r, w)-weighted
    units, never summed with page I/Os). The range overhead is evaluated as
    printed; it goes negative at x = 0, which we report as-is.
    """
    ne = env.n_entries * env.entry_bits
    a, x, s = params.fill_amplification, params.fragmentation, params.selectivity
    c, r = params.contiguous_read_cost, params.random_read_cost
    t = growth_factor
    if mode == "naive":
        return {
            "mode": "naive",
            "transition_cost_units": a * ne * x + a * ne * (1 - x) + ne,
            "transition_io": None,
        }
    if mode == "indirection":
        return {
            "mode": "indirection",
            "transition_io": 0,
            "range_degradation_units": a * ne * s * (x * r + x * c - c)
            + s * c * ne * (t + 1) / (t - 1),
            "first_merge_delta_units": x * (ne * r - c),
        }
    raise ValueError(f"unknown mode {mode!r}")


def build_region_map(page_runs) -> RegionMap:
    """page_runs: (start_page_id, disk_location, length) tuples, disjoint
    and covering [0, total). Map size grows with fragmentation, not data."""
    runs = sorted(page_runs)
    total = 0
    for start, _, length in runs:
        if start != total:
            raise ValueError(f"page runs must be disjoint and covering; gap at {total}")
        total += length
    return RegionMap(regions=tuple(runs), total_pages=total)


def resolve_page(region_map: RegionMap, page_id: int) -> int:
    """Predecessor search plus offset arithmetic."""
    if not 0 <= page_id < region_map.total_pages:
        raise IndexError(f"page_id {page_id} out of range [0, {region_map.total_pages})")
    regions = region_map.regions
    lo, hi = 0, len(regions) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if regions[mid][0] <= page_id:
            lo = mid
        else:
            hi = mid - 1
    start, location, _ = regions[lo]
    return location + (page_id - start)


# -- hybrid phased execution ----------------------------------------------


@dataclass(frozen=True)
class PhaseOp:
    """Trace element for phased runs; scans carry a page count."""

    op: str          # read | insert | update | scan
    key: int
    pages: int = 1


def classify_phase(phase) -> str:
    """A phase is btree-friendly when scans outweigh writes, else lsm."""
    scans = sum(1 for op in phase if op.op == "scan")
    writes = sum(1 for op in phase if op.op in ("insert", "update"))
    return "btree" if scans >= writes else "lsm"


def _run_phase_lsm(state: SimState, phase) -> int:
    io0 = state.io.total_io()
    for op in phase:
        if op.op == "scan":
            charged = sum(1 for level in state.levels for run in level if len(run))
            charged += max(op.pages - 1, 0)
            state.io.page_reads += charged
            state.io.read_io += charged
        elif op.op == "read":
            _, charged = state.lookup(op.key)
            state.io.page_reads += charged
            state.io.read_io += charged
        else:
            state.update(op.key)
    return state.io.total_io() - io0


def _run_phase_btree(btree: BTreeState, phase) -> int:
    io0 = btree.page_reads + btree.page_writes
    for op in phase:
        if op.op == "scan":
            btree.scan(op.key, op.pages)
        elif op.op == "read":
            btree.lookup(op.key)
        else:
            btree.insert(op.key)
    return btree.page_reads + btree.page_writes - io0


def hybrid_benefit(phases, initial_keys, sim_config, write_read_ratio: float = 1.0) -> dict:
    """Cumulative I/O of pure B+tree, pure LSM, and the transition-enabled
    hybrid over a phased trace. The hybrid switches layout at phase
    boundaries when the classification changes, charging executed
    LSM->B+tree transition I/O; the reverse direction rides the region map
    at zero I/O."""
    if len(phases) < 1:
        raise ValueError("need at least one phase")
    ordered = sorted(initial_keys)

    def fresh_lsm() -> SimState:
        state = SimState(sim_config)
        if ordered:
            run = Run(ordered)
            index = state._nominal - 1
            while index >= len(state.levels):
                state.levels.append([])
            state.levels[index].append(run)
            state._build_filter(index, run)
        return state

    totals = {"btree": 0, "lsm": 0, "hybrid": 0.0}
    btree = BTreeState.bulk_load(ordered, sim_config.env.entries_per_page)
    for phase in phases:
        totals["btree"] += _run_phase_btree(btree, phase)
    lsm = fresh_lsm()
    for phase in phases:
        totals["lsm"] += _run_phase_lsm(lsm, phase)

    transitions = []
    current = classify_phase(phases[0])
    h_btree = BTreeState.bulk_load(ordered, sim_config.env.entries_per_page)
    h_lsm = fresh_lsm()
    for i, phase in enumerate(phases):
        want = classify_phase(phase)
        if i > 0 and want != current:
            if want == "btree":
                t_state = sim_state_to_transition_state(h_lsm, write_read_ratio)
                strategy = choose_strategy(t_state)
                h_btree, measured = execute_lsm_to_btree(h_lsm, strategy, write_read_ratio)
                totals["hybrid"] += measured["io"]
                transitions.append({"at_phase": i, "direction": "lsm_to_btree",
                                    "strategy": strategy, "io": measured["io"],
                                    "planned": transition_costs(t_state)})
            else:
                h_lsm = btree_to_sim_state(h_btree, h_lsm)
                transitions.append({"at_phase": i, "direction": "btree_to_lsm",
                                    "strategy": "region_map_indirection", "io": 0})
            current = want
        if current == "btree":
            totals["hybrid"] += _run_phase_btree(h_btree, phase)
        else:
            totals["hybrid"] += _run_phase_lsm(h_lsm, phase)

    return {"totals": totals, "transitions": transitions}
