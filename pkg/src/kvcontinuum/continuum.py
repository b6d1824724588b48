"""Unified design model for key-value storage layouts.

A single super-structure of L exponentially growing levels covers B+tree,
B-epsilon-tree, the LSM family, and LSH-table as knob settings. This module
holds the environment/knob types, the rules that derive a full structure
from the knobs, the worst-case I/O cost model (including the extended
size-ratio domain, the hash-table rule, and the sibling-chain patch), and
the log-structured B-tree comparator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

# Bloom filter false positive rate per bit-per-entry at the optimal hash
# count: FPR = FPR_BASE ** (bits/entry). Used consistently by the analytic
# model and the simulator.
FPR_BASE = 0.6185
_LN_FPR_BASE = math.log(FPR_BASE)

PRESET_NAMES = (
    "b_plus_tree",
    "b_epsilon_tree",
    "leveled_lsm",
    "lazy_leveled_lsm",
    "tiered_lsm",
    "lsh_table",
    "sorted_array",
    "log",
)


class DomainError(ValueError):
    """A knob or parameter sits outside its allowed domain."""


class InsufficientMemory(DomainError):
    """The fence/filter budget cannot cover even Level 1's fences."""


class UnknownPreset(KeyError):
    pass


def fpr_from_bits(bits_per_entry: float) -> float:
    """False positive rate of a filter with the given bits per entry."""
    if bits_per_entry <= 0:
        return 1.0
    return FPR_BASE ** bits_per_entry


def bits_for_fpr(fpr: float) -> float:
    """Bits per entry needed for a target false positive rate."""
    if fpr >= 1.0:
        return 0.0
    return math.log(fpr) / _LN_FPR_BASE


def _check_json_fields(data: dict, cls, where: str) -> dict:
    names = [f.name for f in fields(cls)]
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise DomainError(f"{where}: unknown field(s) {', '.join(unknown)}")
    missing = sorted(set(names) - set(data))
    if missing:
        raise DomainError(f"{where}: missing field(s) {', '.join(missing)}")
    return {n: data[n] for n in names}


@dataclass(frozen=True)
class Environment:
    """Dataset and hardware constants.

    n_entries        N, total entries in the store
    entry_bits       E, size of one entry
    entries_per_page B, entries that fit in one disk page
    key_bits         F, average key size
    total_memory_bits M, the overall main-memory budget
    page_bytes       p, physical page size (used by transition math)
    """

    n_entries: int
    entry_bits: int
    entries_per_page: int
    key_bits: int
    total_memory_bits: int
    page_bytes: int

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise DomainError(f"environment.{f.name} must be strictly positive")
        if self.key_bits > self.entry_bits:
            raise DomainError("environment.key_bits must not exceed entry_bits")
        # One page of entries must fill one physical page within rounding.
        if abs(self.entries_per_page * self.entry_bits - self.page_bytes * 8) >= self.entry_bits:
            raise DomainError(
                "environment: entries_per_page * entry_bits inconsistent with page_bytes"
            )

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, data: dict) -> "Environment":
        return cls(**_check_json_fields(data, cls, "environment"))


@dataclass(frozen=True)
class DesignKnobs:
    """The five continuum knobs plus the buffer budget.

    growth_factor            T, capacity ratio between adjacent levels
    hot_merge_threshold      K, max runs per hot level (all but the last)
    cold_merge_threshold     Z, max runs at the last hot level and below
    node_size_pages          D, contiguous node size
    fence_filter_memory_bits M_F, joint fence pointer + filter budget
    buffer_memory_bits       M_B, write buffer budget
    """

    growth_factor: int
    hot_merge_threshold: int
    cold_merge_threshold: int
    node_size_pages: int
    fence_filter_memory_bits: int
    buffer_memory_bits: int

    def validate(self, env: Environment) -> None:
        t, k, z = self.growth_factor, self.hot_merge_threshold, self.cold_merge_threshold
        node_bits = self.node_size_pages * env.entries_per_page * env.entry_bits
        if self.buffer_memory_bits < node_bits:
            raise DomainError(
                f"buffer_memory_bits={self.buffer_memory_bits} below one node "
                f"(D*B*E = {node_bits})"
            )
        t_max = (env.n_entries * env.entry_bits) / self.buffer_memory_bits
        if t < 2:
            raise DomainError(f"growth_factor T={t} below minimum 2")
        if t > t_max:
            raise DomainError(
                f"growth_factor T={t} above maximum (N*E)/M_B={t_max:.6g}"
            )
        if not 1 <= k <= t - 1:
            raise DomainError(f"hot_merge_threshold K={k} outside [1, T-1]=[1, {t - 1}]")
        if not 1 <= z <= t - 1:
            raise DomainError(f"cold_merge_threshold Z={z} outside [1, T-1]=[1, {t - 1}]")
        if self.node_size_pages < 1:
            raise DomainError(f"node_size_pages D={self.node_size_pages} below minimum 1")
        if self.fence_filter_memory_bits + self.buffer_memory_bits > env.total_memory_bits:
            raise DomainError(
                "fence_filter_memory_bits + buffer_memory_bits exceeds total memory "
                f"({self.fence_filter_memory_bits} + {self.buffer_memory_bits} > "
                f"{env.total_memory_bits})"
            )

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, data: dict) -> "DesignKnobs":
        return cls(**_check_json_fields(data, cls, "knobs"))


@dataclass(frozen=True)
class DerivedDesign:
    """Everything the design rules pin down for a knob setting."""

    levels: int                      # L
    cold_levels: int                 # Y, levels traversed by cascading fences
    no_filter_levels: int            # Q, levels the budget cannot fully fund
    fence_budget_bits: float         # M_FP
    filter_budget_bits: float        # M_BF
    per_level_fpr: tuple             # p_i for levels 1..L (1.0 on cold levels)
    hash_table_levels: frozenset     # levels whose filters hold full keys
    filter_drop_threshold: float     # X, bits/entry below which a filter is dropped
    all_hot_memory: float            # M_F above which Y = 0
    min_fence_memory: float          # M_F floor: fences for Level 1
    sibling_chain_len: float         # pages per cold-level chain hop (1 if unpatched)
    level_entries: tuple = field(default=(), repr=False)
    filter_bits_per_level: tuple = field(default=(), repr=False)

    @property
    def hot_levels(self) -> int:
        return self.levels - self.cold_levels

    def to_json(self) -> dict:
        return {
            "levels": self.levels,
            "cold_levels": self.cold_levels,
            "no_filter_levels": self.no_filter_levels,
            "fence_budget_bits": self.fence_budget_bits,
            "filter_budget_bits": self.filter_budget_bits,
            "per_level_fpr": list(self.per_level_fpr),
            "hash_table_levels": sorted(self.hash_table_levels),
            "filter_drop_threshold": self.filter_drop_threshold,
            "all_hot_memory": self.all_hot_memory,
            "min_fence_memory": self.min_fence_memory,
            "sibling_chain_len": self.sibling_chain_len,
        }


@dataclass(frozen=True)
class CostVector:
    """Worst-case expected I/O costs plus the memory footprint."""

    zero_point_read: float   # R, expected I/Os for an absent key
    point_read: float        # V, worst-case I/Os for a present key
    short_range: float       # one probe per qualifying run
    long_range: float        # selectivity-scaled scan
    update: float            # amortized I/Os per update
    memory_footprint: float  # bits

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"cost.{f.name} must be non-negative")
        if self.zero_point_read > self.point_read + 1 + 1e-9:
            raise ValueError("zero_point_read must not exceed point_read + 1")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class LsbTreeModel:
    """Log-structured B-tree: node contents spread over a log, compacted
    once a node spans compaction_factor blocks."""

    compaction_factor: float         # C
    read_write_asymmetry: float      # read cost discount relative to a write

    def __post_init__(self):
        if self.compaction_factor < 1:
            raise DomainError("compaction_factor must be >= 1")
        if self.read_write_asymmetry <= 0:
            raise DomainError("read_write_asymmetry must be positive")


def min_fence_memory(env: Environment, knobs: DesignKnobs) -> float:
    """Fence bits to point at Level 1: one key per page of its occupancy
    (F/B bits per entry at the steady-state fill)."""
    lvl = level_count(env, knobs)
    entries_1 = _level_entry_counts(env, knobs, lvl)[0]
    return entries_1 * env.key_bits / env.entries_per_page


def level_count(env: Environment, knobs: DesignKnobs) -> int:
    """L = ceil(log_T(N / (B * D))); the last level may be partially full."""
    ratio = env.n_entries / (env.entries_per_page * knobs.node_size_pages)
    if ratio <= 1:
        return 1
    raw = math.log(ratio) / math.log(knobs.growth_factor)
    # Guard against float noise turning an exact integer into ceil(x)+1.
    if abs(raw - round(raw)) < 1e-9:
        return max(1, int(round(raw)))
    return max(1, math.ceil(raw))


def cold_levels_closed_form(env: Environment, knobs: DesignKnobs,
                            drop_threshold: float = 1.0) -> int:
    """The piecewise threshold for Y, as printed; derive() realizes the
    same rule discretely so that Y and Q stay mutually consistent."""
    n, b, f = env.n_entries, env.entries_per_page, env.key_bits
    d, mf = knobs.node_size_pages, knobs.fence_filter_memory_bits
    per_entry = drop_threshold + f / b
    if mf >= n * per_entry:
        return 0
    lvl = level_count(env, knobs)
    if mf < b * d * per_entry:
        return lvl
    y = math.floor(math.log(n / mf * per_entry, knobs.growth_factor))
    return max(0, min(lvl, y))


def _level_entry_counts(env: Environment, knobs: DesignKnobs, lvl: int) -> list:
    """Steady-state fill: entries at level i proportional to T^i, summing to N."""
    t = float(knobs.growth_factor)
    weights = [t ** i for i in range(1, lvl + 1)]
    total = sum(weights)
    return [env.n_entries * w / total for w in weights]


def _monkey_fprs(entries: list, budget_bits: float, t: float) -> list:
    """False positive rates decreasing by a factor of T toward smaller levels,
    spending exactly budget_bits. Levels priced out (p >= 1) get no filter and
    the remainder is re-solved over the rest (waterfilling)."""
    h = len(entries)
    if h == 0:
        return []
    active = list(range(h))
    p = [1.0] * h
    while active:
        n_sum = sum(entries[i] for i in active)
        offset = sum(entries[i] * (active[-1] - i) for i in active) * math.log(t)
        ln_p_last = (budget_bits * _LN_FPR_BASE + offset) / n_sum
        trial = {i: ln_p_last - (active[-1] - i) * math.log(t) for i in active}
        overflow = [i for i in active if trial[i] >= 0.0]
        if not overflow:
            for i in active:
                p[i] = math.exp(trial[i])
            break
        # Largest active levels price out first; drop them and re-solve.
        for i in overflow:
            p[i] = 1.0
        active = [i for i in active if i not in overflow]
    return p


def derive(env: Environment, knobs: DesignKnobs,
           drop_threshold: float = 1.0) -> DerivedDesign:
    """Apply the design rules: depth, hot/cold split, memory budgets, and
    per-level filter rates.

    Memory is allocated level by level from the smallest, fences first
    (F/B bits/entry) then filters (drop_threshold bits/entry minimum). Q
    counts the levels left unfunded. The bottom funded level is demoted to
    cold (Y = Q + 1) when, after fence charges, the filter pool cannot
    sustain the drop threshold across all funded levels. Levels whose
    filters end up with >= F bits/entry switch to hash tables (no false
    positives at the same memory).
    """
    knobs.validate(env)
    mf_lo = min_fence_memory(env, knobs)
    if knobs.fence_filter_memory_bits < mf_lo:
        raise InsufficientMemory(
            f"fence_filter_memory_bits={knobs.fence_filter_memory_bits} below the "
            f"Level-1 fence floor {mf_lo:.0f}"
        )

    n, b, f = env.n_entries, env.entries_per_page, env.key_bits
    t = knobs.growth_factor
    x = float(drop_threshold)
    lvl = level_count(env, knobs)
    entries = _level_entry_counts(env, knobs, lvl)
    mf = float(knobs.fence_filter_memory_bits)
    mf_hi = n * (x + f / b)

    # Greedy funding pass, smallest level first. The relative slack keeps
    # exact-budget settings (e.g. M_F == N*(X + F/B)) from losing the last
    # level to float rounding.
    per_entry = x + f / b
    cumulative = 0.0
    hot = 0
    for i in range(lvl):
        cumulative += entries[i] * per_entry
        if cumulative <= mf * (1 + 1e-9):
            hot += 1
        else:
            break
    q = lvl - hot

    def budgets(hot_n: int):
        fences = sum(entries[i] for i in range(hot_n)) * (f / b)
        # The first cold level keeps in-memory fences when the leftover
        # covers them; it seeds the cascading traversal.
        if hot_n < lvl:
            first_cold_fence = entries[hot_n] * (f / b)
            if mf - fences >= first_cold_fence:
                fences += first_cold_fence
        return fences, mf - fences

    fence_bits, filter_bits = budgets(hot)
    y = q
    hot_entries = sum(entries[i] for i in range(hot))
    if hot >= 1 and filter_bits < x * hot_entries * (1 - 1e-9):
        # Fence charges squeezed the filter pool below the drop threshold:
        # demote the bottom funded level and give its share to smaller levels.
        y = q + 1
        hot -= 1
        fence_bits, filter_bits = budgets(hot)

    fprs = _monkey_fprs(entries[:hot], filter_bits, float(t))
    per_level_fpr = []
    filter_bits_per_level = []
    hash_levels = set()
    for i in range(lvl):
        if i < hot:
            p_i = fprs[i]
            m_i = entries[i] * bits_for_fpr(p_i)
            if m_i / entries[i] >= f:
                hash_levels.add(i + 1)
                p_i = 0.0
            per_level_fpr.append(p_i)
            filter_bits_per_level.append(m_i)
        else:
            per_level_fpr.append(1.0)
            filter_bits_per_level.append(0.0)

    chain = t / b if (knobs.node_size_pages < t / b and b < t) else 1.0

    return DerivedDesign(
        levels=lvl,
        cold_levels=y,
        no_filter_levels=q,
        fence_budget_bits=fence_bits,
        filter_budget_bits=filter_bits,
        per_level_fpr=tuple(per_level_fpr),
        hash_table_levels=frozenset(hash_levels),
        filter_drop_threshold=x,
        all_hot_memory=mf_hi,
        min_fence_memory=mf_lo,
        sibling_chain_len=chain,
        level_entries=tuple(entries),
        filter_bits_per_level=tuple(filter_bits_per_level),
    )


def cost(env: Environment, knobs: DesignKnobs, range_selectivity: float = 0.001,
         drop_threshold: float = 1.0) -> CostVector:
    """Worst-case expected I/O cost of the derived structure.

    Zero-result reads pay the filter false positives on hot runs and one
    probe per cold run; cold levels add a T/B sibling-chain walk when the
    patch predicate (D < T/B and B < T) holds. Updates amortize T/K copies
    per hot level (T/Z at the last hot level and below) over B entries per
    page write.
    """
    design = derive(env, knobs, drop_threshold)
    t = float(knobs.growth_factor)
    k, z = knobs.hot_merge_threshold, knobs.cold_merge_threshold
    b = env.entries_per_page
    lvl, y = design.levels, design.cold_levels
    hot = lvl - y
    patched = design.sibling_chain_len > 1.0
    chain_extra = y * (t / b) if patched else 0.0

    fp = design.per_level_fpr
    hot_fp = sum(k * fp[i] for i in range(max(hot - 1, 0)))
    if hot >= 1:
        hot_fp += z * fp[hot - 1]

    r = hot_fp + y * z + chain_extra
    if y == 0:
        # The key sits in one of the last level's runs; that probe is the
        # real access, the rest still pay their false positive rates.
        v = r - fp[lvl - 1] + 1.0
    else:
        v = r

    runs = max(hot - 1, 0) * k + (z if hot >= 1 else 0) + y * z
    short = runs + chain_extra
    long_rng = range_selectivity * env.n_entries / b + short

    per_level_copies = max(hot - 1, 0) * (t / k) + ((1 if hot >= 1 else 0) + y) * (t / z)
    update = per_level_copies / b

    return CostVector(
        zero_point_read=r,
        point_read=v,
        short_range=short,
        long_range=long_rng,
        update=update,
        memory_footprint=float(knobs.fence_filter_memory_bits + knobs.buffer_memory_bits),
    )


def preset(name: str, env: Environment) -> DesignKnobs:
    """Knob vectors for the known designs on the continuum."""
    n, e, b, f = env.n_entries, env.entry_bits, env.entries_per_page, env.key_bits

    def fences_plus(bits_per_entry: float) -> int:
        return math.ceil(n * (f / b + bits_per_entry))

    def with_min_fences(partial: dict) -> dict:
        probe = DesignKnobs(fence_filter_memory_bits=env.total_memory_bits, **partial)
        partial["fence_filter_memory_bits"] = math.ceil(min_fence_memory(env, probe))
        return partial

    if name == "b_plus_tree":
        t, d = b, 1
        knobs = with_min_fences(dict(growth_factor=t, hot_merge_threshold=1,
                                     cold_merge_threshold=1, node_size_pages=d,
                                     buffer_memory_bits=d * b * e))
    elif name == "b_epsilon_tree":
        t, d = max(2, math.ceil(math.sqrt(b))), 1
        knobs = with_min_fences(dict(growth_factor=t, hot_merge_threshold=1,
                                     cold_merge_threshold=1, node_size_pages=d,
                                     buffer_memory_bits=d * b * e))
    elif name == "leveled_lsm":
        knobs = dict(growth_factor=10, hot_merge_threshold=1, cold_merge_threshold=1,
                     node_size_pages=1, buffer_memory_bits=b * e,
                     fence_filter_memory_bits=fences_plus(10))
    elif name == "lazy_leveled_lsm":
        knobs = dict(growth_factor=10, hot_merge_threshold=9, cold_merge_threshold=1,
                     node_size_pages=1, buffer_memory_bits=b * e,
                     fence_filter_memory_bits=fences_plus(10))
    elif name == "tiered_lsm":
        knobs = dict(growth_factor=10, hot_merge_threshold=9, cold_merge_threshold=9,
                     node_size_pages=1, buffer_memory_bits=b * e,
                     fence_filter_memory_bits=fences_plus(10))
    elif name == "lsh_table":
        m_b = b * e
        t = (n * e) // m_b
        knobs = dict(growth_factor=t, hot_merge_threshold=t - 1, cold_merge_threshold=t - 1,
                     node_size_pages=1, buffer_memory_bits=m_b,
                     fence_filter_memory_bits=math.ceil(f * n * (1 + 1 / b)))
    elif name == "sorted_array":
        d = 1
        t = max(2, n // (b * d))
        knobs = dict(growth_factor=t, hot_merge_threshold=1, cold_merge_threshold=1,
                     node_size_pages=d, buffer_memory_bits=d * b * e,
                     fence_filter_memory_bits=fences_plus(10))
    elif name == "log":
        d = 1
        t = max(2, n // (b * d))
        knobs = with_min_fences(dict(growth_factor=t, hot_merge_threshold=t - 1,
                                     cold_merge_threshold=t - 1, node_size_pages=d,
                                     buffer_memory_bits=d * b * e))
    else:
        raise UnknownPreset(name)

    return DesignKnobs(**knobs)


def lsb_tree_cost(env: Environment, model: LsbTreeModel) -> CostVector:
    """Cost model for the log-structured B-tree comparator.

    Point and range reads pay C probes per traversed tree level; updates
    pay the traversal (discounted by the read/write asymmetry) plus the
    amortized 1/C compaction overhead.
    """
    c = model.compaction_factor
    height = math.log(env.n_entries, env.entries_per_page)
    read = c * height
    update = read / model.read_write_asymmetry + 1.0 / c
    memory = c * env.n_entries * env.key_bits / env.entries_per_page
    return CostVector(
        zero_point_read=read,
        point_read=read,
        short_range=read,
        long_range=read,
        update=update,
        memory_footprint=memory,
    )
