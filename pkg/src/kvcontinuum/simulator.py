"""In-memory super-structure simulator with I/O counting.

Executes operation traces against a model of the leveled run hierarchy:
write buffer, per-level runs under the K/Z merge policy, bloom filters
(analytic or concrete), an LRU entry cache, free in-memory fences on hot
levels, and cascading-fence traversal on cold levels. Alongside the I/O
counters it maintains the O(1) statistics that the gradient estimators
consume.
"""

from __future__ import annotations

import math
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

from .continuum import FPR_BASE, Environment
from .rng import SplitMix64

GRAD_DELTA_BITS = 64  # default memory quantum for the hypothetical-filter stats


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    env: Environment
    growth_factor: int = 2                 # T
    hot_merge_threshold: int = 1           # K
    cold_merge_threshold: int = 1          # Z
    cache_bits: int = 0
    buffer_bits: int = 0
    bloom_bits: int = 0
    bloom_allocation: str = "monkey"       # or baseline_even
    fpr_mode: str = "analytic_bernoulli"   # or concrete_filter
    cold_levels: int = 0                   # Y; cascaded levels at the bottom
    seed: int = 0
    grad_delta_bits: int = GRAD_DELTA_BITS
    collect_histograms: bool = True

    def __post_init__(self):
        if self.growth_factor < 2:
            raise ConfigError("growth_factor must be >= 2")
        if self.hot_merge_threshold < 1 or self.cold_merge_threshold < 1:
            raise ConfigError("merge thresholds must be >= 1")
        if self.bloom_allocation not in ("monkey", "baseline_even"):
            raise ConfigError(f"unknown bloom_allocation {self.bloom_allocation!r}")
        if self.fpr_mode not in ("analytic_bernoulli", "concrete_filter"):
            raise ConfigError(f"unknown fpr_mode {self.fpr_mode!r}")
        if min(self.cache_bits, self.buffer_bits, self.bloom_bits) < 0:
            raise ConfigError("memory components must be non-negative")
        if self.cache_bits + self.buffer_bits + self.bloom_bits > self.env.total_memory_bits:
            raise ConfigError("cache + buffer + bloom exceeds total memory")

    @property
    def buffer_pages(self) -> float:
        return self.buffer_bits / (self.env.entries_per_page * self.env.entry_bits)

    @property
    def buffer_capacity_entries(self) -> int:
        return self.buffer_bits // self.env.entry_bits

    @property
    def cache_capacity_entries(self) -> int:
        return self.cache_bits // self.env.entry_bits

    def nominal_levels(self) -> int:
        """Levels needed for N entries with this buffer (geometric capacities)."""
        env = self.env
        pb_b = max(self.buffer_capacity_entries, 1)
        t = self.growth_factor
        raw = math.log(env.n_entries * (t - 1) / pb_b + 1, t)
        return max(1, math.ceil(raw - 1e-9))

    def level_capacity(self, level: int) -> int:
        """Entry capacity of 1-based level i: buffer * T^i."""
        return max(self.buffer_capacity_entries, 1) * self.growth_factor ** level


@dataclass
class IOStats:
    """Counters and rolling statistics gathered during a run.

    bloom_false_events[i] counts lookups whose key was not in level i's
    runs (true negatives plus false positives); fp_roll / fpp_roll are the
    rolling means of the theoretical false positive rate at the current
    and hypothetically enlarged filter allocations.
    """

    page_reads: int = 0
    page_writes: int = 0
    read_io: int = 0          # lookup-driven page reads
    merge_read_io: int = 0    # merge-driven page reads
    query_count: int = 0      # read lookups executed
    inserts_total: int = 0    # update operations applied
    buffer_arrivals: int = 0  # updates that added a new key to the buffer
    buffer_last_slot_hits: int = 0  # reads landing on the oldest buffered entry
    cache_hits: int = 0
    last_cache_slot_hits: int = 0
    bloom_accesses: Counter = field(default_factory=Counter)
    bloom_false_events: Counter = field(default_factory=Counter)
    bloom_fp_events: Counter = field(default_factory=Counter)
    hits_per_level: Counter = field(default_factory=Counter)
    duplicates_removed: Counter = field(default_factory=Counter)
    total_entries_through: Counter = field(default_factory=Counter)
    fp_roll: dict = field(default_factory=dict)    # level -> (mean, count)
    fpp_roll: dict = field(default_factory=dict)
    n_histograms: dict = field(default_factory=dict)  # level -> Counter(entries at query)

    def total_io(self) -> int:
        return self.page_reads + self.page_writes

    def _roll(self, store: dict, level: int, value: float) -> None:
        mean, count = store.get(level, (0.0, 0))
        count += 1
        store[level] = (mean + (value - mean) / count, count)

    def rolling_fpr(self, level: int) -> float:
        return self.fp_roll.get(level, (0.0, 0))[0]

    def rolling_fpr_delta(self, level: int) -> float:
        return self.fpp_roll.get(level, (0.0, 0))[0]

    def to_json(self) -> dict:
        def counter(c):
            return {str(k): v for k, v in sorted(c.items())}

        return {
            "page_reads": self.page_reads,
            "page_writes": self.page_writes,
            "read_io": self.read_io,
            "merge_read_io": self.merge_read_io,
            "query_count": self.query_count,
            "inserts_total": self.inserts_total,
            "buffer_arrivals": self.buffer_arrivals,
            "buffer_last_slot_hits": self.buffer_last_slot_hits,
            "cache_hits": self.cache_hits,
            "last_cache_slot_hits": self.last_cache_slot_hits,
            "total_io": self.total_io(),
            "bloom_accesses": counter(self.bloom_accesses),
            "bloom_false_events": counter(self.bloom_false_events),
            "bloom_fp_events": counter(self.bloom_fp_events),
            "hits_per_level": counter(self.hits_per_level),
            "duplicates_removed": counter(self.duplicates_removed),
            "total_entries_through": counter(self.total_entries_through),
        }


class _ConcreteFilter:
    """Plain bloom filter with ln2 * bits/entry hash functions."""

    def __init__(self, bits: int, expected: int, seed: int):
        self.bits = max(int(bits), 1)
        k = max(1, round(math.log(2) * self.bits / max(expected, 1)))
        self.hashes = k
        self.array = bytearray((self.bits + 7) // 8)
        self.seed = seed

    def _positions(self, key: int):
        # Scramble the key first: seeding the stream affinely makes hash
        # j of key k collide with hash j-1 of key k+1 for sequential keys.
        scrambled = SplitMix64(key).next_u64()
        h = SplitMix64(scrambled ^ self.seed)
        for _ in range(self.hashes):
            yield h.next_u64() % self.bits

    def add(self, key: int) -> None:
        for pos in self._positions(key):
            self.array[pos >> 3] |= 1 << (pos & 7)

    def contains(self, key: int) -> bool:
        return all(self.array[pos >> 3] & (1 << (pos & 7)) for pos in self._positions(key))


class Run:
    """A sorted immutable run. `pages` overrides the page count for runs
    adopted from scattered B+tree leaves."""

    __slots__ = ("keys", "keyset", "filter", "pages")

    def __init__(self, sorted_keys, pages: int | None = None):
        self.keys = list(sorted_keys)
        self.keyset = set(self.keys)
        self.filter = None
        self.pages = pages

    def __len__(self):
        return len(self.keys)

    def page_count(self, entries_per_page: int) -> int:
        if self.pages is not None:
            return self.pages
        return math.ceil(len(self.keys) / entries_per_page)


def bloom_bit_allocation(config: SimConfig, total_bits: int | None = None) -> list:
    """Bits per level (index 0 = level 1) under the configured scheme.

    baseline_even gives every level the same bits/entry; monkey assigns
    false positive rates shrinking by T toward smaller levels, waterfilled
    so priced-out large levels release their bits to the rest.
    """
    if total_bits is None:
        total_bits = config.bloom_bits
    lvl = config.nominal_levels()
    caps = [config.level_capacity(i) for i in range(1, lvl + 1)]
    total_cap = sum(caps)
    if total_bits <= 0:
        return [0.0] * lvl
    if config.bloom_allocation == "baseline_even":
        return [total_bits * c / total_cap for c in caps]

    ln_t = math.log(config.growth_factor)
    ln_base = math.log(FPR_BASE)
    active = list(range(lvl))
    bits = [0.0] * lvl
    while active:
        n_sum = sum(caps[i] for i in active)
        offset = sum(caps[i] * (active[-1] - i) for i in active) * ln_t
        ln_p_last = (total_bits * ln_base + offset) / n_sum
        trial = {i: ln_p_last - (active[-1] - i) * ln_t for i in active}
        overflow = [i for i in active if trial[i] >= 0.0]
        if not overflow:
            for i in active:
                bits[i] = caps[i] * trial[i] / ln_base
            break
        for i in overflow:
            bits[i] = 0.0
        active = [i for i in active if i not in overflow]
    return bits


class SimState:
    """Mutable simulation state; single-owner, single-threaded."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.env = config.env
        self.rng = SplitMix64(config.seed)
        self.buffer: dict[int, None] = {}
        self.levels: list[list[Run]] = [[] for _ in range(config.nominal_levels())]
        self.cache: OrderedDict[int, None] = OrderedDict()
        self.io = IOStats()
        self.bloom_bits_per_level = bloom_bit_allocation(config)
        self.bloom_bits_delta = bloom_bit_allocation(
            config, config.bloom_bits + config.grad_delta_bits
        )
        self._nominal = config.nominal_levels()

    # -- helpers ---------------------------------------------------------

    def level_entries(self, index: int) -> int:
        return sum(len(r) for r in self.levels[index])

    def _is_cold(self, index: int) -> bool:
        return index >= self._nominal - self.config.cold_levels

    def _level_bloom_bits(self, index: int, delta: bool = False) -> float:
        table = self.bloom_bits_delta if delta else self.bloom_bits_per_level
        if index < len(table):
            return table[index]
        return 0.0

    def _chain_pages(self) -> int:
        t, b = self.config.growth_factor, self.env.entries_per_page
        if 1 < t / b and b < t:
            return math.ceil(t / b) - 1
        return 0

    def distinct_keys(self) -> set:
        keys = set(self.buffer)
        for level in self.levels:
            for run in level:
                keys |= run.keyset
        return keys

    # -- cache -----------------------------------------------------------

    def _cache_get(self, key: int) -> bool:
        if key not in self.cache:
            return False
        self.io.cache_hits += 1
        # The coldest slot is the front of the OrderedDict; a hit there is
        # the signal the cache gradient estimator keys on.
        if next(iter(self.cache)) == key:
            self.io.last_cache_slot_hits += 1
        self.cache.move_to_end(key)
        return True

    def _cache_put(self, key: int) -> None:
        cap = self.config.cache_capacity_entries
        if cap <= 0:
            return
        if key in self.cache:
            self.cache.move_to_end(key)
            return
        while len(self.cache) >= cap:
            self.cache.popitem(last=False)
        self.cache[key] = None

    # -- filters ---------------------------------------------------------

    def _filter_check(self, index: int, run: Run, key: int, present: bool) -> bool:
        """True when the run must be probed (real hit or false positive)."""
        io = self.io
        level_no = index + 1
        io.bloom_accesses[level_no] += 1
        n_live = max(self.level_entries(index), 1)
        m = self._level_bloom_bits(index)
        m_delta = self._level_bloom_bits(index, delta=True)
        if present:
            return True
        # Rolling averages track the queries a better filter could have
        # rejected, which keeps (fp - fp') * n_false an unbiased flip count.
        io._roll(io.fp_roll, level_no, FPR_BASE ** (m / n_live))
        io._roll(io.fpp_roll, level_no, FPR_BASE ** (m_delta / n_live))
        if self.config.collect_histograms:
            io.n_histograms.setdefault(level_no, Counter())[n_live] += 1
        io.bloom_false_events[level_no] += 1
        if m <= 0:
            io.bloom_fp_events[level_no] += 1
            return True
        if self.config.fpr_mode == "analytic_bernoulli":
            fp = self.rng.random() < FPR_BASE ** (m / n_live)
        else:
            fp = run.filter.contains(key) if run.filter is not None else True
        if fp:
            io.bloom_fp_events[level_no] += 1
        return fp

    def _build_filter(self, index: int, run: Run) -> None:
        if self.config.fpr_mode != "concrete_filter":
            return
        # The level's bit budget covers its live entries (mirroring the
        # analytic m_i/n_i model); this run takes its proportional share.
        live = max(self.level_entries(index), len(run))
        bits = self._level_bloom_bits(index) * len(run) / max(live, 1)
        if bits < 1:
            run.filter = None
            return
        run.filter = _ConcreteFilter(int(bits), len(run), seed=self.config.seed ^ index)
        for key in run.keys:
            run.filter.add(key)

    # -- operations ------------------------------------------------------

    def lookup(self, key: int) -> tuple:
        """Search order: buffer, cache, then levels and runs newest first.
        Returns (found, I/Os charged)."""
        io = self.io
        io.query_count += 1
        if key in self.buffer:
            io.hits_per_level[0] += 1
            if next(iter(self.buffer)) == key:
                io.buffer_last_slot_hits += 1
            return True, 0
        if self._cache_get(key):
            return True, 0
        charged = 0
        for index, level in enumerate(self.levels):
            if not level:
                continue
            cold = self._is_cold(index)
            chain = self._chain_pages() if cold else 0
            for run in reversed(level):
                present = key in run.keyset
                if cold:
                    charged += 1 + chain
                    if present:
                        self._found(index, key)
                        return True, charged
                else:
                    if self._filter_check(index, run, key, present):
                        charged += 1
                        if present:
                            self._found(index, key)
                            return True, charged
        return False, charged

    def _found(self, index: int, key: int) -> None:
        self.io.hits_per_level[index + 1] += 1
        self._cache_put(key)

    def update(self, key: int) -> int:
        """Insert or update a key. Returns the I/Os charged (flush/merges)."""
        self.io.inserts_total += 1
        self.cache.pop(key, None)  # buffered entries may not sit in the cache
        if key in self.buffer:
            del self.buffer[key]  # re-add: the update is the newest write
        else:
            self.io.buffer_arrivals += 1
        self.buffer[key] = None
        cap = self.config.buffer_capacity_entries
        if len(self.buffer) >= max(cap, 1):
            return self._flush_buffer()
        return 0

    def _flush_buffer(self) -> int:
        run = Run(sorted(self.buffer))
        self.buffer.clear()
        charged = self._write_pages(run)
        charged += self._push_run(0, run)
        return charged

    def _write_pages(self, run: Run) -> int:
        pages = run.page_count(self.env.entries_per_page)
        self.io.page_writes += pages
        return pages

    def _push_run(self, index: int, run: Run) -> int:
        while index >= len(self.levels):
            self.levels.append([])
        level = self.levels[index]
        level.append(run)
        self.io.total_entries_through[index + 1] += len(run)
        self._build_filter(index, run)
        charged = 0
        allowed = (self.config.hot_merge_threshold
                   if index + 1 < self._nominal - self.config.cold_levels
                   else self.config.cold_merge_threshold)
        cap = self.config.level_capacity(index + 1)
        if len(level) > allowed or self.level_entries(index) >= cap:
            charged += self.flush_merge(index)
            if self.level_entries(index) >= cap:
                moved = level.pop()
                charged += self._push_run(index + 1, moved)
        return charged

    def flush_merge(self, index: int) -> int:
        """Sort-merge all runs at a level. Reads every input page, writes
        the deduplicated output; no I/O when the level holds a single run."""
        level = self.levels[index]
        if len(level) <= 1:
            return 0
        b = self.env.entries_per_page
        reads = sum(r.page_count(b) for r in level)
        input_entries = sum(len(r) for r in level)
        merged_keys = set()
        for r in level:
            merged_keys |= r.keyset
        merged = Run(sorted(merged_keys))
        dups = input_entries - len(merged)
        self.io.duplicates_removed[index + 1] += dups
        writes = merged.page_count(b)
        self.io.page_reads += reads
        self.io.merge_read_io += reads
        self.io.page_writes += writes
        level[:] = [merged]
        self._build_filter(index, merged)
        return reads + writes

    # -- persistence -----------------------------------------------------

    def to_snapshot(self) -> dict:
        return {
            "config": {
                "env": self.env.to_json(),
                "growth_factor": self.config.growth_factor,
                "hot_merge_threshold": self.config.hot_merge_threshold,
                "cold_merge_threshold": self.config.cold_merge_threshold,
                "cache_bits": self.config.cache_bits,
                "buffer_bits": self.config.buffer_bits,
                "bloom_bits": self.config.bloom_bits,
                "bloom_allocation": self.config.bloom_allocation,
                "fpr_mode": self.config.fpr_mode,
                "cold_levels": self.config.cold_levels,
                "seed": self.config.seed,
            },
            "buffer": sorted(self.buffer),
            "levels": [[run.keys for run in level] for level in self.levels],
        }

    @classmethod
    def from_snapshot(cls, snap: dict) -> "SimState":
        cfg = dict(snap["config"])
        cfg["env"] = Environment.from_json(cfg["env"])
        state = cls(SimConfig(**cfg))
        state.buffer = {k: None for k in snap["buffer"]}
        for index, runs in enumerate(snap["levels"]):
            while index >= len(state.levels):
                state.levels.append([])
            for keys in runs:
                run = Run(keys)
                state.levels[index].append(run)
                state._build_filter(index, run)
        return state


def run_trace(config: SimConfig, trace) -> IOStats:
    """Execute a trace; reads go through lookup, inserts/updates through
    update. Total I/Os = page_reads + page_writes."""
    state = SimState(config)
    stats = state.io
    for op in trace:
        if op.op == "read":
            _, charged = state.lookup(op.key)
            stats.read_io += charged
            stats.page_reads += charged
        else:
            state.update(op.key)
    return stats


def run_trace_with_state(config: SimConfig, trace) -> SimState:
    state = SimState(config)
    stats = state.io
    for op in trace:
        if op.op == "read":
            _, charged = state.lookup(op.key)
            stats.read_io += charged
            stats.page_reads += charged
        else:
            state.update(op.key)
    return state
