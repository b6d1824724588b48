"""Reproducible operation traces from six probabilistic workload classes.

Every class shares the first-touch rule: the first time a key is drawn it
enters the trace as an insert; later draws become reads, or updates with
probability write_prob. Generation is bit-exact given the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

from .rng import SplitMix64

WORKLOAD_KINDS = (
    "uniform",
    "round_robin",
    "eighty_twenty",
    "zipf",
    "discover_decay",
    "periodic_decay",
)


class SpecError(ValueError):
    pass


class TraceParseError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Operation:
    op: str   # read | insert | update
    key: int


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str
    op_count: int
    key_space: int = 1024            # K, number of distinct keys (static kinds)
    write_prob: float = 0.2          # update probability after first touch
    zipf_s: float = 1.5              # zeta skew, > 1
    rates: tuple = (4.0, 1.0, 1.0)   # per-tick Poisson rates (reads, writes, updates)
    popularity_beta: tuple = (2.0, 2.0)   # Beta(a, b) for initial popularity
    decay_beta: tuple = (8.0, 2.0)        # Beta(a, b) for decay rate; b=0 pins decay to 1
    period: int = 50                 # ticks per popularity cycle
    cuspity: float = 1.0             # sharpness exponent for the cycloid peaks
    seed: int = 0

    def __post_init__(self):
        if self.kind not in WORKLOAD_KINDS:
            raise SpecError(f"unknown workload kind {self.kind!r}")
        if self.op_count <= 0:
            raise SpecError("op_count must be positive")
        if self.key_space <= 0:
            raise SpecError("key_space must be positive")
        if not 0.0 <= self.write_prob <= 1.0:
            raise SpecError("write_prob must be in [0, 1]")
        if self.kind == "zipf" and self.zipf_s <= 1.0:
            raise SpecError("zipf_s must exceed 1")
        if any(r < 0 for r in self.rates):
            raise SpecError("Poisson rates must be non-negative")
        a, b = self.popularity_beta
        if a <= 0 or b <= 0:
            raise SpecError("popularity_beta parameters must be positive")
        a, b = self.decay_beta
        # decay_beta = (a, 0) is the degenerate no-decay case (gamma == 1).
        if a <= 0 or b < 0:
            raise SpecError("decay_beta parameters must be positive (b may be 0)")
        if self.period <= 0:
            raise SpecError("period must be positive")
        if self.cuspity < 1:
            raise SpecError("cuspity must be >= 1")

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_json(cls, data: dict) -> "WorkloadSpec":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise SpecError(f"workload spec: unknown field(s) {', '.join(unknown)}")
        if "kind" not in data or "op_count" not in data:
            raise SpecError("workload spec: kind and op_count are required")
        kwargs = dict(data)
        for tup_field in ("rates", "popularity_beta", "decay_beta"):
            if tup_field in kwargs:
                kwargs[tup_field] = tuple(kwargs[tup_field])
        return cls(**kwargs)


def _first_touch_op(key: int, seen: set, rng: SplitMix64, write_prob: float) -> Operation:
    if key not in seen:
        seen.add(key)
        return Operation("insert", key)
    if rng.random() < write_prob:
        return Operation("update", key)
    return Operation("read", key)


def _zipf_cumulative(k: int, s: float) -> list:
    weights = [1.0 / (rank ** s) for rank in range(1, k + 1)]
    total = sum(weights)
    cum = []
    acc = 0.0
    for w in weights:
        acc += w / total
        cum.append(acc)
    return cum


def _bisect(cum: list, u: float) -> int:
    lo, hi = 0, len(cum) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] < u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def inverse_cycloid(phase: float) -> float:
    """Height of the inverted cycloid at a normalized phase in [0, 1).

    The arch is parametrized by x = (t - sin t) / 2pi; the height
    (1 + cos t) / 2 peaks sharply (cusp) at phase 0 and 1 and bottoms out
    mid-period. Solved for t by bisection.
    """
    x = phase % 1.0
    target = x * 2.0 * math.pi
    lo, hi = 0.0, 2.0 * math.pi
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if mid - math.sin(mid) < target:
            lo = mid
        else:
            hi = mid
    t = (lo + hi) / 2.0
    return (1.0 + math.cos(t)) / 2.0


def _decay_stream(spec: WorkloadSpec, periodic: bool, debug: dict | None):
    """Discover-decay tick process; periodic adds the cycloid modulation."""
    rng = SplitMix64(spec.seed)
    lam_r, lam_w, lam_u = spec.rates
    a_th, b_th = spec.popularity_beta
    a_g, b_g = spec.decay_beta
    keys: list[int] = []        # key ids in insertion order
    theta: list[float] = []
    gamma: list[float] = []
    born: list[int] = []
    ops: list[Operation] = []
    next_key = 0
    t = 0
    while len(ops) < spec.op_count:
        n_r = rng.poisson(lam_r)
        n_w = rng.poisson(lam_w)
        n_u = rng.poisson(lam_u)
        for _ in range(n_w):
            keys.append(next_key)
            theta.append(rng.beta(a_th, b_th))
            gamma.append(rng.beta(a_g, b_g))
            born.append(t)
            ops.append(Operation("insert", next_key))
            next_key += 1
        if keys and (n_r or n_u):
            pops = []
            for i in range(len(keys)):
                age = t - born[i]
                p = theta[i] * gamma[i] ** age
                if periodic:
                    phase = (age % spec.period) / spec.period
                    p *= inverse_cycloid(phase) ** spec.cuspity
                pops.append(p)
            total = sum(pops)
            if total > 0:
                cum = []
                acc = 0.0
                for p in pops:
                    acc += p / total
                    cum.append(acc)
                for _ in range(n_r):
                    ops.append(Operation("read", keys[_bisect(cum, rng.random())]))
                for _ in range(n_u):
                    ops.append(Operation("update", keys[_bisect(cum, rng.random())]))
        t += 1
    if debug is not None:
        debug.update(theta=list(theta), gamma=list(gamma), born=list(born), ticks=t)
    return ops[: spec.op_count]


def generate(spec: WorkloadSpec, debug: dict | None = None) -> list:
    """Produce the operation trace for a spec. Deterministic given the seed."""
    rng = SplitMix64(spec.seed)
    seen: set[int] = set()
    ops: list[Operation] = []

    if spec.kind == "uniform":
        for _ in range(spec.op_count):
            key = rng.randint(spec.key_space)
            ops.append(_first_touch_op(key, seen, rng, spec.write_prob))
    elif spec.kind == "round_robin":
        for i in range(spec.op_count):
            key = i % spec.key_space
            ops.append(_first_touch_op(key, seen, rng, spec.write_prob))
    elif spec.kind == "eighty_twenty":
        # 20% most recently inserted keys draw 80% of the traffic; the
        # window is recomputed at every draw. The cold branch samples the
        # whole key space, which is also how new keys get discovered.
        inserted: list[int] = []
        for _ in range(spec.op_count):
            if inserted and rng.random() < 0.8:
                window = max(1, math.ceil(0.2 * len(inserted)))
                key = inserted[len(inserted) - 1 - rng.randint(window)]
            else:
                key = rng.randint(spec.key_space)
            if key not in seen:
                inserted.append(key)
            ops.append(_first_touch_op(key, seen, rng, spec.write_prob))
    elif spec.kind == "zipf":
        cum = _zipf_cumulative(spec.key_space, spec.zipf_s)
        for _ in range(spec.op_count):
            key = _bisect(cum, rng.random())
            ops.append(_first_touch_op(key, seen, rng, spec.write_prob))
    elif spec.kind == "discover_decay":
        ops = _decay_stream(spec, periodic=False, debug=debug)
    elif spec.kind == "periodic_decay":
        ops = _decay_stream(spec, periodic=True, debug=debug)
    return ops


def write_trace(path, trace) -> None:
    """One JSON object per line: {"op": ..., "key": ...}."""
    with open(path, "w") as fh:
        for op in trace:
            fh.write(json.dumps({"op": op.op, "key": op.key}, separators=(",", ":")))
            fh.write("\n")


def read_trace(path) -> list:
    ops = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict) or set(obj) != {"op", "key"}:
                raise TraceParseError(path, line_no, "expected fields op and key")
            if obj["op"] not in ("read", "insert", "update"):
                raise TraceParseError(path, line_no, f"unknown op {obj['op']!r}")
            if not isinstance(obj["key"], int):
                raise TraceParseError(path, line_no, "key must be an integer")
            ops.append(Operation(obj["op"], obj["key"]))
    return ops
