#!/usr/bin/env python3
"""Paired-simulation check of the gradient estimators across workloads.

For each workload and component, prints the mean estimated savings next
to the mean actual savings of a paired +delta run, with the 95% CI.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from kvcontinuum.continuum import Environment
from kvcontinuum.simulator import SimConfig
from kvcontinuum.workloads import WorkloadSpec
from kvcontinuum.gradients import validate_gradients


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=64)
    ap.add_argument("--ops", type=int, default=10_000)
    ap.add_argument("--delta-bits", type=int, default=4096)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    env = Environment(n_entries=2**14, entry_bits=64, entries_per_page=64,
                      key_bits=32, total_memory_bits=2**22, page_bytes=512)
    total = 2**17
    base = SimConfig(env=env, growth_factor=2, cache_bits=total // 4,
                     buffer_bits=total // 2, bloom_bits=total // 4, seed=29)
    workloads = (
        ("uniform", {"key_space": 2**13, "write_prob": 0.25}),
        ("zipf", {"key_space": 2**13, "zipf_s": 1.5, "write_prob": 0.25}),
        ("round_robin", {"key_space": 2**13, "write_prob": 0.25}),
    )
    for kind, extra in workloads:
        spec = WorkloadSpec(kind=kind, op_count=args.ops, seed=17, **extra)
        report = validate_gradients(spec, env, trials=args.trials,
                                    base_config=base, delta_bits=args.delta_bits,
                                    jobs=args.jobs)
        print(f"== {kind} (dM = {args.delta_bits} bits, {args.trials} paired trials)")
        for comp, r in report.items():
            lo, hi = r["ci95"]
            mark = "in CI" if lo <= r["estimated_mean"] <= hi else "OUTSIDE CI"
            print(f"  {comp:7s} estimate {r['estimated_mean']:+9.3f}   "
                  f"actual {r['actual_mean']:+9.3f}  CI ({lo:+8.3f}, {hi:+8.3f})  {mark}")


if __name__ == "__main__":
    main()
