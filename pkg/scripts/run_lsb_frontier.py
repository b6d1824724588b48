#!/usr/bin/env python3
"""Read-vs-write cost frontier: leveled LSM sweep against the
log-structured B-tree comparator at matched memory budgets."""

import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from kvcontinuum.continuum import DesignKnobs, Environment, LsbTreeModel, cost, lsb_tree_cost


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--asymmetry", type=float, default=20.0,
                    help="read cost discount relative to a write")
    args = ap.parse_args()

    env = Environment(n_entries=2**20, entry_bits=4096, entries_per_page=8,
                      key_bits=64, total_memory_bits=2**40, page_bytes=4096)
    print("LSB-tree (C, point_read, short_range, update, memory_bits):")
    for c in range(1, 10):
        v = lsb_tree_cost(env, LsbTreeModel(c, args.asymmetry))
        print(f"  C={c}: {v.point_read:7.3f} {v.short_range:7.3f} {v.update:7.4f} "
              f"{v.memory_footprint:.3g}")

    mf = math.ceil(lsb_tree_cost(env, LsbTreeModel(5, args.asymmetry)).memory_footprint)
    print(f"\nLeveled LSM at the C=5 mapping-table budget ({mf} bits):")
    for t in range(2, 11):
        knobs = DesignKnobs(growth_factor=t, hot_merge_threshold=1,
                            cold_merge_threshold=1, node_size_pages=1,
                            fence_filter_memory_bits=mf,
                            buffer_memory_bits=8 * env.entry_bits)
        v = cost(env, knobs)
        print(f"  T={t}: {v.point_read:7.3f} {v.short_range:7.3f} {v.update:7.4f}")


if __name__ == "__main__":
    main()
