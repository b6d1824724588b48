#!/usr/bin/env python3
"""Sweep the cache/buffer/bloom simplex for a workload and plot the
contour with gradient arrows and the descent's predicted minima.

Writes grid.csv next to the optional PNG. Example:

    python3 scripts/run_simplex_sweep.py --kind zipf --zipf-s 1.1 \
        --resolution 15 --png simplex.png
"""

import argparse
import csv
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from kvcontinuum.continuum import Environment
from kvcontinuum.simulator import SimConfig
from kvcontinuum.workloads import WorkloadSpec
from kvcontinuum.gradients import descend_on_grid, grid_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", default="uniform")
    ap.add_argument("--zipf-s", type=float, default=1.1)
    ap.add_argument("--ops", type=int, default=20_000)
    ap.add_argument("--resolution", type=int, default=15)
    ap.add_argument("--write-prob", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="grid.csv")
    ap.add_argument("--png", help="optional ternary plot output")
    args = ap.parse_args()

    env = Environment(n_entries=2**15, entry_bits=64, entries_per_page=64,
                      key_bits=32, total_memory_bits=2**22, page_bytes=512)
    total = (args.resolution - 1) * 8 * 4096
    spec = WorkloadSpec(kind=args.kind, op_count=args.ops, key_space=2**15,
                        write_prob=args.write_prob, zipf_s=args.zipf_s,
                        seed=args.seed)
    base = SimConfig(env=env, growth_factor=4, seed=5)
    rows = grid_sweep(spec, env, args.resolution, base_config=base,
                      total_bits=total, jobs=args.jobs)

    with open(args.out, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cache_frac", "buffer_frac", "bloom_frac", "total_io",
                         "arrow_from", "arrow_to"])
        for r in rows:
            writer.writerow([f"{r['cache_frac']:.6g}", f"{r['buffer_frac']:.6g}",
                             f"{r['bloom_frac']:.6g}", r["total_io"],
                             r["arrow_from"], r["arrow_to"]])
    print(f"wrote {len(rows)} rows to {args.out}")

    minima = {}
    for r in rows:
        _, best = descend_on_grid(rows, r["cell"])
        minima[best] = minima.get(best, 0) + 1
    actual = min(rows, key=lambda r: r["total_io"])
    print("actual minimum:", actual["cell"], actual["total_io"])
    print("most-predicted minima:", sorted(minima.items(), key=lambda kv: -kv[1])[:5])

    if args.png:
        plot(rows, minima, tuple(actual["cell"]), args.png)
        print(f"wrote {args.png}")


def _bary_xy(cell, n):
    a, b, c = (v / n for v in cell)  # cache, buffer, bloom
    x = 0.5 * (2 * c + a) / (a + b + c)
    y = (math.sqrt(3) / 2) * a / (a + b + c)
    return x, y


def plot(rows, minima, actual_cell, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = sum(rows[0]["cell"])
    xs, ys, ios = [], [], []
    for r in rows:
        x, y = _bary_xy(r["cell"], n)
        xs.append(x)
        ys.append(y)
        ios.append(r["total_io"])
    fig, ax = plt.subplots(figsize=(7, 6))
    sc = ax.scatter(xs, ys, c=ios, cmap="coolwarm", s=160, marker="h")
    fig.colorbar(sc, label="total I/O")
    for r in rows:
        if r["arrow_from"] == "none":
            continue
        frm = {"cache": 0, "buffer": 1, "bloom": 2}[r["arrow_from"]]
        to = {"cache": 0, "buffer": 1, "bloom": 2}[r["arrow_to"]]
        cell = list(r["cell"])
        cell[frm] -= 1
        cell[to] += 1
        x0, y0 = _bary_xy(r["cell"], n)
        x1, y1 = _bary_xy(cell, n)
        ax.annotate("", xy=(x1, y1), xytext=(x0, y0),
                    arrowprops=dict(arrowstyle="->", lw=0.6, alpha=0.6))
    peak = max(minima.values())
    for cell, count in minima.items():
        x, y = _bary_xy(cell, n)
        ax.plot(x, y, "o", color="orange", alpha=0.3 + 0.7 * count / peak, ms=12)
    x, y = _bary_xy(actual_cell, n)
    ax.plot(x, y, "o", color="gold", ms=16, mec="black")
    ax.text(0, -0.06, "buffer", ha="center")
    ax.text(1, -0.06, "bloom", ha="center")
    ax.text(0.5, math.sqrt(3) / 2 + 0.03, "cache", ha="center")
    ax.set_axis_off()
    fig.savefig(path, dpi=140, bbox_inches="tight")


if __name__ == "__main__":
    main()
