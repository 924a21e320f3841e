"""Layer-I power over a grid of pre/post-change rates, written as CSV and SVG heatmap."""

import argparse
import time
from pathlib import Path

from hhtdrift import plots
from hhtdrift.analysis import PowerConfig, estimate_power, write_power_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/power"))
    ap.add_argument("--m", type=int, default=1000, help="pre-change length")
    ap.add_argument("--k", type=int, default=200, help="post-change window")
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    res = estimate_power(PowerConfig(m=args.m, k=args.k, runs=args.runs), seed=args.seed, n_jobs=args.jobs)
    write_power_csv(args.out / "power.csv", res)
    plots.write_svg(args.out / "power.svg", plots.heatmap(
        res.power, res.grid, res.grid, "Layer-I power", "post-change rate q", "pre-change rate p"))
    print(f"{res.grid.size}x{res.grid.size} grid in {time.perf_counter() - start:.1f}s")
    for p, row in zip(res.grid, res.power):
        print(f"p={p:.1f}  " + " ".join(f"{v:4.2f}" for v in row))


if __name__ == "__main__":
    main()
