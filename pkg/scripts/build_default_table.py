"""Regenerate the shipped bound table (eta 0.9, significance 0.0001 and 0.01)."""

import argparse
import time
from pathlib import Path

from hhtdrift.boundtable import DEFAULT_TABLE_FILE, build_table, save_table

OUT = Path(__file__).resolve().parents[1] / "src" / "hhtdrift" / "data" / DEFAULT_TABLE_FILE


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=OUT)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    start = time.perf_counter()
    table = build_table(seed=args.seed, n_jobs=args.jobs)
    save_table(table, args.out)
    print(f"wrote {args.out} ({table.values.size // 2} entries) in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
