"""Coupled success curve of G^3(n, p) with Wilson intervals, written as CSV."""
import argparse
import csv
import sys

import numpy as np

from triple_spread.pipeline import default_workers, threshold_sweep, wilson_interval


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[7, 9, 13])
    ap.add_argument("--points", type=int, default=21)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["n", "p", "successes", "trials", "rate", "lo", "hi"])
    grid = np.linspace(0.0, 1.0, args.points).round(6).tolist()
    for n in args.n:
        _, outcomes = threshold_sweep(n, grid, args.trials, seed=args.seed, workers=args.workers, return_outcomes=True)
        for j, p in enumerate(grid):
            k = sum(o[j] for o in outcomes)
            lo, hi = wilson_interval(k, args.trials)
            w.writerow([n, p, k, args.trials, f"{k / args.trials:.4f}", f"{lo:.4f}", f"{hi:.4f}"])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
