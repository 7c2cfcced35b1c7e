"""Reserve selection and internal cover-down on K_60 with |V_1| = 20."""
import argparse
from collections import Counter

from triple_spread.core import DenseGraph, as_mask
from triple_spread.nibble import fractional_weights, greedy_cover, regular_subsample
from triple_spread.sampling import Seed
from triple_spread.vortex import InternalCoverError, ReserveSelectionError, cover_internal, select_reserve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--inner", type=int, default=20)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--q", type=float, nargs="+", default=[0.5, 0.7, 0.8])
    ap.add_argument("--tolerance", type=float, default=1.0)
    args = ap.parse_args()

    g = DenseGraph.complete(args.n)
    v1 = as_mask(range(args.inner))
    outside = ((1 << args.n) - 1) & ~v1
    rest = g.minus(g.induced(v1))
    for q in args.q:
        out = Counter()
        for s in range(args.trials):
            seed = Seed(s)
            try:
                reserve = select_reserve(g, v1, q, args.tolerance, seed.child(0), 100)
            except ReserveSelectionError as e:
                failed = sorted(k for k, v in e.report.items() if not getattr(v, "ok", True))
                out["reserve:" + ",".join(failed)] += 1
                continue
            g1 = rest.minus(reserve.edges)
            w = fractional_weights(g1, eps0=1.0, target=args.n / 8, strict=False)
            smp = regular_subsample(g1, 1.0, seed.child(1), weights=w, tolerance=float("inf"))
            cover = greedy_cover(smp, g1, args.n // 4, seed.child(2), max_restarts=3)
            try:
                cover_internal(cover.leftover.induced(outside), cover.leftover.union(reserve.edges), 1.0, seed.child(3))
                out["ok"] += 1
            except InternalCoverError:
                out["internal"] += 1
        print(f"q={q}: {dict(out)}")


if __name__ == "__main__":
    main()
