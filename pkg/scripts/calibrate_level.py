"""One vortex level on K_n: completion rate and leftover max degree."""
import argparse
from collections import Counter

from triple_spread.core import DenseGraph
from triple_spread.params import PipelineParams
from triple_spread.sampling import Seed, sample_vertex_subset
from triple_spread.vortex import StageError, run_level


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=33)
    ap.add_argument("--inner", type=int, default=13, help="|V_1|")
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--reserve-q", type=float, nargs="+", default=[0.7, 0.75, 0.8])
    ap.add_argument("--leftover-fraction", type=float, default=0.15)
    args = ap.parse_args()

    g = DenseGraph.complete(args.n)
    for q in args.reserve_q:
        params = PipelineParams(reserve_q=q, reserve_tolerance=1.0, nibble_leftover_fraction=args.leftover_fraction,
                                nibble_restarts=5, level_restarts=10)
        errs, degs = Counter(), Counter()
        for s in range(args.trials):
            v1 = sample_vertex_subset(range(args.n), args.inner, Seed(s).child(9))
            try:
                r = run_level(g, v1, params, Seed(s))
            except StageError as e:
                errs[type(e).__name__] += 1
                continue
            degs[r.leftover_inside.max_degree()] += 1
        good = sum(c for d, c in degs.items() if d <= args.inner / 2)
        print(f"q={q}: completed {sum(degs.values())}/{args.trials}, leftover <= {args.inner / 2} in {good}, "
              f"degrees {dict(sorted(degs.items()))}, errors {dict(errs)}")


if __name__ == "__main__":
    main()
