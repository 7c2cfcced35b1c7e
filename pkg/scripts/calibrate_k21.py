"""Pipeline success rate and failure stages on K_21 for a params file."""
import argparse
import json
import time
from collections import Counter

from triple_spread.core import DenseGraph, verify_decomposition
from triple_spread.params import PipelineParams
from triple_spread.pipeline import construct_recursive, wilson_interval
from triple_spread.sampling import Seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--params", required=True, help="JSON dict of PipelineParams fields")
    ap.add_argument("--n", type=int, default=21)
    ap.add_argument("--seeds", type=int, nargs=2, default=[0, 100], metavar=("LO", "HI"))
    ap.add_argument("--depth", type=int, default=1)
    ap.add_argument("--child", type=int, default=None, help="use Seed(s).child(k) as the CLI does")
    args = ap.parse_args()

    params = PipelineParams(**json.load(open(args.params)))
    g = DenseGraph.complete(args.n)
    stages, wins = Counter(), []
    t0 = time.time()
    for s in range(*args.seeds):
        seed = Seed(s) if args.child is None else Seed(s).child(args.child)
        rec = construct_recursive(g, params, args.depth, seed)
        if rec.success:
            assert verify_decomposition(g, rec.decomposition).valid
            wins.append(s)
        stages[rec.failure_stage or "ok"] += 1
    k = args.seeds[1] - args.seeds[0]
    lo, hi = wilson_interval(len(wins), k)
    print(f"n={args.n} success {len(wins)}/{k}  95% CI [{lo:.3f}, {hi:.3f}]  {time.time() - t0:.0f}s")
    print("stages", dict(stages))
    print("successful seeds", wins)


if __name__ == "__main__":
    main()
