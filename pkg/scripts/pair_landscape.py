"""Count local maxima of each pair's likelihood on a fine grid.

A heuristic look at whether the pairwise objectives are unimodal for a
simulated data set; it proves nothing about the population objective.

    python scripts/pair_landscape.py --p 10 --n 500 --scheme decreasing
"""
import argparse

import numpy as np

from truncgraph.pairlik import all_pairs, bucketize, pair_loglik
from truncgraph.simgen import GraphSpec, make_ground_truth, make_scheme, sample_latent, truncate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--scheme", choices=["identical", "decreasing"], default="identical")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--points", type=int, default=1999)
    args = ap.parse_args()

    truth = make_ground_truth(GraphSpec("chain", args.p))
    data = truncate(sample_latent(truth, args.n, args.seed), make_scheme(args.scheme, args.p))
    grid = np.linspace(-0.999, 0.999, args.points)
    multi = 0
    for j, k in all_pairs(args.p):
        ll = pair_loglik(grid, bucketize(data, j, k), data.scheme.pair_bounds(j, k))
        peaks = np.flatnonzero((ll[1:-1] > ll[:-2]) & (ll[1:-1] > ll[2:])) + 1
        if len(peaks) != 1:
            multi += 1
            print(f"pair ({j + 1},{k + 1}): {len(peaks)} interior maxima at {np.round(grid[peaks], 3).tolist()}")
    print(f"{multi} of {len(all_pairs(args.p))} pairs without a single interior maximum")


if __name__ == "__main__":
    main()
