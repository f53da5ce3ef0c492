"""Worst-case fraction of the FL^infty norm recovered by Fejer-kernel dual
candidates, as a function of kernel order, over random degree-8 sequences.

    python3 scripts/dual_order_sweep.py --orders 32,64,128,256 --samples 50
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from annulus_lab.circle import CircleGrid
from annulus_lab.laurent import random_laurent
from annulus_lab.spaces import (SpaceSpec, dual_norm_lower, fejer_dual_candidates, fl_norm,
                                normalize_duals)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--orders", default="32,64,128,256")
    parser.add_argument("--samples", type=int, default=50)
    parser.add_argument("--centres", type=int, default=1024)
    parser.add_argument("--degree", type=int, default=8)
    parser.add_argument("--seed", type=int, default=909)
    args = parser.parse_args()

    grid = CircleGrid(16384)
    rng = np.random.default_rng(args.seed)
    lambdas = [random_laurent(rng, -args.degree, args.degree) for _ in range(args.samples)]
    sups = [fl_norm(lam, SpaceSpec(math.inf, 0.0), grid).value for lam in lambdas]
    print("order  worst    median   floor 1-d/(order+1)")
    for order in (int(o) for o in args.orders.split(",")):
        cands = normalize_duals(fejer_dual_candidates(order, args.centres), grid)
        ratios = [dual_norm_lower(lam, cands, grid, normalized=True) / s for lam, s in zip(lambdas, sups)]
        print(f"{order:5d}  {min(ratios):.4f}  {np.median(ratios):.4f}  {1 - args.degree / (order + 1):.4f}")


if __name__ == "__main__":
    main()
