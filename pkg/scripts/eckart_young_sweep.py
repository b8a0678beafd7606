"""Sampled distance against the smallest singular value on random square matrices.

Usage: python scripts/eckart_young_sweep.py [--count 50] [--seed 0] [--budget 10000]
"""

import argparse
import time

import numpy as np

from conicdist.distance import SolverConfig, distance_dual
from conicdist.generators import random_square_instance
from conicdist.numerics import NormKind, smallest_singular_value


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=int, default=10_000)
    parser.add_argument("--no-polish", action="store_true")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = SolverConfig(mode="sampled", budget=args.budget, polish=not args.no_polish, seed=args.seed)
    errs = []
    t0 = time.perf_counter()
    for i in range(args.count):
        inst = random_square_instance(rng, unstructured=True, norm_kind=NormKind.L2)
        sigma = smallest_singular_value(inst.F.A)
        alpha, _ = distance_dual(inst.F, inst.blocks, cfg)
        errs.append(abs(alpha - sigma) / max(1.0, sigma))
        print(f"{i:4d}  dim {inst.F.y_dim}  sigma_min {sigma:.10f}  alpha {alpha:.10f}  rel err {errs[-1]:.2e}")
    print(f"\nworst {max(errs):.2e}  median {np.median(errs):.2e}  total {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
