"""Four quantities on random exact-mode instances, one row per instance.

Usage: python scripts/four_way_table.py [--count 20] [--seed 0] [--csv out.csv]
"""

import argparse
import csv
import math
import time

import numpy as np

from conicdist import lp_core
from conicdist.distance import SolverConfig, verify_equalities
from conicdist.generators import random_exact_instance


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", help="also write the rows to this file")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = SolverConfig(mode="exact", seed=args.seed)
    rows = []
    header = ["i", "m", "n", "k", "q1", "q2", "q3", "q4", "max_gap", "ok", "seconds"]
    print(" ".join(f"{h:>12}" for h in header))
    for i in range(args.count):
        inst = random_exact_instance(rng)
        t0 = time.perf_counter()
        rep = verify_equalities(inst.F, inst.blocks, cfg)
        dt = time.perf_counter() - t0
        q = rep.values
        gap = max(abs(v) for k, v in rep.gaps.items() if k != "q1-q3")
        row = [i, inst.F.y_dim, inst.F.x_dim, len(inst.blocks), q["q1"], q["q2"], q["q3"], q["q4"],
               gap, rep.ok, dt]
        rows.append(row)
        print(" ".join(f"{v:>12.6g}" if isinstance(v, float) and not isinstance(v, bool) else f"{v!s:>12}"
                       for v in row))
    finite = [r[8] for r in rows if math.isfinite(r[6])]
    print(f"\nworst gap among q2, q3, q4: {max(finite, default=0.0):.3e}; "
          f"failures: {sum(not r[9] for r in rows)}; LP fallbacks: {lp_core.STATS}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)


if __name__ == "__main__":
    main()
