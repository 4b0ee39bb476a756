"""Distribution of |sup+_z T_z x|_p / |x|_p over random x as the sector angle varies."""
import argparse
import math

import numpy as np

from ncsg.algebra import random_element
from ncsg.maximal import maximal_inequality_harness, sector_grid

from _common import schur_system, write_rows

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n", type=int, default=3)
ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0])
ap.add_argument("--fractions", type=float, nargs="+", default=[0.1, 0.5, 0.9],
                help="psi as a fraction of the largest admissible angle")
ap.add_argument("--samples", type=int, default=8)
ap.add_argument("--pieces", action="store_true", help="also bracket the two pieces of T_z")
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--out", default="results/maximal_ratio_sweep.csv")
args = ap.parse_args()

dec = schur_system(args.n, args.seed)
rng = np.random.default_rng(args.seed)
xs = [random_element(dec.algebra, rng) for _ in range(args.samples)]
rows = []
for p in args.p:
    top = (0.5 - abs(1 / p - 0.5)) * math.pi
    for frac in args.fractions:
        psi = frac * top
        res = maximal_inequality_harness(dec, p, psi, sector_grid(psi), xs, pieces=args.pieces)
        print(f"p={p:g} psi/pi={psi / math.pi:.3f}: ratios {res['ratio_min']:.4f}..{res['ratio_max']:.4f} "
              f"(budget {res['budget']:.3g})")
        rows += [{"p": p, "psi": psi, "budget": res["budget"], **r} for r in res["rows"]]
write_rows(args.out, rows)
