"""Lower bounds on |L^{iu}|_{p->p} for a Schur generator as u grows, with fitted envelope constants."""
import argparse

import numpy as np

from ncsg.multiplier import imaginary_power_growth

from _common import schur_system, write_rows

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n", type=int, default=4, help="matrix size")
ap.add_argument("--p", type=float, nargs="+", default=[1.25, 1.5, 3.0, 5.0])
ap.add_argument("--u-max", type=float, default=6.0)
ap.add_argument("--points", type=int, default=13)
ap.add_argument("--restarts", type=int, default=6)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--out", default="results/imaginary_power_growth.csv")
args = ap.parse_args()

dec = schur_system(args.n, args.seed)
rows = []
for p in args.p:
    g = imaginary_power_growth(dec, p, np.linspace(0.5, args.u_max, args.points), args.restarts, args.seed)
    print(f"p={p:g}: fitted C={g['fitted_constant']:.4g}, interpolated C={g['fitted_interpolated_constant']:.4g}")
    rows += g["rows"]
write_rows(args.out, rows)
