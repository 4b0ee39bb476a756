"""Ratios |x|_p / square-function norm over random x, for several generators and exponents."""
import argparse

from ncsg.squarefn import equivalence_tracker

from _common import schur_system, write_rows

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--sizes", type=int, nargs="+", default=[2, 3, 4])
ap.add_argument("--p", type=float, nargs="+", default=[1.25, 1.5, 2.0, 3.0, 4.0, 6.0])
ap.add_argument("--seeds", type=int, default=50)
ap.add_argument("--trials", type=int, default=16)
ap.add_argument("--out", default="results/square_function_windows.csv")
args = ap.parse_args()

rows = []
for n in args.sizes:
    dec = schur_system(n, n)
    for p in args.p:
        rep = equivalence_tracker(dec, p, range(args.seeds), trials=args.trials)
        print(f"M_{n} p={p:g}: [{rep.min_ratio:.4f}, {rep.max_ratio:.4f}]")
        rows.append({"n": n, "p": p, "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio})
write_rows(args.out, rows)
