"""Convergence of T_z x toward x (z -> 0) and toward P_0 x (z -> inf), with witness-projection tables."""
import argparse
import math

import numpy as np

from ncsg.algebra import random_element
from ncsg.ergodic import convergence_path, witness_projection

from _common import schur_system, write_json

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n", type=int, default=3)
ap.add_argument("--angle", type=float, default=0.25, help="arg z as a fraction of pi")
ap.add_argument("--epsilon", type=float, default=0.1)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--out", default="results/ergodic_decay.json")
args = ap.parse_args()

dec = schur_system(args.n, args.seed)
x = random_element(dec.algebra, args.seed)
rot = np.exp(1j * args.angle * math.pi)
doc = {}
for direction, radii in (("zero", np.logspace(-8, 0, 17)), ("infinity", np.logspace(0, 2, 17))):
    grid = list(radii * rot)
    path = convergence_path(dec, x, grid, direction)
    wit = witness_projection(dec, x, args.epsilon, grid, direction)
    print(f"toward {direction}: log-log slope {path.loglog_slope():.3f}, tau(e^perp)={wit.tau_complement:.3f}, "
          f"final compressed deviation {wit.final:.2e}")
    doc[direction] = {"path": path.to_json(), "witness": wit.to_json()}
write_json(args.out, doc)
