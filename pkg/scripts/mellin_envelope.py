"""Envelope constant K with |n_theta_hat(u)| <= K exp((|theta| - pi/2)|u|), and Mellin reconstruction errors."""
import argparse
import math

import numpy as np

from ncsg.calculus import m_theta, mellin_reconstruct, n_theta_hat

from _common import write_rows

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--thetas", type=int, default=11, help="number of angles in [0, 0.45 pi]")
ap.add_argument("--u-max", type=float, default=30.0)
ap.add_argument("--out", default="results/mellin_envelope.csv")
args = ap.parse_args()

u = np.linspace(-args.u_max, args.u_max, 12001)
rows = []
for theta in np.linspace(0, 0.45 * math.pi, args.thetas):
    K = float(np.max(np.abs(n_theta_hat(u, theta)) * np.exp((math.pi / 2 - theta) * np.abs(u))))
    errs = {f"err_x{x:g}": abs(mellin_reconstruct(1.0, x, theta).value - m_theta(x, theta)) for x in (0.1, 1, 10)}
    rows.append({"theta": theta, "K": K, **errs})
    print(f"theta/pi={theta / math.pi:.3f}  K={K:.4f}  max err={max(errs.values()):.2e}")
write_rows(args.out, rows)
