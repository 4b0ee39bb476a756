import csv
import json
from pathlib import Path

import numpy as np

from ncsg.algebra import TracialAlgebra
from ncsg.semigroup import Schur, build_generator, eigendecompose


def schur_system(n: int, seed: int, dim: int = 2):
    rng = np.random.default_rng(seed)
    return eigendecompose(build_generator(Schur(rng.standard_normal((n, dim))), TracialAlgebra.matrix(n)))


def write_rows(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    keys = sorted({k for r in rows for k in r})
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {path}")


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")
