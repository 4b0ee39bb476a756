"""Column and row square functions of a symmetric Markov semigroup.

``G_c(x) = int_0^inf t |d/dt T_t x|^2 dt`` and ``G_r(x) = int_0^inf t |(d/dt T_t x)^*|^2 dt``
are computed in closed form from the spectral components ``x = sum_k x_k``::

    G_c(x) = sum_{k,l != 0} lambda_k lambda_l / (lambda_k + lambda_l)^2  x_k^* x_l

using ``int_0^inf t exp(-t s) dt = 1/s^2``.  A time-quadrature oracle is kept for
cross-checks.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from .algebra import AlgebraElement, DomainError, lp_norm, positive_power, random_element
from .semigroup import SpectralDecomposition, fixed_point_projection


def _gram(dec: SpectralDecomposition, x: AlgebraElement, row: bool) -> AlgebraElement:
    comps = dec.components(x)
    idx = [k for k in range(len(comps)) if dec.nonzero[k]]
    lam = dec.eigenvalues
    alg = dec.algebra
    G = alg.zero()
    for k in idx:
        for l in idx:
            c = lam[k] * lam[l] / (lam[k] + lam[l]) ** 2
            G = G + c * (comps[k] @ comps[l].adjoint if row else comps[k].adjoint @ comps[l])
    return alg.element([0.5 * (b + b.conj().T) for b in G.blocks])


def gram_element(dec: SpectralDecomposition, x: AlgebraElement) -> AlgebraElement:
    """Column Gram element ``G_c(x)``; the kernel component of ``x`` does not contribute."""
    return _gram(dec, x, row=False)


def row_gram_element(dec: SpectralDecomposition, x: AlgebraElement) -> AlgebraElement:
    return _gram(dec, x, row=True)


def gram_by_quadrature(dec: SpectralDecomposition, x: AlgebraElement, row: bool = False,
                       epsrel: float = 1e-12) -> AlgebraElement:
    """Independent oracle: integrate ``t |L e^{-tL} x|^2`` with the generator matrix and ``expm``."""
    alg = dec.algebra
    Lm = dec.generator.matrix
    v = alg.vec(x)

    def integrand(t):
        d = alg.unvec(Lm @ (expm(-t * Lm) @ v))
        sq = d @ d.adjoint if row else d.adjoint @ d
        return t * np.concatenate([b.ravel() for b in sq.blocks])

    flat, _ = quad_vec(integrand, 0, np.inf, epsrel=epsrel, epsabs=0)
    blocks, start = [], 0
    for n in alg.block_dims:
        blocks.append(flat[start:start + n * n].reshape(n, n))
        start += n * n
    return alg.element([0.5 * (b + b.conj().T) for b in blocks])


@dataclass
class SquareFunctionValue:
    p: float
    column_value: float
    row_value: float
    gram: AlgebraElement
    row_gram: AlgebraElement
    splitting_bound: float | None = None
    splitting_trials: int = 0

    def recompute_column(self) -> float:
        return lp_norm(positive_power(self.gram, 0.5), self.p)

    def to_json(self):
        return {"p": self.p, "column_value": self.column_value, "row_value": self.row_value,
                "splitting_bound": self.splitting_bound, "splitting_trials": self.splitting_trials}


def _sqnorm(G: AlgebraElement, p: float) -> float:
    return lp_norm(positive_power(G, 0.5), p)


def column_norm(dec, x, p):
    return _sqnorm(gram_element(dec, x), p)


def row_norm(dec, x, p):
    return _sqnorm(row_gram_element(dec, x), p)


def splitting_upper_bound(dec: SpectralDecomposition, x: AlgebraElement, p: float,
                          trials: int = 32, seed=0) -> float:
    """``min column(x_1) + row(x_2)`` over random splittings ``x = x_1 + x_2``.

    The trivial splittings ``(x, 0)`` and ``(0, x)`` are always included, so this
    never exceeds ``min(column(x), row(x))``.
    """
    rng = np.random.default_rng(seed)
    best = min(column_norm(dec, x, p), row_norm(dec, x, p))
    scale = lp_norm(x, p)
    for _ in range(trials):
        s = rng.uniform(0, 1)
        noise = random_element(dec.algebra, rng, "general")
        x1 = s * x + (rng.uniform(0, 0.5) * scale / max(lp_norm(noise, p), 1e-300)) * noise
        best = min(best, column_norm(dec, x1, p) + row_norm(dec, x - x1, p))
    return best


def square_function_norms(dec: SpectralDecomposition, x: AlgebraElement, p: float,
                          trials: int = 32, seed=0) -> SquareFunctionValue:
    if not 1 < p < math.inf:
        raise DomainError("square functions are compared with L_p norms for 1 < p < inf")
    G, R = gram_element(dec, x), row_gram_element(dec, x)
    val = SquareFunctionValue(p, _sqnorm(G, p), _sqnorm(R, p), G, R)
    if p < 2:
        val.splitting_bound = splitting_upper_bound(dec, x, p, trials, seed)
        val.splitting_trials = trials
    return val


@dataclass
class EquivalenceReport:
    p: float
    window: tuple[float, float]
    seeds: list = field(default_factory=list)
    ratios: list = field(default_factory=list)

    @property
    def min_ratio(self) -> float:
        return float(min(self.ratios))

    @property
    def max_ratio(self) -> float:
        return float(max(self.ratios))

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios)) and self.window[0] <= self.min_ratio
                    and self.max_ratio <= self.window[1])

    def to_json(self):
        return {"p": self.p, "window": list(self.window), "min_ratio": self.min_ratio,
                "max_ratio": self.max_ratio, "passed": self.passed,
                "per_seed": [{"seed": s, "ratio": r} for s, r in zip(self.seeds, self.ratios)]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "seed", "ratio"])
        for s, r in zip(self.seeds, self.ratios):
            w.writerow([self.p, s, f"{r:.12g}"])
        return buf.getvalue()


def equivalence_tracker(dec: SpectralDecomposition, p: float, seeds, window=(1e-3, 1e3),
                        trials: int = 16) -> EquivalenceReport:
    """Ratios ``|x|_p / RHS(x)`` on random ``x`` in ``(ker L)^perp``.

    ``RHS`` is ``max(column, row)`` for ``p >= 2`` and the best splitting bound for
    ``p < 2``.  The kernel component is removed first since square functions vanish on it.
    """
    rep = EquivalenceReport(p, tuple(window))
    for s in seeds:
        x = random_element(dec.algebra, s, "general")
        x = x - fixed_point_projection(dec, x)
        v = square_function_norms(dec, x, p, trials, s)
        rhs = max(v.column_value, v.row_value) if p >= 2 else v.splitting_bound
        rep.seeds.append(s)
        rep.ratios.append(lp_norm(x, p) / rhs)
    return rep
