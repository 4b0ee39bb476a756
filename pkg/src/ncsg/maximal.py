"""Noncommutative maximal norms ``L_p(M; l_inf)`` and ``L_p(M; l_inf^c)`` of finite families.

For a positive family the norm is ``inf { |a|_p : a >= x_i for all i }``, a convex
program solved here by a log-barrier Newton method with dual certificates::

    primal   min |a|_p            s.t.  a - x_i >= 0
    dual     max sum_i tau(x_i y_i)  s.t.  y_i >= 0, |sum_i y_i|_q <= 1

Weak duality ``sum tau(x_i y_i) <= tau(a sum y_i) <= |a|_p`` makes every
(primal, dual) pair a bracket.  The objective ``tau(a^p)`` and the constraints
are separable over the blocks of the algebra, so each block is solved on its own
and only the dual normalization couples them.

General families are bracketed: the upper bound comes from an explicit
factorization ``x_i = a y_i b``, the lower bound from ``max_i |x_i|_p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgebraElement,
    DomainError,
    TracialAlgebra,
    lp_norm,
    modulus,
    positive_power,
    trace,
)
from .calculus import apply_Tz, ergodic_fn, apply_multiplier, envelope_constant, m_theta_fn
from .semigroup import SpectralDecomposition


class HypothesisError(ValueError):
    """A standing hypothesis such as the sector-angle condition is violated."""


@dataclass
class MaximalFamily:
    elements: list[AlgebraElement]
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not self.elements:
            raise ValueError("a maximal family needs at least one element")
        alg = self.elements[0].algebra
        if any(x.algebra != alg for x in self.elements):
            raise ValueError("all elements of a family must share one algebra")
        if not self.labels:
            self.labels = list(range(len(self.elements)))

    @property
    def algebra(self) -> TracialAlgebra:
        return self.elements[0].algebra

    def __len__(self):
        return len(self.elements)

    def scaled(self, c: float) -> "MaximalFamily":
        return MaximalFamily([c * x for x in self.elements], list(self.labels))

    def to_json(self):
        return {"labels": [str(l) for l in self.labels], "elements": [x.to_json() for x in self.elements]}


@dataclass
class MajorantCertificate:
    a: AlgebraElement
    duals: list[AlgebraElement]
    p: float
    primal: float
    dual: float
    converged: bool = True
    newton_steps: int = 0

    @property
    def gap(self) -> float:
        return self.primal - self.dual

    @property
    def relative_gap(self) -> float:
        return self.gap / self.primal if self.primal > 0 else 0.0

    @property
    def value(self) -> float:
        return self.primal

    def feasibility_residual(self, family: MaximalFamily) -> float:
        """``max(0, -min_i lambda_min(a - x_i))``."""
        worst = min((self.a - x).eigvalsh().min() for x in family.elements)
        return max(0.0, -float(worst))

    def dual_norm(self) -> float:
        total = self.duals[0]
        for y in self.duals[1:]:
            total = total + y
        return lp_norm(total, _conjugate(self.p))

    def recompute_dual(self, family: MaximalFamily) -> float:
        return float(sum(trace(x @ y).real for x, y in zip(family.elements, self.duals)))

    def to_json(self):
        return {"p": self.p, "primal": self.primal, "dual": self.dual, "gap": self.gap,
                "relative_gap": self.relative_gap, "converged": self.converged,
                "a": self.a.to_json()}


def _conjugate(p):
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


# -- block barrier solver -----------------------------------------------------

def _herm_basis(n: int) -> np.ndarray:
    """Columns: column-stacked vecs of an orthonormal basis of ``n x n`` Hermitian matrices."""
    cols = []
    for i in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[i, i] = 1
        cols.append(E)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[i, j] = E[j, i] = 1 / math.sqrt(2)
            cols.append(E)
            F = np.zeros((n, n), dtype=complex)
            F[i, j], F[j, i] = -1j / math.sqrt(2), 1j / math.sqrt(2)
            cols.append(F)
    return np.column_stack([E.reshape(-1, order="F") for E in cols])


def _vec(M):
    return M.reshape(-1, order="F")


def _unvec(v, n):
    M = v.reshape((n, n), order="F")
    return 0.5 * (M + M.conj().T)


class _BlockProblem:
    """``min c tr(a^p) - (1/t) sum_i logdet(a - x_i)`` on one block."""

    def __init__(self, xs: np.ndarray, c: float, p: float):
        self.xs, self.c, self.p = xs, c, p
        self.n = xs.shape[1]
        self.basis = _herm_basis(self.n)
        top = max(float(np.linalg.eigvalsh(x).max()) for x in xs)
        self.a = (1.1 * max(top, 0.0) + 1e-3) * np.eye(self.n, dtype=complex)

    def objective(self, a):
        ev = np.linalg.eigvalsh(a)
        if ev.min() <= 0:
            return None
        return self.c * float(np.sum(ev ** self.p))

    def phi(self, a, t):
        g = self.objective(a)
        if g is None:
            return None
        ev = np.linalg.eigvalsh(a[None, :, :] - self.xs)
        if ev.min() <= 0:
            return None
        return t * g - float(np.sum(np.log(ev)))

    def newton_step(self, t):
        a, p, c, n = self.a, self.p, self.c, self.n
        Z = np.linalg.inv(a[None, :, :] - self.xs)
        Z = 0.5 * (Z + np.conj(np.transpose(Z, (0, 2, 1))))
        mu, U = np.linalg.eigh(a)
        grad = t * p * c * (U * mu ** (p - 1)) @ U.conj().T - Z.sum(axis=0)
        S = np.einsum("ilk,irs->krls", Z, Z).reshape(n * n, n * n)
        if p != 1:
            diff = mu[:, None] - mu[None, :]
            f = mu ** (p - 1)
            same = np.abs(diff) <= 1e-12 * max(1.0, mu.max())
            K = np.where(same, (p - 1) * np.maximum(mu[:, None], mu[None, :]) ** (p - 2),
                         (f[:, None] - f[None, :]) / np.where(same, 1.0, diff))
            W = np.kron(U.conj(), U)
            S = S + t * p * c * (W * _vec(K)) @ W.conj().T
        B = self.basis
        H = (B.conj().T @ S @ B).real
        r = (B.conj().T @ _vec(grad)).real
        try:
            delta = np.linalg.solve(H, -r)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(H, -r, rcond=None)[0]
        return _unvec(B @ delta, n), float(-r @ delta)

    def center(self, t, max_steps=40, tol=1e-11):
        """Damped Newton steps at barrier weight ``t``; raises LinAlgError on breakdown."""
        steps = 0
        for steps in range(1, max_steps + 1):
            step, dec2 = self.newton_step(t)
            if not np.isfinite(dec2):
                raise np.linalg.LinAlgError("non-finite Newton decrement")
            if dec2 / 2 <= tol:
                break
            f0 = self.phi(self.a, t)
            s = 1.0
            while True:
                cand = self.a + s * step
                f1 = self.phi(cand, t)
                if f1 is not None and f1 <= f0 - 0.25 * s * dec2:
                    break
                s *= 0.5
                if s < 1e-8:
                    return steps
            self.a = cand
        return steps

    def multipliers(self, t):
        Z = np.linalg.inv(self.a[None, :, :] - self.xs)
        return 0.5 * (Z + np.conj(np.transpose(Z, (0, 2, 1)))) / t


def positive_linf_norm(family: MaximalFamily, p: float, tol: float = 1e-10,
                       max_newton: int = 50_000, accept: float = 1e-4) -> MajorantCertificate:
    """Smallest ``|a|_p`` over positive majorants ``a >= x_i``, with a dual certificate.

    Newton continuation runs until the relative duality gap is below ``tol`` or the
    dual stagnates in floating point (typically near 1e-8 for noncommutative blocks).
    ``converged`` reports ``relative_gap <= accept``; either way the certificate is
    a valid bracket.
    """
    if not p >= 1:
        raise DomainError(f"need p >= 1, got {p}")
    alg = family.algebra
    for x in family.elements:
        if not x.is_positive():
            raise DomainError("positive_linf_norm needs a family of positive elements")
    if math.isinf(p):
        return _linf_closed_form(family)
    scale = max(lp_norm(x, math.inf) for x in family.elements)
    if scale == 0:
        zero = alg.zero()
        return MajorantCertificate(zero, [zero for _ in family.elements], p, 0.0, 0.0)

    blocks = []
    for b, n in enumerate(alg.block_dims):
        xs = np.stack([0.5 * (x.blocks[b] + x.blocks[b].conj().T) / scale for x in family.elements])
        blocks.append(_BlockProblem(xs, alg.unit_weights[b], p))
    m = len(family)
    g0 = sum(bp.objective(bp.a) for bp in blocks)
    t = m * alg.size / g0
    steps, best, stale = 0, None, 0
    # the barrier dual loses accuracy once t * lambda_min(a - x_i) hits cancellation
    # level while the primal keeps improving; any primal iterate and any dual iterate
    # form a valid bracket, so the best of each is kept separately
    while steps < max_newton and t < 1e18:
        saved = [bp.a for bp in blocks]
        try:
            for bp in blocks:
                steps += bp.center(t)
            cert = _certificate(family, blocks, t, p, scale, steps)
        except np.linalg.LinAlgError:
            # a - x_i became numerically singular: this is as far as floating point goes
            for bp, a in zip(blocks, saved):
                bp.a = a
            break
        if not (np.isfinite(cert.primal) and np.isfinite(cert.dual)):
            break
        if best is None:
            best = cert
        else:
            better_primal = cert.primal < best.primal * (1 - 1e-13)
            better_dual = cert.dual > best.dual
            if better_primal:
                best.a, best.primal = cert.a, cert.primal
            if better_dual:
                best.duals, best.dual = cert.duals, cert.dual
            stale = 0 if better_primal or better_dual else stale + 1
        if best.relative_gap <= tol or stale >= 2:
            break
        t *= 8.0
    if best is None:
        best = _certificate(family, blocks, t, p, scale, steps)
    best.converged = best.relative_gap <= accept
    best.newton_steps = steps
    return best


def _certificate(family, blocks, t, p, scale, steps):
    alg = family.algebra
    a = alg.element([bp.a * scale for bp in blocks])
    Ys = [bp.multipliers(t) for bp in blocks]
    duals = [alg.element([Ys[b][i] / alg.unit_weights[b] for b in range(alg.n_blocks)])
             for i in range(len(family))]
    total = duals[0]
    for y in duals[1:]:
        total = total + y
    norm = lp_norm(total, _conjugate(p))
    duals = [y / norm for y in duals]
    primal = lp_norm(a, p)
    dual = float(sum(trace(x @ y).real for x, y in zip(family.elements, duals)))
    return MajorantCertificate(a, duals, p, primal, dual, False, steps)


def _linf_closed_form(family: MaximalFamily) -> MajorantCertificate:
    alg = family.algebra
    tops = [lp_norm(x, math.inf) for x in family.elements]
    i = int(np.argmax(tops))
    value = tops[i]
    duals = [alg.zero() for _ in family.elements]
    if value > 0:
        x = family.elements[i]
        b = max(range(alg.n_blocks), key=lambda k: np.linalg.eigvalsh(x.blocks[k]).max())
        ev, vecs = np.linalg.eigh(0.5 * (x.blocks[b] + x.blocks[b].conj().T))
        blocks = [np.zeros((n, n), dtype=complex) for n in alg.block_dims]
        blocks[b] = np.outer(vecs[:, -1], vecs[:, -1].conj()) / alg.unit_weights[b]
        duals[i] = alg.element(blocks)
    dual = float(sum(trace(x @ y).real for x, y in zip(family.elements, duals)))
    return MajorantCertificate(value * alg.identity(), duals, math.inf, value, dual)


def column_linf_norm(family: MaximalFamily, p: float, tol: float = 1e-10) -> tuple[float, MajorantCertificate]:
    """``L_p(M; l_inf^c)`` norm via ``|(x_i)|_c = |(x_i^* x_i)|_{L_{p/2}(l_inf)}^{1/2}``, ``p >= 2``."""
    if not p >= 2:
        raise DomainError("the column maximal norm is defined for 2 <= p <= inf")
    squares = MaximalFamily([_herm(x.adjoint @ x) for x in family.elements], list(family.labels))
    cert = positive_linf_norm(squares, p / 2, tol)
    return math.sqrt(cert.primal), cert


def _herm(x: AlgebraElement) -> AlgebraElement:
    return x.algebra.element([0.5 * (b + b.conj().T) for b in x.blocks])


@dataclass
class FactorizationWitness:
    """``x_i = a y_i b`` with value ``|a|_{2p} max_i |y_i|_inf |b|_{2p}``."""

    a: AlgebraElement
    b: AlgebraElement
    ys: list[AlgebraElement]
    p: float
    value: float
    lower: float

    def reconstruction_residual(self, family: MaximalFamily) -> float:
        return max(lp_norm(self.a @ y @ self.b - x, math.inf) for x, y in zip(family.elements, self.ys))

    def recompute(self) -> float:
        q = 2 * self.p
        return lp_norm(self.a, q) * max(lp_norm(y, math.inf) for y in self.ys) * lp_norm(self.b, q)


def general_linf_upper(family: MaximalFamily, p: float, tol: float = 1e-10) -> FactorizationWitness:
    """Upper bound on ``|sup^+ x_i|_p`` for an arbitrary family, with its factorization.

    With positive majorants ``A >= |x_i^*|`` and ``B >= |x_i|`` the block matrix
    ``[[A, x_i], [x_i^*, B]]`` is positive, so ``y_i = A^{-1/2} x_i B^{-1/2}`` is a
    contraction and ``x_i = A^{1/2} y_i B^{1/2}``.  For positive families ``A = B``.
    """
    alg = family.algebra
    mods = MaximalFamily([_herm(modulus(x)) for x in family.elements], list(family.labels))
    positive = all(x.is_positive() for x in family.elements)
    B = positive_linf_norm(mods, p, tol).a
    if positive:
        A = B
    else:
        co = MaximalFamily([_herm(modulus(x.adjoint)) for x in family.elements], list(family.labels))
        A = positive_linf_norm(co, p, tol).a
    lower = max(lp_norm(x, p) for x in family.elements)
    if lp_norm(A, math.inf) == 0 or lp_norm(B, math.inf) == 0:
        return FactorizationWitness(alg.zero(), alg.zero(), [alg.zero() for _ in family.elements], p, 0.0, lower)
    a_half, b_half = positive_power(A, 0.5), positive_power(B, 0.5)
    a_inv, b_inv = positive_power(A, -0.5), positive_power(B, -0.5)
    ys = [a_inv @ x @ b_inv for x in family.elements]
    w = FactorizationWitness(a_half, b_half, ys, p, 0.0, lower)
    w.value = w.recompute()
    return w


# -- the sector maximal inequality harness --------------------------------------

def angle_hypothesis(p: float, psi: float) -> bool:
    """``0 <= psi/pi < 1/2 - |1/p - 1/2|`` with ``1 < p < inf``."""
    return 1 < p < math.inf and 0 <= psi / math.pi < 0.5 - abs(1 / p - 0.5)


def sector_grid(psi: float, n_radial: int = 16, n_angular: int = 4,
                r_min: float = 1e-2, r_max: float = 1e2) -> list[complex]:
    """``n_radial x n_angular`` points ``r e^{i theta}`` with ``|theta| < psi`` strictly."""
    radii = np.logspace(math.log10(r_min), math.log10(r_max), n_radial)
    if n_angular == 1:
        angles = np.zeros(1)
    else:
        angles = np.linspace(-psi, psi, n_angular + 2)[1:-1]
    return [complex(r * np.exp(1j * th)) for th in angles for r in radii]


def classical_sup_norm(family: MaximalFamily, p: float) -> float:
    """``|max_i |f_i| |_p`` on a commutative algebra."""
    alg = family.algebra
    if not alg.is_commutative:
        raise DomainError("the pointwise supremum only makes sense on a commutative algebra")
    vals = np.array([[b[0, 0] for b in x.blocks] for x in family.elements])
    f = np.max(np.abs(vals), axis=0)
    return lp_norm(alg.from_diagonal(f), p)


def maximal_inequality_harness(dec: SpectralDecomposition, p: float, psi: float, z_grid, xs,
                               ergodic_budget: float = 4.0, tol: float = 1e-10,
                               pieces: bool = True) -> dict:
    """Bracket ``|sup^+_z T_z x|_p / |x|_p`` over a finite sector grid for each sample ``x``.

    Besides the family ``(T_z x)`` the two pieces ``m_theta(tL) x`` and the ergodic
    averages of ``T_z = m_theta(tL) + A_t`` (``z = t e^{i theta}``) are bracketed
    too unless ``pieces`` is False.  The budget is ``envelope_constant(p, psi) + ergodic_budget``; the first
    term carries the normalization of the unknown absolute constant to 1.
    """
    if not angle_hypothesis(p, psi):
        raise HypothesisError(
            f"sector angle hypothesis violated: need 0 <= psi/pi < 1/2 - |1/p - 1/2| "
            f"(p={p}, psi/pi={psi / math.pi:.4f})")
    zs = [complex(z) for z in z_grid]
    if any(abs(np.angle(z)) >= psi for z in zs):
        raise HypothesisError("every grid point must lie in the open sector |arg z| < psi")
    budget = envelope_constant(p, psi) + ergodic_budget
    rows = []
    for k, x in enumerate(xs):
        norm_x = lp_norm(x, p)
        fam = MaximalFamily([apply_Tz(dec, z, x) for z in zs], zs)
        w = general_linf_upper(fam, p, tol)
        row = {"sample": k, "norm_x": norm_x, "upper": w.value, "lower": w.lower,
               "ratio": w.value / norm_x, "ratio_lower": w.lower / norm_x}
        if pieces:
            mt = MaximalFamily([apply_multiplier(dec, m_theta_fn(np.angle(z), abs(z)), x) for z in zs], zs)
            erg = MaximalFamily([apply_multiplier(dec, ergodic_fn(abs(z)), x) for z in zs], zs)
            row["m_theta_part"] = general_linf_upper(mt, p, tol).value / norm_x
            row["ergodic_part"] = general_linf_upper(erg, p, tol).value / norm_x
        if p >= 2:
            row["column_ratio"] = column_linf_norm(fam, p, tol)[0] / norm_x
        if dec.algebra.is_commutative:
            row["classical_ratio"] = classical_sup_norm(fam, p) / norm_x
        rows.append(row)
    ratios = np.array([r["ratio"] for r in rows])
    return {"p": p, "psi": psi, "grid_size": len(zs), "budget": budget, "rows": rows,
            "ratio_min": float(ratios.min()), "ratio_max": float(ratios.max()),
            "ratio_mean": float(ratios.mean()), "ratio_quantiles": np.quantile(ratios, [0.1, 0.5, 0.9]).tolist(),
            "finite": bool(np.all(np.isfinite(ratios))),
            "passed": bool(np.all(np.isfinite(ratios)) and ratios.max() <= budget)}
