"""Ergodic averages, sector limits of ``T_z``, and finite-scale witness projections.

In finite dimensions almost-uniform and norm convergence coincide; the witness
constructions below still build the projections ``e`` with small ``tau(e^perp)``
explicitly so the epsilon / compression tradeoff can be inspected.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgebraElement,
    DomainError,
    ProjectionElement,
    lp_norm,
    meet,
    positive_power,
    spectral_projection,
)
from .calculus import KERNEL_TOL, KernelOverlapError, apply_multiplier, apply_Tz, ergodic_symbol, m_theta_fn
from .semigroup import SpectralDecomposition, apply_Tt, fixed_point_projection


class ContourError(ValueError):
    """The integration contour meets the spectrum or leaves the region of decay."""


def ergodic_average(dec: SpectralDecomposition, x: AlgebraElement, t: float) -> AlgebraElement:
    """``(1/t) int_0^t T_s x ds`` through the symbol ``(1 - e^{-t lam}) / (t lam)``."""
    if not t > 0:
        raise DomainError(f"ergodic averages need t > 0, got {t}")
    return dec.apply_symbol(ergodic_symbol(t, dec.eigenvalues), x)


def decomposition_check(dec: SpectralDecomposition, x: AlgebraElement, t: float, theta: float) -> float:
    """``|T_{t e^{i theta}} x - m_theta(tL) x - A_t x|_2``; zero up to rounding."""
    if not t > 0:
        raise DomainError("need t > 0")
    if abs(theta) > math.pi / 2:
        raise DomainError("need |theta| <= pi/2")
    lhs = apply_Tz(dec, t * np.exp(1j * theta), x)
    rhs = apply_multiplier(dec, m_theta_fn(theta, t), x) + ergodic_average(dec, x, t)
    return lp_norm(lhs - rhs, 2)


def splitting(dec: SpectralDecomposition, x: AlgebraElement) -> tuple[AlgebraElement, AlgebraElement]:
    """``x = P_0 x + (x - P_0 x)`` into fixed points and the closure of the range of ``L``."""
    fixed = fixed_point_projection(dec, x)
    return fixed, x - fixed


def semigroup_distance_formula(dec: SpectralDecomposition, x: AlgebraElement, t: float) -> float:
    """``|T_t x - P_0 x|_2 = (sum_{k != 0} e^{-2 t lam_k} |x_k|_2^2)^{1/2}``."""
    comps = dec.components(x)
    total = sum(math.exp(-2 * t * dec.eigenvalues[k]) * lp_norm(comps[k], 2) ** 2
                for k in range(len(comps)) if dec.nonzero[k])
    return math.sqrt(total)


def dense_subset_element(dec: SpectralDecomposition, y: AlgebraElement, t: float, s: float) -> AlgebraElement:
    """``T_{t+s} y - T_s y``; such differences span a dense subset of the range of ``L``."""
    return apply_Tt(dec, y, t + s) - apply_Tt(dec, y, s)


# -- contour representation ----------------------------------------------------

@dataclass
class ContourResult:
    value: AlgebraElement
    deviation: float
    vertex: float
    half_angle: float
    radius: float
    nodes: int


def contour_Tz(dec: SpectralDecomposition, z: complex, x: AlgebraElement, n_panels: int = 200,
               vertex: float | None = None, r_min: float = 1e-12, decay: float = 1e-16) -> ContourResult:
    """``T_z x = (1/2 pi i) int_Gamma e^{-z lam} (lam - L)^{-1} x d lam`` by trapezoid panels.

    ``Gamma`` is the boundary of the sector ``{|arg(lam - c)| < alpha}`` with vertex
    ``c = gap/2`` and ``alpha = (pi/2 - |arg z|)/2``, so ``e^{-z lam}`` decays along
    both rays.  Each ray is truncated where ``|e^{-z lam}| < decay`` and discretized
    in ``log r``.  Inputs must lie in ``(ker L)^perp``.  The trapezoid rule in
    ``log r`` converges like ``exp(-2 pi alpha / h)``, so accuracy degrades as
    ``|arg z| -> pi/2`` for a fixed panel count.
    """
    z = complex(z)
    if z == 0 or abs(np.angle(z)) >= math.pi / 2:
        raise DomainError("the contour representation needs |arg z| < pi/2, z != 0")
    alg = dec.algebra
    if dec.kernel_norm(x) > KERNEL_TOL * max(1.0, lp_norm(x, 2)):
        raise KernelOverlapError("the resolvent contour excludes ker L; pass x - P_0 x")
    c = dec.gap / 2 if vertex is None else float(vertex)
    if not 0 < c < dec.gap:
        raise ContourError(f"vertex {c} must lie strictly between 0 and the spectral gap {dec.gap}")
    phi = float(np.angle(z))
    alpha = (math.pi / 2 - abs(phi)) / 2
    # smallest decay margin over the two rays
    cos_min = min(math.cos(phi + alpha), math.cos(phi - alpha))
    R = max(1.0, (-math.log(decay) / abs(z) - c * math.cos(phi)) / cos_min)
    s = np.linspace(math.log(r_min), math.log(R), n_panels + 1)
    r = np.exp(s)
    w = np.full(s.shape, s[1] - s[0])
    w[0] = w[-1] = w[0] / 2
    Lm = dec.generator.matrix
    v = alg.vec(x)
    eye = np.eye(alg.dim)
    total = np.zeros(alg.dim, dtype=complex)
    for sign in (-1.0, 1.0):
        rot = np.exp(1j * sign * alpha)
        for rk, wk in zip(r, w):
            lam = c + rk * rot
            res = np.linalg.solve(lam * eye - Lm, v)
            # lower ray runs outward, upper ray runs inward (counterclockwise)
            total += (-sign) * wk * rk * rot * np.exp(-z * lam) * res
    value = alg.unvec(total / (2j * math.pi))
    dev = lp_norm(value - apply_Tz(dec, z, x), 2)
    return ContourResult(value, dev, c, alpha, R, 2 * (n_panels + 1))


# -- convergence paths and witness projections -----------------------------------

@dataclass
class ConvergenceReport:
    """``|T_z x - target|_p`` along a grid ordered by ``|z|``."""

    direction: str
    p: float
    target: AlgebraElement
    rows: list = field(default_factory=list)

    @property
    def norms(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def loglog_slope(self) -> float:
        """Least-squares slope of ``log norm`` against ``log |z|`` over positive entries."""
        mods = np.array([r[0] for r in self.rows])
        vals = self.norms
        ok = vals > 1e-300
        if ok.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(mods[ok]), np.log(vals[ok]), 1)[0])

    def to_json(self):
        return {"direction": self.direction, "p": self.p, "slope": self.loglog_slope(),
                "rows": [{"abs_z": a, "arg_z": b, "norm": n} for a, b, n in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["abs_z", "arg_z", "norm"])
        for a, b, n in self.rows:
            w.writerow([f"{a:.12g}", f"{b:.12g}", f"{n:.12g}"])
        return buf.getvalue()


def _target(dec, x, direction):
    if direction == "zero":
        return x
    if direction == "infinity":
        return fixed_point_projection(dec, x)
    raise ValueError("direction is 'zero' or 'infinity'")


def _ordered(z_grid, direction):
    zs = [complex(z) for z in z_grid]
    return sorted(zs, key=abs, reverse=(direction == "zero"))


def convergence_path(dec: SpectralDecomposition, x: AlgebraElement, z_grid, direction: str = "zero",
                     p: float = 2) -> ConvergenceReport:
    target = _target(dec, x, direction)
    rep = ConvergenceReport(direction, p, target)
    for z in _ordered(z_grid, direction):
        rep.rows.append((abs(z), float(np.angle(z)), lp_norm(apply_Tz(dec, z, x) - target, p)))
    return rep


def mean_ergodic_bound(dec: SpectralDecomposition, x: AlgebraElement, t: float) -> tuple[float, float]:
    """``(|A_t x - P_0 x|_2, |x - P_0 x|_2 / (t gap))``; the first never exceeds the second."""
    fixed, rest = splitting(dec, x)
    return lp_norm(ergodic_average(dec, x, t) - fixed, 2), lp_norm(rest, 2) / (t * dec.gap)


@dataclass
class WitnessResult:
    e: ProjectionElement
    tau_complement: float
    threshold: float
    epsilon: float
    mode: str
    direction: str
    table: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([r[2] for r in self.table])

    @property
    def monotone(self) -> bool:
        v = self.values
        return bool(np.all(np.diff(v) <= 1e-15 * max(1.0, v.max(initial=0.0))))

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def to_json(self):
        return {"epsilon": self.epsilon, "tau_complement": self.tau_complement, "mode": self.mode,
                "direction": self.direction, "monotone": self.monotone, "final": self.final,
                "table": [{"abs_z": a, "arg_z": b, "value": v} for a, b, v in self.table]}


def projection_trace(e: ProjectionElement) -> float:
    """``tau(e)`` from the block ranks, free of rounding."""
    alg = e.algebra
    ranks = [round(float(np.trace(b).real)) for b in e.blocks]
    return float(sum(w * r for w, r in zip(alg.unit_weights, ranks)))


def _sym_square(d: AlgebraElement) -> AlgebraElement:
    return d.adjoint @ d + d @ d.adjoint


def dominating_element(dec: SpectralDecomposition, x: AlgebraElement, zs, direction: str,
                       n_samples: int = 16) -> AlgebraElement:
    """A positive ``a`` controlling the deviations ``T_z x - target`` on the grid.

    Toward 0, ``T_z x - x = -int_0^z L T_zeta x d zeta`` and convexity of ``|.|^2``
    give ``|T_z x - x|^2 <= |z|^2 mean |L T_zeta x|^2`` over the segment; ``a``
    averages ``|L T_zeta x|^2`` over samples on the segments ``[0, z]``.  Toward
    infinity ``a`` averages ``|z| |T_z x - P_0 x|^2`` over the grid.
    Both sides of the square are included so the bilateral and one-sided cases share ``a``.
    """
    alg = dec.algebra
    a = alg.zero()
    count = 0
    if direction == "zero":
        Lx = dec.apply_symbol(dec.eigenvalues, x)
        z_far = max(zs, key=abs)
        for z in {complex(np.exp(1j * np.angle(z))) for z in zs}:
            for frac in np.linspace(0, 1, n_samples):
                a = a + _sym_square(apply_Tz(dec, frac * abs(z_far) * z, Lx))
                count += 1
    else:
        fixed = fixed_point_projection(dec, x)
        for z in zs:
            a = a + abs(z) * _sym_square(apply_Tz(dec, z, x) - fixed)
            count += 1
    a = a / count
    return alg.element([0.5 * (b + b.conj().T) for b in a.blocks])


def witness_projection(dec: SpectralDecomposition, x: AlgebraElement, epsilon: float, z_grid,
                       direction: str = "zero", mode: str = "bilateral") -> WitnessResult:
    """Projection ``e`` with ``tau(e^perp) < epsilon`` and the compressed deviations along the grid.

    ``e = 1_{[0, |a^{1/2}|_2 / sqrt(epsilon))}(a^{1/2})`` for the dominating element
    ``a``; Chebyshev's inequality gives ``tau(e^perp) <= epsilon``.  The table holds
    ``|e (T_z x - target) e|_inf`` (bilateral) or ``|(T_z x - target) e|_inf``
    (one-sided), ordered toward the limit.
    """
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if mode not in ("bilateral", "one_sided"):
        raise ValueError("mode is 'bilateral' or 'one_sided'")
    zs = _ordered(z_grid, direction)
    target = _target(dec, x, direction)
    a = dominating_element(dec, x, zs, direction)
    root = positive_power(a, 0.5)
    level = lp_norm(root, 2) / math.sqrt(epsilon)
    alg = dec.algebra
    if level == 0:
        e = ProjectionElement(alg, alg.identity().blocks)
    else:
        e = spectral_projection(root, (0.0, level), closed=(True, False))
    out = WitnessResult(e, projection_trace(e.complement), level, epsilon, mode, direction)
    for z in zs:
        d = apply_Tz(dec, z, x) - target
        comp = e @ d @ e if mode == "bilateral" else d @ e
        out.table.append((abs(z), float(np.angle(z)), lp_norm(comp, math.inf)))
    return out


def telescoped_witness(dec: SpectralDecomposition, x: AlgebraElement, epsilon: float, z_grid,
                       n_range=range(1, 4), direction: str = "zero",
                       mode: str = "bilateral") -> WitnessResult:
    """Meet of witnesses at levels ``epsilon 2^{-n}``, so ``tau(e^perp) <= sum epsilon 2^{-n} < epsilon``."""
    parts = [witness_projection(dec, x, epsilon * 2.0 ** (-n), z_grid, direction, mode) for n in n_range]
    e = parts[0].e
    for w in parts[1:]:
        e = meet(e, w.e)
    zs = _ordered(z_grid, direction)
    target = _target(dec, x, direction)
    out = WitnessResult(e, projection_trace(e.complement), parts[-1].threshold, epsilon, mode, direction)
    for z in zs:
        d = apply_Tz(dec, z, x) - target
        comp = e @ d @ e if mode == "bilateral" else d @ e
        out.table.append((abs(z), float(np.angle(z)), lp_norm(comp, math.inf)))
    return out
