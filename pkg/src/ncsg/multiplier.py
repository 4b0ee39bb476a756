"""Lower bounds on ``L_p -> L_p`` norms of superoperators, and multiplier-bound sweeps.

Norms for ``p != 2`` are estimated by alternating duality ascent (a noncommutative
version of Boyd's power method): ``x -> J_p(Phi x) -> Phi'(.) -> J_q(.) -> x``,
where ``J_p(v)`` is the unit element of ``L_q`` norming ``v``.  Every reported
value is the ratio ``|Phi(w)|_p / |w|_p`` of an explicit witness ``w``, hence a
certified lower bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, DomainError, lp_norm, random_element
from .calculus import SectorFunction, imaginary_power_fn, multiplier_map, sector_sup
from .semigroup import SpectralDecomposition, Superoperator


@dataclass
class PNormEstimate:
    value: float
    witness: AlgebraElement
    p: float
    iterations: int
    converged: bool

    def recompute(self, phi: Superoperator) -> float:
        return lp_norm(phi(self.witness), self.p) / lp_norm(self.witness, self.p)


def norming_element(v: AlgebraElement, p: float) -> AlgebraElement:
    """``y`` in the unit sphere of ``L_q`` with ``tau(v y) = |v|_p`` (``1/p + 1/q = 1``)."""
    alg = v.algebra
    svds = [np.linalg.svd(b) for b in v.blocks]
    norm = lp_norm(v, p)
    blocks = []
    if norm == 0:
        return alg.zero()
    if math.isinf(p):
        best = max(range(alg.n_blocks), key=lambda b: svds[b][1].max())
        for b, (U, s, Vh) in enumerate(svds):
            n = s.shape[0]
            if b == best:
                blocks.append(np.outer(Vh[0].conj(), U[:, 0].conj()) / alg.unit_weights[b])
            else:
                blocks.append(np.zeros((n, n), dtype=complex))
        return alg.element(blocks)
    for U, s, Vh in svds:
        if p == 1:
            scale = (s > 1e-14 * norm).astype(float)
        else:
            scale = s ** (p - 1) / norm ** (p - 1)
        blocks.append((Vh.conj().T * scale) @ U.conj().T)
    return alg.element(blocks)


def _conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def op_pnorm_estimate(phi: Superoperator, p: float, restarts: int = 8, seed=0,
                      subspace: np.ndarray | None = None, max_iter: int = 300,
                      tol: float = 1e-9) -> PNormEstimate:
    """Certified lower bound on ``sup |Phi x|_p / |x|_p`` over ``x`` in ``range(subspace)``.

    ``subspace`` is a GNS-orthogonal projection matrix (e.g. onto ``(ker L)^perp``).
    For ``p = 2`` the value is the exact spectral norm of the restricted matrix.
    """
    if not p >= 1:
        raise DomainError(f"need p >= 1, got {p}")
    alg = phi.algebra
    if subspace is None:
        basis = np.eye(alg.dim)
    else:
        ev, vecs = np.linalg.eigh(0.5 * (subspace + subspace.conj().T))
        basis = vecs[:, ev > 0.5]

    if p == 2:
        _, s, vh = np.linalg.svd(phi.matrix @ basis)
        witness = alg.unvec(basis @ vh[0].conj())
        return PNormEstimate(lp_norm(phi(witness), 2) / lp_norm(witness, 2), witness, 2, 0, True)

    proj = basis @ basis.conj().T
    restrict = (lambda x: alg.unvec(proj @ alg.vec(x))) if subspace is not None else (lambda x: x)
    q = _conjugate(p)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        x = restrict(random_element(alg, rng, "general"))
        x = x / lp_norm(x, p)
        ratio, converged, it = lp_norm(phi(x), p), False, 0
        cand = (ratio, x)
        for it in range(1, max_iter + 1):
            y = norming_element(phi(x), p)
            w = phi.trace_dual(y)
            x_new = restrict(norming_element(w, q))
            nrm = lp_norm(x_new, p)
            if nrm == 0:
                break
            x_new = x_new / nrm
            r_new = lp_norm(phi(x_new), p)
            if r_new > cand[0]:
                cand = (r_new, x_new)
            if abs(r_new - ratio) <= tol * max(ratio, 1e-300):
                converged = True
                break
            x, ratio = x_new, r_new
        if best is None or cand[0] > best[0]:
            best = (cand[0], cand[1], it, converged)
    value, witness, iterations, converged = best
    return PNormEstimate(lp_norm(phi(witness), p) / lp_norm(witness, p), witness, p, iterations, converged)


def range_projection(dec: SpectralDecomposition) -> np.ndarray:
    """GNS projection onto ``(ker L)^perp``."""
    return np.eye(dec.algebra.dim) - dec.kernel_projection()


def verify_multiplier_bound(dec: SpectralDecomposition, m: SectorFunction, p: float, psi: float,
                            restarts: int = 8, seed=0, budget: float = 10.0) -> dict:
    """Compare a lower bound on ``|m(L)|_{p->p}`` on ``(ker L)^perp`` with ``sup_{Sigma_psi} |m|``.

    PASS means the estimate stayed within ``budget`` times the sector sup-norm.
    """
    hyp = psi > abs(1 / p - 0.5) * math.pi if 1 < p < math.inf else False
    report = {"function": m.name, "p": p, "psi": psi, "hypothesis": hyp}
    if not hyp:
        report.update(passed=None, reason="psi must exceed |1/p - 1/2| pi")
        return report
    est = op_pnorm_estimate(multiplier_map(dec, m), p, restarts, seed, subspace=range_projection(dec))
    sup = sector_sup(m, min(psi, m.angle))
    ratio = est.value / sup
    report.update(estimate=est.value, envelope=sup, ratio=ratio, budget=budget,
                  converged=est.converged, witness_seed=seed, passed=bool(ratio <= budget))
    return report


def linear_growth_envelope(p: float, u) -> np.ndarray:
    """``p^2/(p-1) (1 + |u|) exp(pi |u| / 2)`` (absolute constant set to 1)."""
    u = np.abs(np.asarray(u, dtype=float))
    return p * p / (p - 1) * (1 + u) * np.exp(math.pi * u / 2)


def interpolated_envelope(p: float, u, power_index: float = 12.0) -> np.ndarray:
    """``p^2/(p-1) (1 + |u|^k)^d exp(pi d |u|)`` with ``d = |1/p - 1/2|``."""
    u = np.abs(np.asarray(u, dtype=float))
    d = abs(1 / p - 0.5)
    return p * p / (p - 1) * (1 + u ** power_index) ** d * np.exp(math.pi * d * u)


def imaginary_power_map(dec: SpectralDecomposition, u: float) -> Superoperator:
    return multiplier_map(dec, imaginary_power_fn(u))


def imaginary_power_growth(dec: SpectralDecomposition, p: float, u_grid, restarts: int = 8,
                           seed=0, power_index: float = 12.0) -> dict:
    """Estimate ``|L^{iu}|_{p->p}`` on ``(ker L)^perp`` over ``u_grid`` and fit envelope constants.

    The fitted constant is the smallest ``C`` with ``estimate(u) <= C * envelope(u)``
    on the grid, for both the linear-growth and the interpolated envelope.
    """
    if not 1 < p < math.inf:
        raise DomainError("imaginary powers are bounded for 1 < p < inf")
    sub = range_projection(dec)
    rows = []
    for u in u_grid:
        est = op_pnorm_estimate(imaginary_power_map(dec, u), p, restarts, seed, subspace=sub)
        env = float(linear_growth_envelope(p, u))
        rows.append({"p": p, "u": float(u), "estimate": est.value, "envelope": env,
                     "interpolated_envelope": float(interpolated_envelope(p, u, power_index)),
                     "ratio": est.value / env, "converged": est.converged, "witness_seed": seed})
    c_fit = max(r["ratio"] for r in rows)
    c_int = max(r["estimate"] / r["interpolated_envelope"] for r in rows)
    return {"p": p, "rows": rows, "fitted_constant": c_fit, "fitted_interpolated_constant": c_int,
            "dominated": all(r["estimate"] <= c_fit * r["envelope"] * (1 + 1e-12) for r in rows)}
