"""Exact discrete-time Markov dilation of a reversible chain on a finite path space.

Paths ``(i_0, ..., i_T)`` carry the stationary chain measure
``w_{i_0} P_{i_0 i_1} ... P_{i_{T-1} i_T}``.  Path functions are arrays of shape
``(S,) * (T + 1)``; ``pi_s(f)`` reads coordinate ``s`` and ``E_s`` averages out
the coordinates after ``s`` by backward recursion through ``P``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import DomainError, TracialAlgebra
from .semigroup import Superoperator, ValidationError, ValidationReport, check_standard_maps

MAX_PATHS = 10 ** 7
BALANCE_TOL = 1e-12


class PathSpaceTooLarge(ValueError):
    pass


def stationary_weights(P: np.ndarray) -> np.ndarray:
    """The unique stationary distribution of ``P``."""
    ev, vecs = np.linalg.eig(P.T)
    ones = np.abs(ev - 1) < 1e-10
    if ones.sum() != 1:
        raise ValidationError("the chain has no unique stationary distribution; pass w explicitly")
    v = np.real(vecs[:, ones][:, 0])
    return v / v.sum()


def detailed_balance_residual(P: np.ndarray, w: np.ndarray) -> float:
    F = w[:, None] * P
    return float(np.max(np.abs(F - F.T)))


def gns_symmetry_residual(P: np.ndarray, w: np.ndarray) -> float:
    """Distance of ``D^{1/2} P D^{-1/2}`` from a symmetric matrix (``D = diag(w)``)."""
    r = np.sqrt(w)
    S = r[:, None] * P / r[None, :]
    return float(np.max(np.abs(S - S.T)))


@dataclass(frozen=True, eq=False)
class PathSpace:
    P: np.ndarray
    w: np.ndarray
    horizon: int

    @property
    def states(self) -> int:
        return self.P.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.states,) * (self.horizon + 1)

    @cached_property
    def measure(self) -> np.ndarray:
        m = self.w.copy()
        for _ in range(self.horizon):
            m = m[..., None] * self.P.reshape((1,) * (m.ndim - 1) + self.P.shape)
        return m

    @cached_property
    def support(self) -> np.ndarray:
        return self.measure.ravel() > 0

    @cached_property
    def algebra(self) -> TracialAlgebra:
        """Diagonal algebra on the paths of positive probability."""
        return TracialAlgebra.diagonal(self.measure.ravel()[self.support])

    def element(self, X: np.ndarray):
        return self.algebra.from_diagonal(np.asarray(X).ravel()[self.support])

    def expectation(self, X: np.ndarray) -> float:
        return float(np.sum(self.measure * X))

    def to_json(self):
        return {"P": self.P.tolist(), "w": self.w.tolist(), "T": self.horizon}


def build_path_space(P, w=None, T: int = 1) -> PathSpace:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValidationError("P must be a square matrix")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1)) > BALANCE_TOL:
        raise ValidationError("P must be row-stochastic")
    if T < 0:
        raise DomainError("the horizon must be nonnegative")
    S = P.shape[0]
    if (T + 1) * math.log10(S) > math.log10(MAX_PATHS) + 1e-12:
        raise PathSpaceTooLarge(f"{S}^{T + 1} paths exceed the enumeration limit {MAX_PATHS}")
    w = stationary_weights(P) if w is None else np.asarray(w, dtype=float)
    if w.shape != (S,) or np.any(w < 0) or abs(w.sum() - 1) > BALANCE_TOL:
        raise ValidationError("w must be a probability vector on the states")
    res = detailed_balance_residual(P, w)
    if res > BALANCE_TOL:
        raise ValidationError(f"detailed balance fails (residual {res:.2e})")
    return PathSpace(P, w, int(T))


def path_space_from_json(doc) -> PathSpace:
    if isinstance(doc, str):
        doc = json.loads(doc)
    return build_path_space(doc["P"], doc.get("w"), doc["T"])


def _check_time(ps: PathSpace, s: int):
    if not 0 <= s <= ps.horizon:
        raise DomainError(f"time {s} is outside the horizon 0..{ps.horizon}")


def embed(ps: PathSpace, f, s: int) -> np.ndarray:
    """``pi_s(f)``: the path function ``path -> f(path_s)``."""
    _check_time(ps, s)
    f = np.asarray(f)
    shape = [1] * (ps.horizon + 1)
    shape[s] = ps.states
    return np.broadcast_to(f.reshape(shape), ps.shape).copy()


def conditional_expectation(ps: PathSpace, X: np.ndarray, s: int) -> np.ndarray:
    """``E_s X``: integrate out coordinates ``s+1..T`` with the transition probabilities."""
    _check_time(ps, s)
    Y = np.asarray(X)
    for k in range(ps.horizon, s, -1):
        # Y has k+1 axes; contract the last with the row of P indexed by axis k-1
        Y = np.einsum("...ij,ij->...i", Y, ps.P)
    return np.broadcast_to(Y.reshape(Y.shape + (1,) * (ps.horizon - s)), ps.shape).copy()


def markov_power(ps: PathSpace, f, k: int) -> np.ndarray:
    return np.linalg.matrix_power(ps.P, k) @ np.asarray(f)


def verify_dilation_identity(ps: PathSpace, f, s: int, t: int) -> float:
    """``max |E_s pi_t(f) - pi_s(P^{t-s} f)|`` over all paths."""
    if not 0 <= s <= t <= ps.horizon:
        raise DomainError("need 0 <= s <= t <= T")
    lhs = conditional_expectation(ps, embed(ps, f, t), s)
    rhs = embed(ps, markov_power(ps, f, t - s), s)
    return float(np.max(np.abs(lhs - rhs)))


def depends_only_on(ps: PathSpace, X: np.ndarray, s: int, atol: float = 1e-12) -> bool:
    """Whether ``X`` is a function of coordinate ``s`` alone."""
    sl = [0] * (ps.horizon + 1)
    sl[s] = slice(None)
    return bool(np.allclose(X, embed(ps, X[tuple(sl)], s), atol=atol, rtol=0))


def chain_semigroup_map(P: np.ndarray, w: np.ndarray, k: int) -> Superoperator:
    """``f -> P^k f`` on the diagonal algebra with trace weights ``w``."""
    alg = TracialAlgebra.diagonal(w)
    Pk = np.linalg.matrix_power(np.asarray(P, dtype=float), k)
    return Superoperator.from_map(alg, lambda x: alg.from_diagonal(Pk @ np.array([b[0, 0] for b in x.blocks])))


def check_chain_semigroup(P, w, powers=(1, 2, 5), **kw) -> ValidationReport:
    """Standard-semigroup checks for ``T_k = P^k`` on the weighted diagonal algebra."""
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValidationError("the diagonal trace needs strictly positive weights")
    return check_standard_maps([(f"P^{k}", chain_semigroup_map(P, w, k)) for k in powers], **kw)
