"""Finite von Neumann algebras: block-diagonal matrix algebras with a normalized trace.

An algebra ``M = M_{n_1} (+) ... (+) M_{n_k}`` carries the faithful state
``tau(x) = sum_b w_b tr(x_b) / n_b`` with ``sum_b w_b = 1``.  A single block
gives ``M_n`` with ``tr / n``; all blocks of size one give a classical
probability space on ``k`` points.

Elements are stored block by block.  The GNS Hilbert space ``L_2(M, tau)`` is
coordinatized by :meth:`TracialAlgebra.vec`, which scales the matrix units of
block ``b`` by ``sqrt(w_b / n_b)`` so that ``<x, y> = tau(x^* y)`` becomes the
Euclidean inner product of coordinate vectors.  Within each block entries are
stacked column by column.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

ATOL = 1e-10


class StructureError(ValueError):
    """Element does not fit the block structure of its algebra."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class TracialAlgebra:
    block_dims: tuple[int, ...]
    trace_weights: tuple[float, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        weights = tuple(float(w) for w in self.trace_weights)
        if not dims or any(n < 1 for n in dims):
            raise StructureError(f"block dimensions must be positive integers, got {dims}")
        if len(weights) != len(dims):
            raise StructureError("one trace weight per block is required")
        if any(w <= 0 for w in weights):
            raise DomainError("trace must be faithful: all weights strictly positive")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError(f"trace weights must sum to 1, got {sum(weights)!r}")
        object.__setattr__(self, "block_dims", dims)
        object.__setattr__(self, "trace_weights", weights)

    @classmethod
    def matrix(cls, n: int) -> "TracialAlgebra":
        """``M_n`` with ``tau = Tr / n``."""
        return cls((n,), (1.0,))

    @classmethod
    def diagonal(cls, weights: Sequence[float]) -> "TracialAlgebra":
        """Commutative algebra ``l_inf`` on ``len(weights)`` points."""
        w = np.asarray(weights, dtype=float)
        return cls((1,) * len(w), tuple(w / w.sum()))

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def size(self) -> int:
        """Side length of the ambient block-diagonal matrix."""
        return sum(self.block_dims)

    @property
    def dim(self) -> int:
        """Complex dimension of the algebra (= dimension of ``L_2(M)``)."""
        return sum(n * n for n in self.block_dims)

    @property
    def is_commutative(self) -> bool:
        return all(n == 1 for n in self.block_dims)

    @cached_property
    def unit_weights(self) -> np.ndarray:
        """``tau(e_ii)`` per block: ``w_b / n_b``."""
        return np.array([w / n for w, n in zip(self.trace_weights, self.block_dims)])

    @cached_property
    def _offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([n * n for n in self.block_dims])])

    @cached_property
    def _scales(self) -> np.ndarray:
        return np.concatenate(
            [np.full(n * n, math.sqrt(c)) for n, c in zip(self.block_dims, self.unit_weights)]
        )

    # -- constructors -------------------------------------------------------

    def element(self, blocks: Sequence[np.ndarray]) -> "AlgebraElement":
        return AlgebraElement(self, tuple(np.asarray(b, dtype=complex) for b in blocks))

    def from_dense(self, matrix: np.ndarray) -> "AlgebraElement":
        """Cut a block-diagonal ``size x size`` matrix into blocks.

        Raises StructureError if any entry outside the blocks is nonzero.
        """
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (self.size, self.size):
            raise StructureError(f"expected shape {(self.size, self.size)}, got {m.shape}")
        mask = np.zeros(m.shape, dtype=bool)
        blocks, start = [], 0
        for n in self.block_dims:
            mask[start:start + n, start:start + n] = True
            blocks.append(m[start:start + n, start:start + n].copy())
            start += n
        if np.any(m[~mask] != 0):
            raise StructureError("entries outside the declared blocks must be exactly zero")
        return self.element(blocks)

    def identity(self) -> "AlgebraElement":
        return self.element([np.eye(n) for n in self.block_dims])

    def zero(self) -> "AlgebraElement":
        return self.element([np.zeros((n, n)) for n in self.block_dims])

    def scalar(self, c: complex) -> "AlgebraElement":
        return c * self.identity()

    def from_diagonal(self, values: Sequence[complex]) -> "AlgebraElement":
        """Diagonal element with the given ``size`` diagonal entries."""
        return self.from_dense(np.diag(np.asarray(values, dtype=complex)))

    # -- GNS coordinates ----------------------------------------------------

    def vec(self, x: "AlgebraElement") -> np.ndarray:
        """GNS coordinates of ``x`` (orthonormal matrix-unit basis)."""
        self._check(x)
        raw = np.concatenate([b.reshape(-1, order="F") for b in x.blocks])
        return raw * self._scales

    def unvec(self, v: np.ndarray) -> "AlgebraElement":
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.dim,):
            raise StructureError(f"expected a vector of length {self.dim}, got {v.shape}")
        raw = v / self._scales
        blocks = [
            raw[lo:hi].reshape((n, n), order="F")
            for n, lo, hi in zip(self.block_dims, self._offsets[:-1], self._offsets[1:])
        ]
        return self.element(blocks)

    def basis(self) -> list["AlgebraElement"]:
        """GNS-orthonormal matrix-unit basis, in coordinate order."""
        eye = np.eye(self.dim)
        return [self.unvec(eye[k]) for k in range(self.dim)]

    def tensor(self, other: "TracialAlgebra") -> "TracialAlgebra":
        """``M (x) N`` with the product trace; block ``(b, c)`` is ordered row-major."""
        dims = tuple(n * m for n in self.block_dims for m in other.block_dims)
        weights = tuple(w * v for w in self.trace_weights for v in other.trace_weights)
        return TracialAlgebra(dims, weights)

    def tensor_element(self, other: "TracialAlgebra", x: "AlgebraElement",
                       y: "AlgebraElement") -> "AlgebraElement":
        prod = self.tensor(other)
        return prod.element([np.kron(a, b) for a in x.blocks for b in y.blocks])

    def _check(self, x: "AlgebraElement"):
        if x.algebra != self:
            raise StructureError("element belongs to a different algebra")

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {"blocks": list(self.block_dims), "weights": list(self.trace_weights)}

    @classmethod
    def from_json(cls, doc: dict | str) -> "TracialAlgebra":
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(tuple(doc["blocks"]), tuple(doc["weights"]))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: TracialAlgebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = self.algebra.block_dims
        if len(self.blocks) != len(dims):
            raise StructureError(f"expected {len(dims)} blocks, got {len(self.blocks)}")
        for b, n in zip(self.blocks, dims):
            if b.shape != (n, n):
                raise StructureError(f"block of shape {b.shape} where ({n}, {n}) was declared")
            b.setflags(write=False)

    # -- arithmetic ----------------------------------------------------------

    def _binary(self, other, op):
        if isinstance(other, AlgebraElement):
            self.algebra._check(other)
            return AlgebraElement(self.algebra, tuple(op(a, b) for a, b in zip(self.blocks, other.blocks)))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __matmul__(self, other):
        return self._binary(other, np.matmul)

    def __neg__(self):
        return AlgebraElement(self.algebra, tuple(-b for b in self.blocks))

    def __mul__(self, c):
        if isinstance(c, AlgebraElement):
            return self @ c
        return AlgebraElement(self.algebra, tuple(c * b for b in self.blocks))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return AlgebraElement(self.algebra, tuple(b / c for b in self.blocks))

    @property
    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(b.conj().T for b in self.blocks))

    H = adjoint

    def dense(self) -> np.ndarray:
        from scipy.linalg import block_diag
        return block_diag(*self.blocks)

    def allclose(self, other: "AlgebraElement", atol: float = 1e-12) -> bool:
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.blocks, other.blocks))

    def is_selfadjoint(self, atol: float = ATOL) -> bool:
        return all(np.allclose(b, b.conj().T, rtol=0, atol=atol) for b in self.blocks)

    def eigvalsh(self) -> np.ndarray:
        """Eigenvalues of the Hermitian part, all blocks concatenated."""
        return np.concatenate([np.linalg.eigvalsh(_herm(b)) for b in self.blocks])

    def is_positive(self, atol: float = ATOL) -> bool:
        return self.is_selfadjoint(atol) and self.eigvalsh().min() >= -atol

    def singular_values(self) -> list[np.ndarray]:
        """Per-block singular values in ascending order."""
        return [np.linalg.svd(b, compute_uv=False)[::-1] for b in self.blocks]

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra.to_json(),
            "blocks": [[[[float(z.real), float(z.imag)] for z in row] for row in b] for b in self.blocks],
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "AlgebraElement":
        if isinstance(doc, str):
            doc = json.loads(doc)
        alg = TracialAlgebra.from_json(doc["algebra"])
        blocks = [np.array([[complex(re, im) for re, im in row] for row in b]).reshape(n, n)
                  for b, n in zip(doc["blocks"], alg.block_dims)]
        return alg.element(blocks)

    def __repr__(self):
        return f"AlgebraElement(blocks={self.algebra.block_dims}, dense=\n{self.dense()})"


def _herm(b: np.ndarray) -> np.ndarray:
    return 0.5 * (b + b.conj().T)


# -- trace, norms, functional calculus of single elements ----------------------

def trace(x: AlgebraElement) -> complex:
    """Normalized trace: ``tau(1) = 1``."""
    return complex(sum(c * np.trace(b) for c, b in zip(x.algebra.unit_weights, x.blocks)))


def lp_norm(x: AlgebraElement, p: float) -> float:
    """Noncommutative ``L_p`` norm ``tau(|x|^p)^{1/p}``; ``p = inf`` is the operator norm."""
    if not p >= 1:
        raise DomainError(f"L_p norms need p >= 1, got {p!r}")
    svals = x.singular_values()
    if math.isinf(p):
        return float(max(s.max() for s in svals))
    total = sum(c * np.sum(s ** p) for c, s in zip(x.algebra.unit_weights, svals))
    return float(total ** (1.0 / p))


def herm_apply(x: AlgebraElement, f) -> AlgebraElement:
    """Apply a scalar function to a selfadjoint element blockwise."""
    blocks = []
    for b in x.blocks:
        ev, vecs = np.linalg.eigh(_herm(b))
        blocks.append((vecs * f(ev)) @ vecs.conj().T)
    return AlgebraElement(x.algebra, tuple(blocks))


def modulus(x: AlgebraElement) -> AlgebraElement:
    """``|x| = (x^* x)^{1/2}``."""
    return herm_apply(x.adjoint @ x, lambda ev: np.sqrt(np.clip(ev, 0.0, None)))


def positive_power(x: AlgebraElement, r: float) -> AlgebraElement:
    """``x^r`` for positive ``x``; negative spectrum from rounding is clipped to zero."""
    def f(ev):
        ev = np.clip(ev, 0.0, None)
        with np.errstate(divide="ignore"):
            out = np.where(ev > 0, ev ** r, 0.0 if r > 0 else np.inf)
        return out
    if r < 0 and x.eigvalsh().min() <= 0:
        raise DomainError("negative powers need a strictly positive element")
    return herm_apply(x, f)


def polar(x: AlgebraElement) -> tuple[AlgebraElement, AlgebraElement]:
    """Polar decomposition ``x = u |x|`` with ``u`` a partial isometry (blockwise SVD)."""
    us, mods = [], []
    for b in x.blocks:
        left, s, right_h = np.linalg.svd(b)
        keep = s > 1e-15 * max(s.max(initial=0.0), 1.0)
        us.append(left[:, keep] @ right_h[keep])
        mods.append((right_h.conj().T * s) @ right_h)
    return AlgebraElement(x.algebra, tuple(us)), AlgebraElement(x.algebra, tuple(mods))


class ProjectionElement(AlgebraElement):
    """A selfadjoint idempotent ``e = e^* = e^2``."""

    def __post_init__(self):
        super().__post_init__()
        for b in self.blocks:
            if not (np.allclose(b, b.conj().T, atol=ATOL, rtol=0)
                    and np.allclose(b @ b, b, atol=ATOL, rtol=0)):
                raise DomainError("a projection must be selfadjoint and idempotent")

    @property
    def complement(self) -> "ProjectionElement":
        one = self.algebra.identity()
        return ProjectionElement(self.algebra, (one - self).blocks)

    @property
    def trace_value(self) -> float:
        return trace(self).real


def spectral_projection(x: AlgebraElement, interval: tuple[float, float],
                        closed: tuple[bool, bool] = (False, False)) -> ProjectionElement:
    """Projection onto the eigenvectors of selfadjoint ``x`` with eigenvalue in ``interval``.

    ``closed`` says whether each endpoint belongs to the interval; the default is open.
    """
    if not x.is_selfadjoint():
        raise DomainError("spectral projections need a selfadjoint element")
    lo, hi = interval
    blocks = []
    for b in x.blocks:
        ev, vecs = np.linalg.eigh(_herm(b))
        above = ev >= lo if closed[0] else ev > lo
        below = ev <= hi if closed[1] else ev < hi
        sel = vecs[:, above & below]
        blocks.append(sel @ sel.conj().T)
    return ProjectionElement(x.algebra, tuple(blocks))


def meet(e: AlgebraElement, f: AlgebraElement) -> ProjectionElement:
    """``e /\\ f``: projection onto the intersection of the two ranges."""
    blocks = []
    for a, b in zip(e.blocks, f.blocks):
        n = a.shape[0]
        # range(a) ∩ range(b) = kernel of (1 - a) + (1 - b)
        ev, vecs = np.linalg.eigh(_herm((np.eye(n) - a) + (np.eye(n) - b)))
        sel = vecs[:, ev < 1e-9]
        blocks.append(sel @ sel.conj().T)
    return ProjectionElement(e.algebra, tuple(blocks))


def random_element(algebra: TracialAlgebra, seed=None, kind: str = "general") -> AlgebraElement:
    """Gaussian random element with an exact structural constraint.

    ``kind`` is one of ``general``, ``selfadjoint``, ``positive``, ``traceless``.
    """
    rng = np.random.default_rng(seed)
    blocks = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in algebra.block_dims]
    x = algebra.element(blocks)
    if kind == "general":
        return x
    if kind == "selfadjoint":
        return AlgebraElement(algebra, tuple(_herm(b) for b in x.blocks))
    if kind == "positive":
        return AlgebraElement(algebra, tuple(_herm(b.conj().T @ b) for b in x.blocks))
    if kind == "traceless":
        return x - trace(x) * algebra.identity()
    raise ValueError(f"unknown kind {kind!r}")
