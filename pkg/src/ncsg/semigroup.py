"""Standard semigroups ``T_t = exp(-tL)`` on a tracial matrix algebra.

Generators are stored as matrices in GNS coordinates (see ``TracialAlgebra.vec``),
where trace-selfadjointness of ``T_t`` is plain Hermitian symmetry.  Four
constructive families are provided, each standard by construction:

* ``Schur``: ``L(e_ij) = |b_i - b_j|^2 e_ij``; complete positivity is Schoenberg's
  theorem for the conditionally negative kernel ``|b_i - b_j|^2``.
* ``Depolarizing``: ``L = rate (id - tau(.) 1)``.
* ``MarkovChain``: ``L f = -Q f`` for a reversible rate matrix on a commutative algebra.
* ``TensorSum``: ``L_1 (x) id + id (x) L_2`` on the tensor product algebra.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .algebra import (
    AlgebraElement,
    DomainError,
    StructureError,
    TracialAlgebra,
    lp_norm,
    random_element,
    trace,
)

CLUSTER_RTOL = 1e-8
SYMMETRY_TOL = 1e-8
CHECK_TOL = 1e-9


class ValidationError(ValueError):
    """Generator data violates a standing hypothesis (symmetry, detailed balance...)."""


# -- generator specifications -------------------------------------------------

@dataclass(frozen=True)
class Schur:
    vectors: tuple[tuple[float, ...], ...]

    def __init__(self, vectors):
        rows = []
        for v in vectors:
            rows.append(tuple(float(c) for c in np.atleast_1d(v)))
        object.__setattr__(self, "vectors", tuple(rows))

    def kernel(self) -> np.ndarray:
        """``psi(i, j) = |b_i - b_j|^2``: symmetric with zero diagonal."""
        b = np.array(self.vectors, dtype=float)
        diff = b[:, None, :] - b[None, :, :]
        return np.sum(diff ** 2, axis=-1)

    def to_json(self):
        return {"variant": "schur", "vectors": [list(v) for v in self.vectors]}


@dataclass(frozen=True)
class Depolarizing:
    rate: float = 1.0

    def to_json(self):
        return {"variant": "depolarizing", "rate": self.rate}


@dataclass(frozen=True)
class MarkovChain:
    rates: tuple[tuple[float, ...], ...]

    def __init__(self, rates):
        object.__setattr__(self, "rates", tuple(tuple(float(c) for c in row) for row in rates))

    @property
    def Q(self) -> np.ndarray:
        return np.array(self.rates, dtype=float)

    def to_json(self):
        return {"variant": "markov_chain", "Q": [list(r) for r in self.rates]}


@dataclass(frozen=True)
class TensorSum:
    left: object
    right: object
    left_algebra: TracialAlgebra
    right_algebra: TracialAlgebra

    @property
    def algebra(self) -> TracialAlgebra:
        return self.left_algebra.tensor(self.right_algebra)

    def to_json(self):
        return {
            "variant": "tensor_sum",
            "left": self.left.to_json(),
            "right": self.right.to_json(),
            "left_algebra": self.left_algebra.to_json(),
            "right_algebra": self.right_algebra.to_json(),
        }


GeneratorSpec = Schur | Depolarizing | MarkovChain | TensorSum


def generator_from_json(doc: dict | str) -> GeneratorSpec:
    if isinstance(doc, str):
        doc = json.loads(doc)
    kind = doc.get("variant")
    if kind == "schur":
        return Schur(doc["vectors"])
    if kind == "depolarizing":
        return Depolarizing(float(doc.get("rate", 1.0)))
    if kind == "markov_chain":
        return MarkovChain(doc["Q"])
    if kind == "tensor_sum":
        return TensorSum(
            generator_from_json(doc["left"]),
            generator_from_json(doc["right"]),
            TracialAlgebra.from_json(doc["left_algebra"]),
            TracialAlgebra.from_json(doc["right_algebra"]),
        )
    raise ValidationError(f"unknown generator variant {kind!r}")


# -- superoperators -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Superoperator:
    """A linear map on ``M`` as a matrix in GNS coordinates."""

    algebra: TracialAlgebra
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.algebra.dim
        if m.shape != (d, d):
            raise StructureError(f"superoperator on dim {d} needs a {d}x{d} matrix, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_map(cls, algebra: TracialAlgebra, f: Callable[[AlgebraElement], AlgebraElement]):
        cols = [algebra.vec(f(e)) for e in algebra.basis()]
        return cls(algebra, np.column_stack(cols))

    @classmethod
    def identity(cls, algebra: TracialAlgebra):
        return cls(algebra, np.eye(algebra.dim))

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        return self.algebra.unvec(self.matrix @ self.algebra.vec(x))

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.algebra, self.matrix @ other.matrix)

    def __add__(self, other):
        return Superoperator(self.algebra, self.matrix + other.matrix)

    def __sub__(self, other):
        return Superoperator(self.algebra, self.matrix - other.matrix)

    def __mul__(self, c):
        return Superoperator(self.algebra, c * self.matrix)

    __rmul__ = __mul__

    @property
    def gns_adjoint(self) -> "Superoperator":
        """Adjoint for ``<x, y> = tau(x^* y)``."""
        return Superoperator(self.algebra, self.matrix.conj().T)

    def trace_dual(self, y: AlgebraElement) -> AlgebraElement:
        """``Phi'(y)`` with ``tau(Phi(x) y) = tau(x Phi'(y))`` for all ``x``."""
        return self.gns_adjoint(y.adjoint).adjoint

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def exp(self, t: float) -> "Superoperator":
        """``exp(-t L)`` by dense matrix exponential (independent of any eigensolver)."""
        return Superoperator(self.algebra, scipy.linalg.expm(-t * self.matrix))

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij E_ij (x) Phi(E_ij)`` over the ambient ``size x size`` units.

        Matrix units straddling two blocks are sent to zero first (compression onto the
        block diagonal is completely positive), so positivity of this matrix is
        equivalent to complete positivity of the map on the block algebra.
        The unit index ``(i, j)`` is laid out as in column-stacking ``vec``:
        ``C[(i, a), (j, b)] = Phi(E_ij)[a, b]``.
        """
        alg = self.algebra
        size = alg.size
        out = np.zeros((size * size, size * size), dtype=complex)
        start = 0
        for b, n in enumerate(alg.block_dims):
            for i in range(n):
                for j in range(n):
                    blocks = [np.zeros((m, m)) for m in alg.block_dims]
                    blocks[b] = np.zeros((n, n))
                    blocks[b][i, j] = 1.0
                    image = self(alg.element(blocks)).dense()
                    gi, gj = start + i, start + j
                    out[gi * size:(gi + 1) * size, gj * size:(gj + 1) * size] = image
            start += n
        return out


def build_generator(spec: GeneratorSpec, algebra: TracialAlgebra) -> Superoperator:
    """Generator ``L`` of a standard semigroup, as a GNS-symmetric PSD superoperator."""
    if isinstance(spec, Schur):
        psi = spec.kernel()
        if psi.shape[0] != algebra.size:
            raise StructureError(f"Schur kernel on {psi.shape[0]} indices, algebra has size {algebra.size}")
        diag, start = [], 0
        for n in algebra.block_dims:
            sub = psi[start:start + n, start:start + n]
            diag.append(sub.reshape(-1, order="F"))
            start += n
        return Superoperator(algebra, np.diag(np.concatenate(diag)))

    if isinstance(spec, Depolarizing):
        if not spec.rate > 0:
            raise DomainError(f"depolarizing rate must be positive, got {spec.rate}")
        one = algebra.vec(algebra.identity())
        return Superoperator(algebra, spec.rate * (np.eye(algebra.dim) - np.outer(one, one.conj())))

    if isinstance(spec, MarkovChain):
        if not algebra.is_commutative:
            raise StructureError("a Markov chain generator lives on a commutative algebra")
        Q = spec.Q
        w = np.array(algebra.trace_weights)
        if Q.shape != (len(w), len(w)):
            raise StructureError(f"rate matrix shape {Q.shape} does not match {len(w)} states")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0) or np.max(np.abs(Q.sum(axis=1))) > 1e-10:
            raise ValidationError("Q must have nonnegative off-diagonal rates and zero row sums")
        flux = w[:, None] * Q
        if np.max(np.abs(flux - flux.T)) > 1e-10:
            raise ValidationError("detailed balance w_i Q_ij = w_j Q_ji fails: semigroup not trace-selfadjoint")
        s = np.sqrt(w)
        return Superoperator(algebra, -(s[:, None] * Q / s[None, :]))

    if isinstance(spec, TensorSum):
        if spec.algebra != algebra:
            raise StructureError("tensor-sum generator needs the tensor product of its factor algebras")
        L1 = build_generator(spec.left, spec.left_algebra).matrix
        L2 = build_generator(spec.right, spec.right_algebra).matrix
        K = _tensor_permutation(spec.left_algebra, spec.right_algebra)
        kron_sum = np.kron(L1, np.eye(L2.shape[0])) + np.kron(np.eye(L1.shape[0]), L2)
        return Superoperator(algebra, K @ kron_sum @ K.T)

    raise TypeError(f"not a generator spec: {spec!r}")


def _tensor_permutation(a: TracialAlgebra, b: TracialAlgebra) -> np.ndarray:
    """Permutation taking ``kron(vec_a(x), vec_b(y))`` to ``vec_{a(x)b}(x (x) y)``."""
    prod = a.tensor(b)
    basis_a, basis_b = a.basis(), b.basis()
    K = np.zeros((prod.dim, a.dim * b.dim))
    for i, ea in enumerate(basis_a):
        for j, eb in enumerate(basis_b):
            K[:, i * b.dim + j] = prod.vec(a.tensor_element(b, ea, eb)).real
    return K


# -- validation ----------------------------------------------------------------

@dataclass
class CheckResult:
    passed: bool
    residual: float
    detail: str = ""

    def to_json(self):
        return {"passed": self.passed, "residual": self.residual, "detail": self.detail}


@dataclass
class ValidationReport:
    checks: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def to_json(self):
        return {"passed": self.passed, "checks": {k: c.to_json() for k, c in self.checks.items()}}


def check_standard_maps(maps: Sequence[tuple[str, Superoperator]], *, n_samples: int = 6,
                        seed=0, tol: float = CHECK_TOL) -> ValidationReport:
    """Check complete positivity, unitality, trace-selfadjointness and L_p contractivity.

    Failures are recorded in the report, never raised.
    """
    rng = np.random.default_rng(seed)
    worst = {"completely_positive": 0.0, "unital": 0.0, "trace_selfadjoint": 0.0}
    worst.update({f"contraction_p{p}": 0.0 for p in ("1", "2", "inf")})
    for _, phi in maps:
        alg = phi.algebra
        one = alg.identity()
        choi = phi.choi()
        cmin = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T)).min()
        worst["completely_positive"] = max(worst["completely_positive"], -cmin)
        worst["unital"] = max(worst["unital"], lp_norm(phi(one) - one, np.inf))
        for _ in range(n_samples):
            x = random_element(alg, rng, "general")
            y = random_element(alg, rng, "general")
            lhs, rhs = trace(phi(x) @ y), trace(x @ phi(y))
            worst["trace_selfadjoint"] = max(worst["trace_selfadjoint"],
                                             abs(lhs - rhs) / (lp_norm(x, 2) * lp_norm(y, 2)))
            for kind in ("general", "selfadjoint", "positive"):
                z = random_element(alg, rng, kind)
                image = phi(z)
                for label, p in (("1", 1), ("2", 2), ("inf", np.inf)):
                    key = f"contraction_p{label}"
                    excess = (lp_norm(image, p) - lp_norm(z, p)) / lp_norm(z, p)
                    worst[key] = max(worst[key], excess)
    report = ValidationReport()
    for key, res in worst.items():
        report.checks[key] = CheckResult(bool(res <= tol), float(max(res, 0.0)))
    return report


def check_standard_semigroup(L: Superoperator, t_samples: Sequence[float], *,
                             n_samples: int = 6, seed=0, tol: float = CHECK_TOL) -> ValidationReport:
    """Validate ``T_t = exp(-tL)`` at each sampled time; see :func:`check_standard_maps`."""
    maps = [(f"t={t:g}", L.exp(t)) for t in t_samples]
    report = check_standard_maps(maps, n_samples=n_samples, seed=seed, tol=tol)
    sym = L.symmetry_residual()
    report.checks["gns_symmetric_generator"] = CheckResult(sym <= tol, sym)
    return report


# -- spectral decomposition ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Clustered eigendecomposition ``L = sum_k lambda_k P_k``.

    ``vectors`` holds GNS-orthonormal eigenvectors column by column; cluster ``k``
    owns columns ``bounds[k][0]:bounds[k][1]``.  ``kernel_index`` is the cluster of
    ``lambda = 0`` (always present for a unital semigroup, since ``L 1 = 0``).
    """

    generator: Superoperator
    eigenvalues: np.ndarray
    vectors: np.ndarray
    bounds: tuple[tuple[int, int], ...]
    kernel_index: int | None

    @property
    def algebra(self) -> TracialAlgebra:
        return self.generator.algebra

    @property
    def column_eigenvalues(self) -> np.ndarray:
        out = np.empty(self.vectors.shape[1])
        for lam, (lo, hi) in zip(self.eigenvalues, self.bounds):
            out[lo:hi] = lam
        return out

    @property
    def nonzero(self) -> np.ndarray:
        """Mask over clusters excluding the kernel."""
        mask = np.ones(len(self.eigenvalues), dtype=bool)
        if self.kernel_index is not None:
            mask[self.kernel_index] = False
        return mask

    @property
    def gap(self) -> float:
        """Smallest nonzero eigenvalue."""
        return float(np.min(np.abs(self.eigenvalues[self.nonzero])))

    def multiplicities(self) -> list[int]:
        return [hi - lo for lo, hi in self.bounds]

    def projection(self, k: int) -> np.ndarray:
        lo, hi = self.bounds[k]
        V = self.vectors[:, lo:hi]
        return V @ V.conj().T

    def kernel_projection(self) -> np.ndarray:
        if self.kernel_index is None:
            return np.zeros((self.algebra.dim,) * 2, dtype=complex)
        return self.projection(self.kernel_index)

    def coefficients(self, x: AlgebraElement) -> np.ndarray:
        return self.vectors.conj().T @ self.algebra.vec(x)

    def components(self, x: AlgebraElement) -> list[AlgebraElement]:
        """``P_k x`` for every cluster, in eigenvalue order."""
        c = self.coefficients(x)
        return [self.algebra.unvec(self.vectors[:, lo:hi] @ c[lo:hi]) for lo, hi in self.bounds]

    def apply_symbol(self, values: np.ndarray, x: AlgebraElement) -> AlgebraElement:
        """``sum_k values[k] P_k x`` with one value per cluster."""
        values = np.asarray(values, dtype=complex)
        col = np.empty(self.vectors.shape[1], dtype=complex)
        for v, (lo, hi) in zip(values, self.bounds):
            col[lo:hi] = v
        return self.algebra.unvec(self.vectors @ (col * self.coefficients(x)))

    def symbol_matrix(self, values: np.ndarray) -> Superoperator:
        values = np.asarray(values, dtype=complex)
        col = np.empty(self.vectors.shape[1], dtype=complex)
        for v, (lo, hi) in zip(values, self.bounds):
            col[lo:hi] = v
        return Superoperator(self.algebra, (self.vectors * col) @ self.vectors.conj().T)

    def kernel_norm(self, x: AlgebraElement) -> float:
        if self.kernel_index is None:
            return 0.0
        lo, hi = self.bounds[self.kernel_index]
        return float(np.linalg.norm(self.coefficients(x)[lo:hi]))


def eigendecompose(L: Superoperator) -> SpectralDecomposition:
    sym = L.symmetry_residual()
    if sym > SYMMETRY_TOL:
        raise ValidationError(f"generator is not GNS-symmetric (residual {sym:.2e})")
    H = 0.5 * (L.matrix + L.matrix.conj().T)
    ev, vecs = np.linalg.eigh(H)
    scale = max(1.0, float(np.max(np.abs(ev), initial=0.0)))
    bounds, values, start = [], [], 0
    for i in range(1, len(ev) + 1):
        if i == len(ev) or ev[i] - ev[i - 1] > CLUSTER_RTOL * scale:
            bounds.append((start, i))
            values.append(float(np.mean(ev[start:i])))
            start = i
    values = np.array(values)
    kernel = None
    for k, lam in enumerate(values):
        if abs(lam) <= CLUSTER_RTOL * scale:
            kernel = k
            values[k] = 0.0
    return SpectralDecomposition(L, values, vecs, tuple(bounds), kernel)


def fixed_point_projection(dec: SpectralDecomposition, x: AlgebraElement) -> AlgebraElement:
    """``P_0 x``: the component of ``x`` in ``ker L`` (the fixed points of every ``T_t``)."""
    values = np.zeros(len(dec.eigenvalues))
    if dec.kernel_index is not None:
        values[dec.kernel_index] = 1.0
    return dec.apply_symbol(values, x)


def apply_Tt(dec: SpectralDecomposition, x: AlgebraElement, t: float) -> AlgebraElement:
    """``T_t x = sum_k exp(-t lambda_k) P_k x`` for real ``t >= 0``."""
    if t < 0:
        raise DomainError("T_t is defined for t >= 0; use calculus.apply_Tz for complex times")
    if t == 0:
        return x
    return dec.apply_symbol(np.exp(-t * dec.eigenvalues), x)


def semigroup_map(dec: SpectralDecomposition, t: float) -> Superoperator:
    return dec.symbol_matrix(np.exp(-t * dec.eigenvalues))
