"""Weighted block matrix algebras with a normalized trace.

A finite trace algebra is modeled as a direct sum of full matrix blocks
``M_{n_1} (+) ... (+) M_{n_r}``.  Block ``i`` carries a weight ``w_i > 0``
and the state is ``tau(X) = sum_i w_i tr(X_i)`` with the unnormalized
matrix trace ``tr``.  The normalization ``sum_i w_i n_i = 1`` makes
``tau(I) = 1``.  A single block ``(n, 1/n)`` is the ``n x n`` factor with
its usual normalized trace; several blocks with uneven weights produce
non-integer dimension counts, which is the point of the model.

Operators are immutable.  Block data is stored read-only and every
operation returns a fresh instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuralError

# Default gates, shared across modules.
NORMALIZATION_TOL = 1e-12
DISSIPATIVE_TOL = 1e-10
SELF_ADJOINT_TOL = 1e-10
CLUSTER_SCALE = 1e-8
COND_LIMIT = 1e12


@dataclass(frozen=True)
class AlgebraDescriptor:
    """Shape of the algebra: a tuple of ``(dim, weight)`` pairs."""

    blocks: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.blocks:
            raise StructuralError("descriptor needs at least one block")
        clean = []
        total = 0.0
        for dim, weight in self.blocks:
            dim = int(dim)
            weight = float(weight)
            if dim < 1:
                raise StructuralError(f"block dimension must be positive, got {dim}")
            if weight <= 0.0:
                raise StructuralError(f"block weight must be positive, got {weight}")
            clean.append((dim, weight))
            total += dim * weight
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise StructuralError(
                f"weights do not normalize the trace: sum(dim*weight) = {total!r}"
            )
        object.__setattr__(self, "blocks", tuple(clean))

    @classmethod
    def factor(cls, dim: int) -> "AlgebraDescriptor":
        """The ``dim x dim`` factor with its normalized trace."""
        return cls(((int(dim), 1.0 / int(dim)),))

    @classmethod
    def parse(cls, spec: str) -> "AlgebraDescriptor":
        """Parse ``"2x0.25,2x0.25"`` style descriptor strings."""
        blocks = []
        for part in spec.replace(";", ",").split(","):
            part = part.strip()
            if not part:
                continue
            try:
                dim_s, weight_s = part.split("x")
                blocks.append((int(dim_s), float(weight_s)))
            except ValueError as exc:
                raise StructuralError(f"bad block spec {part!r}") from exc
        return cls(tuple(blocks))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.blocks)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.blocks)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def spec_string(self) -> str:
        return ",".join(f"{d}x{w:.17g}" for d, w in self.blocks)


def _freeze(block: np.ndarray) -> np.ndarray:
    out = np.array(block, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Operator:
    """An element of a weighted block algebra.

    ``blocks[i]`` is the dense complex matrix of the i-th summand.  Data
    is read-only; arithmetic returns new operators.
    """

    algebra: AlgebraDescriptor
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = self.algebra.dims
        if len(self.blocks) != len(dims):
            raise StructuralError(
                f"expected {len(dims)} blocks, got {len(self.blocks)}"
            )
        frozen = []
        for dim, block in zip(dims, self.blocks):
            arr = np.asarray(block)
            if arr.shape != (dim, dim):
                raise StructuralError(
                    f"block of shape {arr.shape} does not match dimension {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise StructuralError("block contains non-finite entries")
            frozen.append(_freeze(arr))
        object.__setattr__(self, "blocks", tuple(frozen))

    # -- arithmetic ----------------------------------------------------

    def _same_algebra(self, other: "Operator") -> None:
        if self.algebra != other.algebra:
            raise StructuralError("operators live in different algebras")

    def __add__(self, other: "Operator") -> "Operator":
        self._same_algebra(other)
        return Operator(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: "Operator") -> "Operator":
        self._same_algebra(other)
        return Operator(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self) -> "Operator":
        return Operator(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, scalar: complex) -> "Operator":
        z = complex(scalar)
        return Operator(self.algebra, tuple(z * a for a in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._same_algebra(other)
        return Operator(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def shift(self, z: complex) -> "Operator":
        """``self + z * I``."""
        zc = complex(z)
        return Operator(
            self.algebra,
            tuple(a + zc * np.eye(a.shape[0]) for a in self.blocks),
        )

    @property
    def H(self) -> "Operator":
        """Adjoint."""
        return Operator(self.algebra, tuple(a.conj().T for a in self.blocks))

    def dense(self) -> np.ndarray:
        """Single block-diagonal matrix; convenient for printing and I/O."""
        n = self.algebra.total_dim
        out = np.zeros((n, n), dtype=np.complex128)
        at = 0
        for block in self.blocks:
            m = block.shape[0]
            out[at : at + m, at : at + m] = block
            at += m
        return out


# -- constructors ------------------------------------------------------


def identity(alg: AlgebraDescriptor) -> Operator:
    return Operator(alg, tuple(np.eye(d, dtype=np.complex128) for d in alg.dims))


def zeros(alg: AlgebraDescriptor) -> Operator:
    return Operator(alg, tuple(np.zeros((d, d), dtype=np.complex128) for d in alg.dims))


def scalar_operator(alg: AlgebraDescriptor, z: complex) -> Operator:
    return identity(alg) * complex(z)


def from_blocks(alg: AlgebraDescriptor, blocks: Sequence[np.ndarray]) -> Operator:
    return Operator(alg, tuple(blocks))


def diagonal_operator(alg: AlgebraDescriptor, entries: Iterable[complex]) -> Operator:
    """Diagonal operator from entries listed block by block."""
    flat = [complex(v) for v in entries]
    if len(flat) != alg.total_dim:
        raise StructuralError(
            f"need {alg.total_dim} diagonal entries, got {len(flat)}"
        )
    blocks = []
    at = 0
    for d in alg.dims:
        blocks.append(np.diag(np.array(flat[at : at + d], dtype=np.complex128)))
        at += d
    return Operator(alg, tuple(blocks))


def blockwise(f: Callable[[np.ndarray], np.ndarray], X: Operator) -> Operator:
    """Apply a matrix function block by block."""
    return Operator(X.algebra, tuple(np.asarray(f(b)) for b in X.blocks))


# -- trace and norms ---------------------------------------------------


def trace(X: Operator, alg: AlgebraDescriptor | None = None) -> complex:
    """The weighted trace ``tau(X) = sum_i w_i tr(X_i)``.

    ``tau`` is a faithful normal tracial state: ``tau(I) = 1``,
    ``tau(XY) = tau(YX)``, ``tau(X*X) >= 0``.
    """
    if alg is not None and alg != X.algebra:
        raise StructuralError("descriptor does not match the operator")
    return complex(
        sum(w * np.trace(b) for (_, w), b in zip(X.algebra.blocks, X.blocks))
    )


def norm(X: Operator) -> float:
    """Operator (spectral) norm: the largest block 2-norm."""
    return max(float(np.linalg.norm(b, 2)) for b in X.blocks)


def frobenius(X: Operator) -> float:
    return float(np.sqrt(sum(np.linalg.norm(b, "fro") ** 2 for b in X.blocks)))


def re_part(X: Operator) -> Operator:
    return Operator(X.algebra, tuple((b + b.conj().T) / 2 for b in X.blocks))


def im_part(X: Operator) -> Operator:
    return Operator(X.algebra, tuple((b - b.conj().T) / 2j for b in X.blocks))


def self_adjointness_defect(X: Operator) -> float:
    return max(float(np.linalg.norm(b - b.conj().T, 2)) for b in X.blocks)


def is_self_adjoint(X: Operator, tol: float = SELF_ADJOINT_TOL) -> bool:
    return self_adjointness_defect(X) <= tol * max(1.0, norm(X))


def dissipativity_defect(X: Operator) -> float:
    """How far the imaginary part is from being positive semidefinite.

    Returns ``max(0, -lambda_min(Im X))``; zero means dissipative.
    """
    worst = 0.0
    for b in X.blocks:
        imag = (b - b.conj().T) / 2j
        lo = float(np.linalg.eigvalsh(imag)[0])
        worst = max(worst, -lo)
    return max(0.0, worst)


def is_dissipative(X: Operator, tol: float = DISSIPATIVE_TOL) -> bool:
    return dissipativity_defect(X) <= tol * max(1.0, norm(X))


# -- inversion ---------------------------------------------------------


def condition_number(X: Operator) -> float:
    """Two-norm condition of the block-diagonal matrix.

    Ratio of the extreme singular values across all blocks; ``inf`` for
    an exactly singular operator.
    """
    smax = 0.0
    smin = np.inf
    for b in X.blocks:
        s = np.linalg.svd(b, compute_uv=False)
        smax = max(smax, float(s[0]))
        smin = min(smin, float(s[-1]))
    if smin == 0.0:
        return float("inf")
    return smax / smin


def inverse_with_cond(X: Operator, cond_limit: float = COND_LIMIT) -> tuple[Operator, float]:
    """Block inverse together with the condition estimate.

    Operators whose condition exceeds ``cond_limit`` are treated as
    singular and rejected; the heuristic residual bound
    ``||X X^{-1} - I|| <~ cond(X) * 1e-14`` then stays meaningful.
    """
    cond = condition_number(X)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DomainError(
            f"operator is numerically singular (condition {cond:.3e} "
            f"exceeds {cond_limit:.1e})"
        )
    inv = Operator(X.algebra, tuple(np.linalg.inv(b) for b in X.blocks))
    return inv, cond


def inverse(X: Operator, cond_limit: float = COND_LIMIT) -> Operator:
    return inverse_with_cond(X, cond_limit)[0]


# -- spectral decomposition -------------------------------------------


@dataclass(frozen=True)
class SpectralDecomposition:
    """Clustered eigendecomposition of a self-adjoint operator.

    ``eigenvalues[j]`` is the representative of cluster ``j`` (ascending)
    and ``projections[j]`` the orthogonal spectral projection onto it,
    an element of the same algebra.  Projections are idempotent and
    self-adjoint and resolve the identity.
    """

    algebra: AlgebraDescriptor
    eigenvalues: tuple[float, ...]
    projections: tuple[Operator, ...]
    cluster_tol: float

    def apply(self, f: Callable[[float], complex]) -> Operator:
        """Functional calculus ``sum_j f(lambda_j) P_j``."""
        out = zeros(self.algebra)
        for lam, proj in zip(self.eigenvalues, self.projections):
            out = out + complex(f(lam)) * proj
        return out

    def projection_where(self, pred: Callable[[float], bool]) -> Operator:
        out = zeros(self.algebra)
        for lam, proj in zip(self.eigenvalues, self.projections):
            if pred(lam):
                out = out + proj
        return out

    def reconstruct(self) -> Operator:
        return self.apply(lambda lam: lam)


def spectral(
    X: Operator,
    cluster_tol: float | None = None,
    sa_tol: float = SELF_ADJOINT_TOL,
) -> SpectralDecomposition:
    """Eigenvalues and spectral projections of a self-adjoint operator.

    Eigenvalues closer than ``cluster_tol`` (default ``1e-8 * ||X||``)
    are merged into a single cluster, across block boundaries; the
    projection of a cluster is then still an element of the algebra.
    """
    defect = self_adjointness_defect(X)
    if defect > sa_tol * max(1.0, norm(X)):
        raise DomainError(
            f"operator is not self-adjoint (defect {defect:.3e})"
        )
    scale = norm(X)
    if cluster_tol is None:
        cluster_tol = CLUSTER_SCALE * scale
    # (eigenvalue, block index, eigenvector) triples across all blocks
    triples: list[tuple[float, int, np.ndarray]] = []
    for bi, b in enumerate(X.blocks):
        herm = (b + b.conj().T) / 2
        vals, vecs = np.linalg.eigh(herm)
        for k in range(len(vals)):
            triples.append((float(vals[k]), bi, vecs[:, k]))
    triples.sort(key=lambda t: t[0])

    clusters: list[list[tuple[float, int, np.ndarray]]] = []
    for item in triples:
        if clusters and item[0] - clusters[-1][-1][0] <= cluster_tol:
            clusters[-1].append(item)
        else:
            clusters.append([item])

    eigenvalues = []
    projections = []
    for members in clusters:
        eigenvalues.append(sum(m[0] for m in members) / len(members))
        blocks = [np.zeros((d, d), dtype=np.complex128) for d in X.algebra.dims]
        for _, bi, vec in members:
            blocks[bi] += np.outer(vec, vec.conj())
        projections.append(Operator(X.algebra, tuple(blocks)))
    return SpectralDecomposition(
        X.algebra, tuple(eigenvalues), tuple(projections), float(cluster_tol)
    )


def spectrum(X: Operator) -> np.ndarray:
    """All eigenvalues of ``X`` (no self-adjointness assumed)."""
    return np.concatenate([np.linalg.eigvals(b) for b in X.blocks])


def eigenvalues_self_adjoint(X: Operator) -> np.ndarray:
    """All eigenvalues of a self-adjoint operator, ascending, unclustered."""
    if not is_self_adjoint(X):
        raise DomainError("operator is not self-adjoint")
    vals = np.concatenate([np.linalg.eigvalsh((b + b.conj().T) / 2) for b in X.blocks])
    return np.sort(vals)


def psd_sqrt(B: Operator, tol: float = 1e-10) -> Operator:
    """Positive square root of a positive semidefinite operator.

    Eigenvalues in ``[-tol * ||B||, 0)`` are clipped to zero; anything
    lower is a domain error.
    """
    scale = max(1.0, norm(B))
    dec = spectral(B)
    lo = min(dec.eigenvalues) if dec.eigenvalues else 0.0
    if lo < -tol * scale:
        raise DomainError(f"operator is not positive semidefinite (min eig {lo:.3e})")
    return dec.apply(lambda lam: np.sqrt(max(lam, 0.0)))


# -- amplification (2x2 block matrices over the algebra) ---------------


def amplify(alg: AlgebraDescriptor) -> AlgebraDescriptor:
    """Descriptor of 2x2 block matrices over ``alg``.

    Dimensions double and weights halve, so the amplified trace is again
    normalized and restricts to the mean of the diagonal corners.
    """
    return AlgebraDescriptor(tuple((2 * d, w / 2) for d, w in alg.blocks))


def _split_dim(dim: int) -> int:
    if dim % 2 != 0:
        raise StructuralError("descriptor is not an amplification (odd block)")
    return dim // 2


def base_of_amplified(alg2: AlgebraDescriptor) -> AlgebraDescriptor:
    return AlgebraDescriptor(tuple((_split_dim(d), 2 * w) for d, w in alg2.blocks))


def block2(M: Operator, K: Operator, N: Operator) -> Operator:
    """The block operator ``[[M, K*], [K, N]]`` in the amplified algebra."""
    M._same_algebra(K)
    M._same_algebra(N)
    alg2 = amplify(M.algebra)
    blocks = []
    for mb, kb, nb in zip(M.blocks, K.blocks, N.blocks):
        top = np.hstack([mb, kb.conj().T])
        bot = np.hstack([kb, nb])
        blocks.append(np.vstack([top, bot]))
    return Operator(alg2, tuple(blocks))


def top_corner(X2: Operator) -> Operator:
    """Compression to the first summand: ``U* X U`` with ``U = (I; 0)``."""
    base = base_of_amplified(X2.algebra)
    blocks = []
    for d, b in zip(base.dims, X2.blocks):
        blocks.append(b[:d, :d])
    return Operator(base, tuple(blocks))


def bottom_corner(X2: Operator) -> Operator:
    """Compression to the second summand: ``W* X W`` with ``W = (0; I)``."""
    base = base_of_amplified(X2.algebra)
    blocks = []
    for d, b in zip(base.dims, X2.blocks):
        blocks.append(b[d:, d:])
    return Operator(base, tuple(blocks))


def swap_conjugate(X2: Operator) -> Operator:
    """Conjugation by ``[[0, I], [I, 0]]``; swaps the two corners."""
    base = base_of_amplified(X2.algebra)
    blocks = []
    for d, b in zip(base.dims, X2.blocks):
        a, r = b[:d, :d], b[:d, d:]
        c, s = b[d:, :d], b[d:, d:]
        blocks.append(np.vstack([np.hstack([s, c]), np.hstack([r, a])]))
    return Operator(X2.algebra, tuple(blocks))


def tau2(X2: Operator, alg2: AlgebraDescriptor | None = None) -> complex:
    """Mean of the corner traces: ``(tau(A) + tau(D)) / 2``.

    Equals the amplified trace of the full block operator, which is the
    cross-check used in the tests.
    """
    if alg2 is not None and alg2 != X2.algebra:
        raise StructuralError("descriptor does not match the operator")
    base = base_of_amplified(X2.algebra)  # also validates even dims
    a = trace(top_corner(X2))
    d = trace(bottom_corner(X2))
    del base
    return (a + d) / 2.0
