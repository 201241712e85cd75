"""Operator logarithms under two branch conventions.

``IM_CUT`` places the branch cut along the negative imaginary semi-axis,
so scalar arguments live in ``(-pi/2, 3pi/2)``.  This is the convention
under which the logarithm of an invertible dissipative operator has
imaginary part in ``[0, pi]``; a negative real eigenvalue gets argument
``+pi``.  ``RE_CUT`` is the usual principal branch with arguments in
``(-pi, pi]``; a negative real eigenvalue is accepted and assigned
argument ``+pi`` (the boundary of the half-open interval), which is the
convention needed for logarithms of unitaries.

Three independent routes are provided.  ``log_op`` is functional
calculus on a complex Schur form.  ``log_integral`` evaluates the
resolvent integral

    log M = -i * int_0^inf ( (M + i s)^{-1} - (1 + i s)^{-1} I ) ds

by adaptive quadrature after the substitution ``s = tan(theta)`` and is
kept free of any ``log_op`` call so the two can cross-validate each
other.  ``log_series`` is the Mercator series for operators near the
identity.
"""

from __future__ import annotations

import enum

import numpy as np
import scipy.linalg

from .algebra import (
    COND_LIMIT,
    Operator,
    blockwise,
    condition_number,
    dissipativity_defect,
    im_part,
    norm,
)
from .errors import BranchCutError, DomainError, NumericError
from .quadrature import adaptive_gauss

CUT_PROXIMITY = 1e-12
# below this relative magnitude the strictly upper triangle of a Schur
# factor is treated as rounding noise, i.e. the block is normal
_NORMALITY_TOL = 1e-12
_EIGVEC_COND_LIMIT = 1e6


class BranchConvention(enum.Enum):
    IM_CUT = "im_cut"
    RE_CUT = "re_cut"


IM_CUT = BranchConvention.IM_CUT
RE_CUT = BranchConvention.RE_CUT


def cut_distance(lam: complex, branch: BranchConvention) -> float:
    """Distance from ``lam`` to the branch cut ray."""
    x, y = float(np.real(lam)), float(np.imag(lam))
    if branch is BranchConvention.IM_CUT:
        # ray {-i t : t >= 0}
        return abs(lam) if y > 0.0 else abs(x)
    # ray {-t : t >= 0}
    return abs(lam) if x > 0.0 else abs(y)


def scalar_log(z, branch: BranchConvention) -> np.ndarray:
    """Branch logarithm of scalars (vectorized)."""
    z = np.asarray(z, dtype=np.complex128)
    theta = np.angle(z)
    if branch is BranchConvention.IM_CUT:
        theta = np.where(theta < -np.pi / 2, theta + 2 * np.pi, theta)
    else:
        # (-pi, pi]: a signed-zero "-0j" below the axis must not flip to -pi
        theta = np.where(theta == -np.pi, np.pi, theta)
    return np.log(np.abs(z)) + 1j * theta


def _gate_cut(eigs: np.ndarray, branch: BranchConvention) -> None:
    if branch is not BranchConvention.IM_CUT:
        return  # RE_CUT accepts its boundary with argument +pi
    for lam in eigs:
        if cut_distance(lam, branch) <= CUT_PROXIMITY * abs(lam):
            raise BranchCutError(
                f"eigenvalue {lam} sits on the negative imaginary semi-axis "
                "(IM_CUT branch cut)"
            )


def _log_block(b: np.ndarray, branch: BranchConvention) -> np.ndarray:
    T, Q = scipy.linalg.schur(np.asarray(b, dtype=np.complex128), output="complex")
    diag = np.diag(T)
    _gate_cut(diag, branch)
    scale = max(1.0, float(np.linalg.norm(T, 2)))
    off = float(np.linalg.norm(T - np.diag(diag), 2))
    if off <= _NORMALITY_TOL * scale:
        # normal block: scalar branch calculus on the Schur diagonal
        return (Q * scalar_log(diag, branch)) @ Q.conj().T
    if branch is BranchConvention.IM_CUT:
        # rotate the cut onto the library's principal branch: the
        # spectrum stays clear of the negative real axis by the gate
        n = b.shape[0]
        return scipy.linalg.logm(-1j * b) + (1j * np.pi / 2) * np.eye(n)
    # RE_CUT, non-normal
    near_cut = any(
        cut_distance(lam, branch) <= CUT_PROXIMITY * abs(lam) for lam in diag
    )
    if not near_cut:
        return np.asarray(scipy.linalg.logm(b), dtype=np.complex128)
    # spectrum touches the boundary of (-pi, pi]; the convention there is
    # only enforceable through an eigendecomposition
    vals, vecs = np.linalg.eig(b)
    if np.linalg.cond(vecs) >= _EIGVEC_COND_LIMIT:
        raise BranchCutError(
            "non-normal operator with spectrum on the negative real axis "
            "and ill-conditioned eigenvectors; RE_CUT branch is ambiguous"
        )
    return vecs @ np.diag(scalar_log(vals, branch)) @ np.linalg.inv(vecs)


def log_op(
    M: Operator,
    branch: BranchConvention = BranchConvention.IM_CUT,
    cond_limit: float = COND_LIMIT,
) -> Operator:
    """Branch logarithm by functional calculus.

    Requires ``M`` invertible with spectrum off the cut; satisfies
    ``exp(log_op(M)) = M`` up to rounding.
    """
    cond = condition_number(M)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DomainError(f"log of a numerically singular operator (cond {cond:.3e})")
    return blockwise(lambda b: _log_block(b, branch), M)


def exp_op(X: Operator) -> Operator:
    """Blockwise matrix exponential (round-trip partner of ``log_op``)."""
    return blockwise(scipy.linalg.expm, X)


def log_integral(
    M: Operator,
    tol: float | None = None,
    dissipative_tol: float = 1e-10,
) -> Operator:
    """Resolvent-integral logarithm of an invertible dissipative operator.

    Independent quadrature oracle for ``log_op(M, IM_CUT)``.  ``tol`` is
    the absolute quadrature target (default ``1e-8 * max(1, ||M||)``).
    """
    scale = norm(M)
    defect = dissipativity_defect(M)
    if defect > dissipative_tol * max(1.0, scale):
        raise DomainError(f"operator is not dissipative (defect {defect:.3e})")
    cond = condition_number(M)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DomainError(f"log of a numerically singular operator (cond {cond:.3e})")
    if tol is None:
        tol = 1e-8 * max(1.0, scale)

    dims = M.algebra.dims
    eye = [np.eye(d, dtype=np.complex128) for d in dims]
    i_minus_m = [eye[k] - M.blocks[k] for k in range(len(dims))]

    def integrand(theta: float) -> np.ndarray:
        s = np.tan(theta)
        sec2 = 1.0 + s * s
        # -i (1+is)^{-1} (I - M)(M + is)^{-1}, the factored form of the
        # integrand; it avoids subtracting two nearly equal resolvents
        # at large s
        coef = -1j * sec2 / (1.0 + 1j * s)
        parts = []
        for k in range(len(dims)):
            shifted = M.blocks[k] + 1j * s * eye[k]
            parts.append(coef * np.linalg.solve(shifted.T, i_minus_m[k].T).T)
        return _stack(parts)

    value, _err, _panels = adaptive_gauss(
        integrand,
        0.0,
        np.pi / 2,
        tol,
        norm=lambda v: float(np.linalg.norm(v, 2)),
    )
    return Operator(M.algebra, tuple(_unstack(value, dims)))


def _stack(parts: list[np.ndarray]) -> np.ndarray:
    total = sum(p.shape[0] for p in parts)
    out = np.zeros((total, total), dtype=np.complex128)
    at = 0
    for p in parts:
        d = p.shape[0]
        out[at : at + d, at : at + d] = p
        at += d
    return out


def _unstack(dense: np.ndarray, dims: tuple[int, ...]) -> list[np.ndarray]:
    parts = []
    at = 0
    for d in dims:
        parts.append(dense[at : at + d, at : at + d])
        at += d
    return parts


def log_series(M: Operator, term_tol: float = 1e-14, max_terms: int = 200_000) -> Operator:
    """Mercator series ``-sum_k (I - M)^k / k`` for ``||M - I|| < 1``."""
    P = [np.eye(d, dtype=np.complex128) - b for d, b in zip(M.algebra.dims, M.blocks)]
    q = max(float(np.linalg.norm(p, 2)) for p in P)
    if q >= 1.0:
        raise DomainError(f"series route needs ||M - I|| < 1, got {q:.6f}")
    power = [p.copy() for p in P]
    total = [-p.copy() for p in P]
    for k in range(2, max_terms + 1):
        power = [pw @ p for pw, p in zip(power, P)]
        term_norm = max(float(np.linalg.norm(pw, 2)) for pw in power) / k
        for t, pw in zip(total, power):
            t -= pw / k
        if term_norm < term_tol:
            return Operator(M.algebra, tuple(total))
    raise NumericError(
        f"log series did not reach term tolerance {term_tol:g} in {max_terms} terms",
        history=[q],
    )


def arg_unitary(S: Operator, unitary_tol: float = 1e-9) -> Operator:
    """Self-adjoint argument of a unitary, spectrum in ``(-pi, pi]``.

    Equals the imaginary part of ``log_op(S, RE_CUT)``.
    """
    defect = max(
        float(np.linalg.norm(b.conj().T @ b - np.eye(b.shape[0]), 2)) for b in S.blocks
    )
    if defect > unitary_tol:
        raise DomainError(f"operator is not unitary (defect {defect:.3e})")
    return im_part(log_op(S, BranchConvention.RE_CUT))
