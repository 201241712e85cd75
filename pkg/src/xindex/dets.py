"""Determinants: trace-normalized absolute value and path determinants.

``fk_det`` is the positive determinant ``exp(tau[log sqrt(A*A)])``.  The
path determinant of a nonsingular C1 path ``t -> H_t`` is

    det(path) = exp( int_0^1 tau[H'_t H_t^{-1}] dt ),

whose phase is accumulated continuously along the path and never reduced
mod 2pi, so loops record their total winding.  For a path from ``I`` to
``M`` through invertible dissipative operators the value closes to
``exp(tau[log M])`` in the IM_CUT branch (``det_tau_dissipative``); for
Cayley paths of unitaries it closes to the RE_CUT branch value
(``det_tau_unitary``).  The polar identity

    det_tau(M) = exp(i pi tau[Xi(M)]) * fk_det(M)

splits the determinant of a dissipative operator into phase and modulus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    COND_LIMIT,
    Operator,
    condition_number,
    identity,
    inverse,
    norm,
    trace,
)
from .errors import DomainError, PathError
from .oplog import IM_CUT, RE_CUT, log_op
from .quadrature import adaptive_gauss
from .reports import VerificationReport, check_report, operator_digest
from .xi import XiStrategy, XiTag, xi_trace

DEFAULT_QUAD_TOL = 1e-8
MIN_SAMPLES = 33


@dataclass(frozen=True)
class OperatorPath:
    """A path of operators on [0, 1] with derivative access.

    ``kind`` is one of ``linear``, ``cayley_scaled``, ``sampled``, or a
    combinator (``functional``, ``product``, ``concat``).  Sampled paths
    carry their nodes and use finite differences; all other kinds have
    analytic derivatives.
    """

    kind: str
    _value: Callable[[float], Operator] | None = None
    _derivative: Callable[[float], Operator] | None = None
    samples: tuple[tuple[float, Operator], ...] | None = None
    legs: tuple["OperatorPath", ...] = field(default=())

    def value(self, t: float) -> Operator:
        if self.kind == "sampled":
            raise DomainError("sampled paths are evaluated at their nodes only")
        if self.kind == "concat":
            first, second = self.legs
            return first.value(2 * t) if t <= 0.5 else second.value(2 * t - 1)
        return self._value(t)

    def derivative(self, t: float) -> Operator:
        if self.kind == "sampled":
            raise DomainError("sampled paths use finite differences internally")
        if self.kind == "concat":
            first, second = self.legs
            inner = first.derivative(2 * t) if t <= 0.5 else second.derivative(2 * t - 1)
            return 2.0 * inner
        return self._derivative(t)

    def endpoints(self) -> tuple[Operator, Operator]:
        if self.kind == "sampled":
            return self.samples[0][1], self.samples[-1][1]
        if self.kind == "concat":
            return self.legs[0].endpoints()[0], self.legs[1].endpoints()[1]
        return self.value(0.0), self.value(1.0)


def linear_path(h0: Operator, h1: Operator) -> OperatorPath:
    """``t -> (1 - t) H0 + t H1``."""
    step = h1 - h0
    return OperatorPath(
        "linear",
        _value=lambda t: h0 + float(t) * step,
        _derivative=lambda t: step,
    )


def cayley_path(H: Operator) -> OperatorPath:
    """``t -> (iI - tH)(iI + tH)^{-1}`` for self-adjoint ``H``.

    A path of unitaries from ``I`` to the characteristic value at
    ``t = 1``; the derivative is ``-2i H (iI + tH)^{-2}``.
    """

    def val(t: float) -> Operator:
        denom_inv = inverse(float(t) * H + _i_identity(H))
        return ((-float(t)) * H + _i_identity(H)) @ denom_inv

    def der(t: float) -> Operator:
        denom_inv = inverse(float(t) * H + _i_identity(H))
        return (-2j) * (H @ denom_inv @ denom_inv)

    return OperatorPath("cayley_scaled", _value=val, _derivative=der)


def _i_identity(X: Operator) -> Operator:
    return identity(X.algebra) * 1j


def functional_path(
    value: Callable[[float], Operator],
    derivative: Callable[[float], Operator],
    kind: str = "functional",
) -> OperatorPath:
    return OperatorPath(kind, _value=value, _derivative=derivative)


def product_path(p: OperatorPath, q: OperatorPath) -> OperatorPath:
    """Pointwise product ``t -> p(t) q(t)`` with the product-rule
    derivative; both factors must have analytic derivatives."""

    def val(t: float) -> Operator:
        return p.value(t) @ q.value(t)

    def der(t: float) -> Operator:
        return p.derivative(t) @ q.value(t) + p.value(t) @ q.derivative(t)

    return OperatorPath("product", _value=val, _derivative=der)


def concat_paths(p: OperatorPath, q: OperatorPath) -> OperatorPath:
    return OperatorPath("concat", legs=(p, q))


def sampled_path(samples: Sequence[tuple[float, Operator]]) -> OperatorPath:
    """Path given by ``(t, H_t)`` samples; strictly increasing ``t`` with
    0 and 1 present, at least 33 nodes."""
    rows = tuple((float(t), op) for t, op in samples)
    if len(rows) < MIN_SAMPLES:
        raise DomainError(f"sampled path needs at least {MIN_SAMPLES} samples")
    ts = [t for t, _ in rows]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise DomainError("sample parameters must be strictly increasing")
    if abs(ts[0]) > 1e-12 or abs(ts[-1] - 1.0) > 1e-12:
        raise DomainError("samples must start at t=0 and end at t=1")
    return OperatorPath("sampled", samples=rows)


def two_leg_dissipative_path(M: Operator) -> OperatorPath:
    """In-class fallback from ``I`` to a dissipative invertible ``M``
    through ``i ||M|| I``; both legs stay dissipative and nonsingular."""
    mid = identity(M.algebra) * (1j * max(norm(M), 1.0))
    return concat_paths(linear_path(identity(M.algebra), mid), linear_path(mid, M))


@dataclass(frozen=True)
class PathDeterminant:
    """Path determinant with its accumulated logarithm.

    ``winding`` is the imaginary part of ``log_value`` (continuously
    accumulated phase, not reduced mod 2pi).
    """

    value: complex
    log_value: complex
    error_estimate: float
    nodes: int
    flags: tuple[str, ...] = ()

    @property
    def winding(self) -> float:
        return float(np.imag(self.log_value))


def _node_integrand(path: OperatorPath, cond_limit: float) -> Callable[[float], np.ndarray]:
    def f(t: float) -> np.ndarray:
        H = path.value(t)
        cond = condition_number(H)
        if not np.isfinite(cond) or cond > cond_limit:
            raise PathError(f"path is singular at t = {t:.6f} (cond {cond:.3e})", t=t)
        return np.asarray(complex(trace(path.derivative(t) @ inverse(H, cond_limit))))

    return f


def _central_derivatives(ts: list[float], ops: list[Operator]) -> list[Operator]:
    """Three-point finite differences, one-sided at the ends."""
    n = len(ts)
    out: list[Operator] = []
    for k in range(n):
        if k == 0:
            i0, i1, i2 = 0, 1, 2
        elif k == n - 1:
            i0, i1, i2 = n - 3, n - 2, n - 1
        else:
            i0, i1, i2 = k - 1, k, k + 1
        t0, t1, t2 = ts[i0], ts[i1], ts[i2]
        tk = ts[k]
        # derivative of the quadratic through the three nodes, at tk
        w0 = (2 * tk - t1 - t2) / ((t0 - t1) * (t0 - t2))
        w1 = (2 * tk - t0 - t2) / ((t1 - t0) * (t1 - t2))
        w2 = (2 * tk - t0 - t1) / ((t2 - t0) * (t2 - t1))
        out.append(w0 * ops[i0] + w1 * ops[i1] + w2 * ops[i2])
    return out


def _sampled_determinant(path: OperatorPath, cond_limit: float) -> PathDeterminant:
    ts = [t for t, _ in path.samples]
    ops = [op for _, op in path.samples]
    for t, op in path.samples:
        cond = condition_number(op)
        if not np.isfinite(cond) or cond > cond_limit:
            raise PathError(f"path is singular at t = {t:.6f} (cond {cond:.3e})", t=t)
    ders = _central_derivatives(ts, ops)
    vals = np.array(
        [complex(trace(d @ inverse(op, cond_limit))) for d, op in zip(ders, ops)]
    )
    total = np.trapezoid(vals, np.array(ts))
    # second differences of the integrand are an h^2-scale error
    # heuristic: both the difference stencil and the trapezoid rule are
    # second order in the spacing
    hmax = max(b - a for a, b in zip(ts, ts[1:]))
    curvature = float(np.max(np.abs(np.diff(vals, 2)))) if len(vals) > 2 else 0.0
    err = max(curvature, hmax**2)
    return PathDeterminant(
        value=complex(np.exp(total)),
        log_value=complex(total),
        error_estimate=float(err),
        nodes=len(ts),
        flags=("sampled",),
    )


def path_determinant(
    path: OperatorPath,
    tol: float = DEFAULT_QUAD_TOL,
    cond_limit: float = COND_LIMIT,
) -> PathDeterminant:
    """Evaluate the path determinant with full bookkeeping."""
    if path.kind == "sampled":
        return _sampled_determinant(path, cond_limit)
    if path.kind == "concat":
        first = path_determinant(path.legs[0], tol / 2, cond_limit)
        second = path_determinant(path.legs[1], tol / 2, cond_limit)
        return PathDeterminant(
            value=complex(np.exp(first.log_value + second.log_value)),
            log_value=first.log_value + second.log_value,
            error_estimate=first.error_estimate + second.error_estimate,
            nodes=first.nodes + second.nodes,
            flags=tuple(dict.fromkeys(first.flags + second.flags + ("concat",))),
        )
    f = _node_integrand(path, cond_limit)
    total, err, panels = adaptive_gauss(f, 0.0, 1.0, tol, norm=lambda v: float(np.abs(v)))
    log_value = complex(total)
    return PathDeterminant(
        value=complex(np.exp(log_value)),
        log_value=log_value,
        error_estimate=float(err),
        nodes=panels,
        flags=(path.kind,),
    )


def dlhs_det_path(path: OperatorPath, tol: float = DEFAULT_QUAD_TOL) -> complex:
    """Path determinant value (see :func:`path_determinant` for the
    winding and error bookkeeping)."""
    return path_determinant(path, tol).value


def fk_det(A: Operator, cond_limit: float = COND_LIMIT) -> float:
    """Positive determinant ``exp(tau[log |A|])`` of an invertible ``A``.

    Computed as ``exp(0.5 tau[log(A* A)])`` through the eigenvalues of
    the positive operator ``A* A``.
    """
    cond = condition_number(A)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DomainError(f"determinant of a singular operator (cond {cond:.3e})")
    acc = 0.0
    for (_, w), b in zip(A.algebra.blocks, A.blocks):
        gram = b.conj().T @ b
        vals = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
        acc += w * 0.5 * float(np.sum(np.log(vals)))
    return float(np.exp(acc))


def det_tau_dissipative(M: Operator) -> complex:
    """Determinant of a dissipative invertible ``M`` in the IM_CUT
    branch: ``exp(tau[log M])``."""
    return complex(np.exp(trace(log_op(M, IM_CUT))))


def det_tau_unitary(U: Operator, unitary_tol: float = 1e-9) -> complex:
    """Determinant of a unitary in the RE_CUT branch; modulus one."""
    defect = max(
        float(np.linalg.norm(b.conj().T @ b - np.eye(b.shape[0]), 2)) for b in U.blocks
    )
    if defect > unitary_tol:
        raise DomainError(f"operator is not unitary (defect {defect:.3e})")
    return complex(np.exp(trace(log_op(U, RE_CUT))))


def det_tau_via_path(
    M: Operator, tol: float = DEFAULT_QUAD_TOL
) -> PathDeterminant:
    """Path route to ``det_tau_dissipative``: straight path from ``I``
    when it stays nonsingular, otherwise the flagged two-leg fallback.

    The straight path ``(1-t)I + tM`` hits a singular node exactly when
    ``M`` has spectrum on the closed negative real axis, which is
    decidable upfront.
    """
    eigs = np.concatenate([np.linalg.eigvals(b) for b in M.blocks])
    needs_detour = bool(
        np.any((np.abs(eigs.imag) <= 1e-9 * np.abs(eigs)) & (eigs.real <= 1e-12))
    )
    if not needs_detour:
        try:
            return path_determinant(linear_path(identity(M.algebra), M), tol)
        except PathError:
            needs_detour = True
    result = path_determinant(two_leg_dissipative_path(M), tol)
    return PathDeterminant(
        value=result.value,
        log_value=result.log_value,
        error_estimate=result.error_estimate,
        nodes=result.nodes,
        flags=tuple(dict.fromkeys(result.flags + ("two_leg_fallback",))),
    )


def polar_identity_check(
    M: Operator,
    tol: float = 1e-8,
    inputs: dict | None = None,
) -> VerificationReport:
    """Check ``det_tau(M) = exp(i pi tau[Xi(M)]) fk_det(M)``."""
    lhs = det_tau_dissipative(M)
    xi_val = xi_trace(M, XiStrategy(XiTag.INVERTIBLE_LOG))
    modulus = fk_det(M)
    rhs = complex(np.exp(1j * np.pi * xi_val) * modulus)
    meta = dict(inputs or {})
    meta.setdefault("operator", operator_digest(M))
    return check_report(
        "polar-identity",
        "det_tau(M) == exp(i*pi*tau[Xi(M)]) * fk_det(M)",
        lhs,
        rhs,
        tol,
        inputs=meta,
        details={"xi_trace": xi_val, "fk_det": modulus},
    )
