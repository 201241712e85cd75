"""Relative index for pairs of dissipative operators.

The central object is the negative-part operator of a dissipative ``M``:

    Xi(M) = (1/pi) Im log M                    (invertible case, IM_CUT)
    Xi(H) = E_H((-inf,0)) + (1/2) E_H({0})     (self-adjoint case)

with the epsilon regularization ``Xi(M) = lim Xi(M + i eps I)`` covering
the rest.  ``Xi`` is always a self-adjoint contraction, ``0 <= Xi <= I``.
The relative index of a pair is the trace difference

    xi(M, N) = tau[Xi(N)] - tau[Xi(M)],

a real number in ``[-1, 1]``.  For self-adjoint pairs it splits into a
continuous part (negative spectral mass moved across zero) and a kernel
part weighted one half, and the map ``lam -> xi(H - lam, H0 - lam)`` is
a spectral shift curve.

Three evaluation strategies mirror the three formulas above; the
auto-selection prefers the spectral route, then the logarithm, then the
epsilon limit.  Epsilon histories of the traces are extrapolated with a
Neville table in the schedule (Richardson), since trace-level scalars
are what the index consumes; operator-level epsilon iterates are
returned as the last Cauchy iterate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    COND_LIMIT,
    DISSIPATIVE_TOL,
    SELF_ADJOINT_TOL,
    Operator,
    condition_number,
    dissipativity_defect,
    eigenvalues_self_adjoint,
    im_part,
    is_self_adjoint,
    norm,
    spectral,
    trace,
)
from .errors import DomainError, NumericError
from .oplog import IM_CUT, log_op

KERNEL_SCALE = 1e-8
RANGE_TOL = 1e-9


class XiTag(enum.Enum):
    INVERTIBLE_LOG = "invertible_log"
    SELF_ADJOINT_SPECTRAL = "self_adjoint_spectral"
    EPS_LIMIT = "eps_limit"


@dataclass(frozen=True)
class EpsSchedule:
    """Decreasing epsilon values with an extrapolation policy.

    ``extrapolation`` is ``"richardson"`` (Neville table at eps -> 0,
    applied to trace-level scalars) or ``"none"`` (last iterate).  The
    stall tolerance drives the divergence check on the raw history: the
    tail of successive differences must either drop below it or keep
    decreasing.
    """

    values: tuple[float, ...]
    extrapolation: str = "richardson"
    stall_tolerance: float = 1e-7

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 3:
            raise DomainError("epsilon schedule needs at least 3 values")
        if any(v <= 0 for v in vals):
            raise DomainError("epsilon values must be positive")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise DomainError("epsilon values must be strictly decreasing")
        if self.extrapolation not in ("richardson", "none"):
            raise DomainError(f"unknown extrapolation {self.extrapolation!r}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def default(cls) -> "EpsSchedule":
        return cls(tuple(1e-2 * 2.0 ** (-k) for k in range(13)))

    @classmethod
    def geometric(cls, start: float, factor: float, steps: int, **kw) -> "EpsSchedule":
        if factor <= 1.0:
            raise DomainError("epsilon factor must exceed 1")
        return cls(tuple(start / factor**k for k in range(steps)), **kw)


@dataclass(frozen=True)
class XiStrategy:
    tag: XiTag
    schedule: EpsSchedule | None = None

    def resolved_schedule(self) -> EpsSchedule:
        return self.schedule if self.schedule is not None else EpsSchedule.default()


def auto_strategy(
    M: Operator,
    sa_tol: float = SELF_ADJOINT_TOL,
    cond_limit: float = COND_LIMIT,
    schedule: EpsSchedule | None = None,
) -> XiStrategy:
    """Pick the preferred applicable strategy for ``M``."""
    if is_self_adjoint(M, sa_tol):
        return XiStrategy(XiTag.SELF_ADJOINT_SPECTRAL)
    cond = condition_number(M)
    if np.isfinite(cond) and cond <= cond_limit:
        return XiStrategy(XiTag.INVERTIBLE_LOG)
    return XiStrategy(XiTag.EPS_LIMIT, schedule)


# -- extrapolation ------------------------------------------------------


def neville_limit(
    eps: Sequence[float], values: Sequence[float], max_points: int = 6
) -> tuple[float, float]:
    """Polynomial extrapolation of ``values(eps)`` to ``eps = 0``.

    Uses the tail of the history (the smallest epsilons).  Returns the
    extrapolated value and a two-column agreement estimate of its error.
    """
    e = [float(x) for x in eps][-max_points:]
    f = [float(x) for x in values][-max_points:]
    n = len(e)
    if n < 2:
        return f[-1], float("inf")
    col = list(f)
    best = f[-1]
    best_est = abs(f[-1] - f[-2])
    for j in range(1, n):
        nxt = []
        for k in range(n - j):
            denom = e[k] - e[k + j]
            nxt.append((e[k] * col[k + 1] - e[k + j] * col[k]) / denom)
        est = abs(nxt[-1] - col[-1])
        if est <= best_est:
            best = nxt[-1]
            best_est = est
        col = nxt
    return best, best_est


def _stall_check_diffs(
    diffs: Sequence[float], stall_tol: float, label: str, history: Sequence[float]
) -> None:
    """Divergence guard on the successive differences of an epsilon
    history.

    Accepts when the tail of differences has dropped below the stall
    tolerance or is still shrinking; anything that plateaus or grows
    while large raises with the full history attached.
    """
    if not diffs:
        return
    tail = list(diffs[-3:])
    if min(tail) <= stall_tol:
        return
    shrinking = all(b <= a * 1.05 for a, b in zip(tail, tail[1:]))
    if not shrinking:
        raise NumericError(
            f"epsilon limit of {label} stalled above {stall_tol:g} "
            f"(last differences {tail})",
            history=list(history),
        )


def _stall_check(history: Sequence[float], stall_tol: float, label: str) -> None:
    diffs = [abs(b - a) for a, b in zip(history, history[1:])]
    _stall_check_diffs(diffs, stall_tol, label, history)


# -- Xi operator --------------------------------------------------------


def _gate_dissipative(M: Operator, tol: float) -> None:
    defect = dissipativity_defect(M)
    if defect > tol * max(1.0, norm(M)):
        raise DomainError(f"operator is not dissipative (defect {defect:.3e})")


def _xi_spectral(M: Operator) -> Operator:
    dec = spectral(M)
    ktol = KERNEL_SCALE * norm(M)
    neg = dec.projection_where(lambda lam: lam < -ktol)
    ker = dec.projection_where(lambda lam: abs(lam) <= ktol)
    return neg + 0.5 * ker


def _xi_log(M: Operator) -> Operator:
    return (1.0 / np.pi) * im_part(log_op(M, IM_CUT))


def _range_check(X: Operator) -> Operator:
    vals = eigenvalues_self_adjoint(X)
    lo, hi = float(vals[0]), float(vals[-1])
    if lo < -RANGE_TOL or hi > 1.0 + RANGE_TOL:
        raise NumericError(
            f"negative-part operator left [0, 1] (range [{lo:.3e}, {hi:.3e}])",
            history=[lo, hi],
        )
    return X


def xi_operator(
    M: Operator,
    strategy: XiStrategy | None = None,
    dissipative_tol: float = DISSIPATIVE_TOL,
) -> Operator:
    """The negative-part operator ``Xi(M)`` of a dissipative ``M``.

    Self-adjoint contraction with spectrum in ``[0, 1]``.
    """
    _gate_dissipative(M, dissipative_tol)
    if strategy is None:
        strategy = auto_strategy(M)
    if strategy.tag is XiTag.SELF_ADJOINT_SPECTRAL:
        if not is_self_adjoint(M):
            raise DomainError("spectral strategy needs a self-adjoint operator")
        return _range_check(_xi_spectral(M))
    if strategy.tag is XiTag.INVERTIBLE_LOG:
        return _range_check(_xi_log(M))
    # epsilon limit, operator level: last Cauchy iterate
    sched = strategy.resolved_schedule()
    prev = None
    diffs: list[float] = []
    last = None
    for eps in sched.values:
        cur = _xi_log(M.shift(1j * eps))
        if prev is not None:
            diffs.append(norm(cur - prev))
        prev = cur
        last = cur
    _stall_check_diffs(diffs, sched.stall_tolerance, "Xi(M + i eps)", diffs)
    return _range_check(last)


def xi_trace(
    M: Operator,
    strategy: XiStrategy | None = None,
    dissipative_tol: float = DISSIPATIVE_TOL,
) -> float:
    """``tau[Xi(M)]``, the weighted negative mass of ``M``.

    For the epsilon strategy the trace history is extrapolated to
    ``eps = 0`` (this is the quantity the relative index consumes, and
    scalar traces converge fastest).
    """
    _gate_dissipative(M, dissipative_tol)
    if strategy is None:
        strategy = auto_strategy(M)
    if strategy.tag is not XiTag.EPS_LIMIT:
        value = trace(xi_operator(M, strategy, dissipative_tol))
        return float(np.real(value))
    sched = strategy.resolved_schedule()
    history = [
        float(np.imag(trace(log_op(M.shift(1j * eps), IM_CUT)))) / np.pi
        for eps in sched.values
    ]
    _stall_check(history, sched.stall_tolerance, "tau[Xi(M + i eps)]")
    if sched.extrapolation == "none":
        return history[-1]
    limit, _est = neville_limit(sched.values, history)
    return limit


def xi_eps_history(M: Operator, sched: EpsSchedule) -> list[float]:
    """Raw trace history ``tau[Xi(M + i eps)]`` along a schedule."""
    return [
        float(np.imag(trace(log_op(M.shift(1j * eps), IM_CUT)))) / np.pi
        for eps in sched.values
    ]


def eps_operator_limit(
    f: Callable[[float], Operator], sched: EpsSchedule, label: str
) -> Operator:
    """Norm-limit of an operator-valued epsilon family.

    Runs the schedule, gates the successive differences with the same
    Cauchy stall check used for trace histories, and returns the last
    iterate.
    """
    prev = None
    last = None
    diffs: list[float] = []
    for eps in sched.values:
        cur = f(eps)
        if prev is not None:
            diffs.append(norm(cur - prev))
        prev = cur
        last = cur
    _stall_check_diffs(diffs, sched.stall_tolerance, label, diffs)
    return last


# -- indices ------------------------------------------------------------


def xi_index(
    M: Operator,
    N: Operator,
    strategy_m: XiStrategy | None = None,
    strategy_n: XiStrategy | None = None,
    dissipative_tol: float = DISSIPATIVE_TOL,
) -> float:
    """Relative index ``xi(M, N) = tau[Xi(N)] - tau[Xi(M)]``.

    Antisymmetric under swapping the pair by construction.  Strategies
    are chosen per operand when not forced.
    """
    tn = xi_trace(N, strategy_n, dissipative_tol)
    tm = xi_trace(M, strategy_m, dissipative_tol)
    value = tn - tm
    if abs(value) > 1.0 + RANGE_TOL:
        raise NumericError(f"relative index {value!r} left [-1, 1]")
    return value


def tau_fredholm_index(P: Operator, Q: Operator, proj_tol: float = 1e-9) -> float:
    """Trace index ``tau(P - Q)`` of a pair of projections."""
    for name, X in (("first", P), ("second", Q)):
        idem = norm(X @ X - X)
        sa = norm(X - X.H)
        if idem > proj_tol or sa > proj_tol:
            raise DomainError(
                f"{name} argument is not a projection "
                f"(idempotency defect {idem:.3e}, adjoint defect {sa:.3e})"
            )
    return float(np.real(trace(P) - trace(Q)))


def kernel_projections(H: Operator) -> tuple[Operator, Operator]:
    """Strictly-negative and kernel spectral projections of ``H``."""
    dec = spectral(H)
    ktol = KERNEL_SCALE * norm(H)
    neg = dec.projection_where(lambda lam: lam < -ktol)
    ker = dec.projection_where(lambda lam: abs(lam) <= ktol)
    return neg, ker


def xi_selfadjoint_split(H: Operator, H0: Operator) -> tuple[float, float, float]:
    """Split of ``xi(H, H0)`` for a self-adjoint pair.

    Returns ``(continuous, kernel, total)`` where the continuous part is
    the trace index of the strictly-negative spectral projections, the
    kernel part is half the trace index of the kernel projections, and
    ``total = xi_index(H, H0)`` up to rounding.
    """
    for X in (H, H0):
        if not is_self_adjoint(X):
            raise DomainError("split needs self-adjoint operators")
    neg_h, ker_h = kernel_projections(H)
    neg_h0, ker_h0 = kernel_projections(H0)
    continuous = tau_fredholm_index(neg_h0, neg_h)
    kernel = 0.5 * tau_fredholm_index(ker_h0, ker_h)
    return continuous, kernel, continuous + kernel


def morse_index(H: Operator) -> float:
    """Weighted dimension of the negative subspace of an invertible
    self-adjoint ``H``; equals ``tau[Xi(H)]``."""
    vals = eigenvalues_self_adjoint(H)
    ktol = KERNEL_SCALE * float(np.max(np.abs(vals))) if len(vals) else 0.0
    if len(vals) and float(np.min(np.abs(vals))) <= ktol:
        raise DomainError("morse index needs an invertible operator")
    return xi_trace(H, XiStrategy(XiTag.SELF_ADJOINT_SPECTRAL))


def ssf_curve(
    H: Operator, H0: Operator, grid: Sequence[float]
) -> list[tuple[float, float]]:
    """Spectral shift curve ``lam -> xi(H - lam, H0 - lam)``.

    Both operators must be self-adjoint; every point uses the spectral
    strategy, so eigenvalue crossings contribute half weights exactly at
    grid points that hit them.
    """
    for X in (H, H0):
        if not is_self_adjoint(X):
            raise DomainError("spectral shift curve needs self-adjoint operators")
    out = []
    for lam in grid:
        lam = float(lam)
        val = xi_index(
            H.shift(-lam),
            H0.shift(-lam),
            XiStrategy(XiTag.SELF_ADJOINT_SPECTRAL),
            XiStrategy(XiTag.SELF_ADJOINT_SPECTRAL),
        )
        out.append((lam, val))
    return out


def kernel_diagnostics(H: Operator) -> dict:
    """Kernel weight and near-threshold eigenvalues of a self-adjoint
    operator; feeds report warnings."""
    vals = eigenvalues_self_adjoint(H)
    scale = float(np.max(np.abs(vals))) if len(vals) else 0.0
    ktol = KERNEL_SCALE * scale
    kernel = [float(v) for v in vals if abs(v) <= ktol]
    near = [float(v) for v in vals if ktol < abs(v) <= 100 * ktol]
    return {"kernel_tol": ktol, "kernel_eigenvalues": kernel, "near_threshold": near}
