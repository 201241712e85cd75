"""Schur complements of a coupled dissipative pair and the index
identities they satisfy.

A pair of dissipative operators M, N coupled by a factor K sits inside
the block operator

    MM(z) = [[M + zI, K*], [K, N + zI]]

whose diagonal Schur complements

    Ms(z) = M + zI - K*(N + zI)^{-1}K
    Ns(z) = N + zI - K(M + zI)^{-1}K*

carry the same relative-index data as the pair itself.  The central
identity verified here is

    xi(M, M - K*N^{-1}K) = xi(N, N - K M^{-1}K*)

in its invertible form (`verify_bs`), its regularized limit forms
(`bs_limit`), the block-trace corollary that proves it
(`block_corollary`), and the self-adjoint spectral-counting
specialization (`sa_specialization`).

Sign convention: the perturbed operator is always H = H0 - K*N^{-1}K,
and every report records this under ``details["sign_convention"]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import (
    COND_LIMIT,
    DISSIPATIVE_TOL,
    AlgebraDescriptor,
    Operator,
    block2,
    bottom_corner,
    condition_number,
    dissipativity_defect,
    identity,
    inverse,
    is_self_adjoint,
    norm,
    psd_sqrt,
    spectral,
    tau2,
    top_corner,
    trace,
)
from .errors import DomainError, StructuralError
from .oplog import IM_CUT, log_op
from .reports import VerificationReport, check_report, linked_report, operator_digest
from .xi import (
    KERNEL_SCALE,
    EpsSchedule,
    XiStrategy,
    XiTag,
    _stall_check,
    eps_operator_limit,
    neville_limit,
    tau_fredholm_index,
    xi_index,
    xi_operator,
    xi_trace,
)

SIGN_CONVENTION = "H = H0 - K*N^{-1}K"

# ensemble-facing default; individual reports can tighten it
BS_TOL = 1e-8
LIMIT_TOL = 1e-6
CORNER_TOL = 1e-9


@dataclass(frozen=True)
class BSInstance:
    """A dissipative pair coupled by an off-diagonal factor.

    ``m`` and ``n`` must be dissipative; ``k`` is unrestricted.  All
    three live on the same algebra.
    """

    m: Operator
    n: Operator
    k: Operator

    def __post_init__(self) -> None:
        if not (self.m.algebra == self.n.algebra == self.k.algebra):
            raise StructuralError("instance operators live on different algebras")
        for label, op in (("M", self.m), ("N", self.n)):
            defect = dissipativity_defect(op)
            if defect > DISSIPATIVE_TOL * max(1.0, norm(op)):
                raise DomainError(
                    f"{label} is not dissipative (defect {defect:.3e})"
                )

    @property
    def algebra(self) -> AlgebraDescriptor:
        return self.m.algebra

    def digest(self) -> dict:
        return {
            "algebra": self.algebra.spec_string(),
            "M": operator_digest(self.m),
            "N": operator_digest(self.n),
            "K": operator_digest(self.k),
        }

    def block_matrix(self, z: complex = 0.0) -> Operator:
        """``[[M, K*], [K, N]] + zI`` in the amplified algebra."""
        return block2(self.m, self.k, self.n).shift(z)

    def swapped(self) -> "BSInstance":
        """The instance seen through the block-swap unitary: M and N
        trade places and K becomes K*."""
        return BSInstance(m=self.n, n=self.m, k=self.k.H)


def _gate_invertible(label: str, op: Operator) -> float:
    cond = condition_number(op)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DomainError(f"{label} is singular (condition estimate {cond:.3e})")
    return cond


def schur_complements(
    inst: BSInstance, z: complex = 0.0, check: bool = False
) -> tuple[Operator, Operator]:
    """Both diagonal Schur complements of the block operator at ``z``.

    With ``check=True`` the result is verified against explicit block
    inversion: the corners of MM(z)^{-1} must equal the inverted
    complements within 1e-9.
    """
    zc = complex(z)
    m_z = inst.m.shift(zc)
    n_z = inst.n.shift(zc)
    _gate_invertible("M + zI", m_z)
    _gate_invertible("N + zI", n_z)
    ms = m_z - inst.k.H @ inverse(n_z) @ inst.k
    ns = n_z - inst.k @ inverse(m_z) @ inst.k.H
    if check:
        big_inv = inverse(inst.block_matrix(zc))
        scale = max(norm(big_inv), 1.0)
        r_top = norm(top_corner(big_inv) - inverse(ms))
        r_bot = norm(bottom_corner(big_inv) - inverse(ns))
        if max(r_top, r_bot) > CORNER_TOL * scale:
            raise DomainError(
                "Schur complements disagree with block inversion "
                f"(residuals {r_top:.3e}, {r_bot:.3e})"
            )
    return ms, ns


def verify_bs(inst: BSInstance, tol: float = BS_TOL) -> VerificationReport:
    """Check xi(M, M - K*N^{-1}K) == xi(N, N - K M^{-1}K*).

    Needs M and N invertible.  The two z=0 complements are then either
    both invertible or both singular; if the condition estimates
    disagree about that, the report fails with a warning instead of
    raising, since the discrepancy itself falsifies the statement being
    tested.
    """
    _gate_invertible("M", inst.m)
    _gate_invertible("N", inst.n)
    ms, ns = schur_complements(inst, 0.0)
    ok_m = condition_number(ms) <= COND_LIMIT
    ok_n = condition_number(ns) <= COND_LIMIT
    details = {"sign_convention": SIGN_CONVENTION}
    if ok_m != ok_n:
        bad = "M - K*N^{-1}K" if not ok_m else "N - K M^{-1}K*"
        return check_report(
            "birman-schwinger",
            "xi(M, M - K*N^{-1}K) == xi(N, N - K M^{-1}K*)",
            float("nan"),
            float("nan"),
            tol,
            inputs=inst.digest(),
            warnings=(
                f"complement invertibility discrepancy: {bad} is singular "
                "while its partner is not",
            ),
            details=details,
        )
    if not ok_m:
        raise DomainError("both Schur complements are singular at z = 0")
    lhs = xi_index(inst.m, ms)
    rhs = xi_index(inst.n, ns)
    return check_report(
        "birman-schwinger",
        "xi(M, M - K*N^{-1}K) == xi(N, N - K M^{-1}K*)",
        lhs,
        rhs,
        tol,
        inputs=inst.digest(),
        details=details,
    )


class BSLimitMode(enum.Enum):
    """Which regularized variant of the index identity to test."""

    BOTH_REGULARIZED = "both_regularized"
    N_INVERTIBLE = "n_invertible"
    BOUNDARY = "boundary"


def _extrapolate(
    sched: EpsSchedule, history: Sequence[float], label: str
) -> float:
    _stall_check(history, sched.stall_tolerance, label)
    if sched.extrapolation == "none":
        return history[-1]
    limit, _est = neville_limit(sched.values, history)
    return limit


def bs_limit(
    inst: BSInstance,
    sched: EpsSchedule | None = None,
    mode: BSLimitMode = BSLimitMode.BOTH_REGULARIZED,
    tol: float = LIMIT_TOL,
) -> VerificationReport:
    """The index identity in one of its three limit forms.

    BOTH_REGULARIZED shifts every operator by i*eps and compares the
    two extrapolated sides.  N_INVERTIBLE keeps the left side exact and
    regularizes only M inside the right complement.  BOUNDARY replaces
    the limit by the boundary value K (M + i0)^{-1} K* (pseudoinverse
    route for self-adjoint M, operator extrapolation otherwise).
    """
    sched = sched if sched is not None else EpsSchedule.default()
    log = XiStrategy(XiTag.INVERTIBLE_LOG)
    details: dict = {
        "sign_convention": SIGN_CONVENTION,
        "mode": mode.value,
        "eps": list(sched.values),
    }
    warnings: list[str] = []
    k, kh = inst.k, inst.k.H

    if mode is BSLimitMode.BOTH_REGULARIZED:
        hist_l: list[float] = []
        hist_r: list[float] = []
        for eps in sched.values:
            m_e = inst.m.shift(1j * eps)
            n_e = inst.n.shift(1j * eps)
            hist_l.append(xi_index(m_e, m_e - kh @ inverse(n_e) @ k, log, log))
            hist_r.append(xi_index(n_e, n_e - k @ inverse(m_e) @ kh, log, log))
        lhs = _extrapolate(sched, hist_l, "xi(M + i eps, Ms(i eps))")
        rhs = _extrapolate(sched, hist_r, "xi(N + i eps, Ns(i eps))")
        details["history_lhs"] = hist_l
        details["history_rhs"] = hist_r
        statement = (
            "lim xi(M + i eps, (M + i eps) - K*(N + i eps)^{-1}K) == "
            "lim xi(N + i eps, (N + i eps) - K(M + i eps)^{-1}K*)"
        )
    elif mode is BSLimitMode.N_INVERTIBLE:
        _gate_invertible("N", inst.n)
        ms = inst.m - kh @ inverse(inst.n) @ k
        lhs = xi_index(inst.m, ms)
        hist_r = [
            xi_index(inst.n, inst.n - k @ inverse(inst.m.shift(1j * eps)) @ kh)
            for eps in sched.values
        ]
        rhs = _extrapolate(sched, hist_r, "xi(N, N - K(M + i eps)^{-1}K*)")
        details["history_rhs"] = hist_r
        statement = (
            "xi(M, M - K*N^{-1}K) == lim xi(N, N - K(M + i eps)^{-1}K*)"
        )
    elif mode is BSLimitMode.BOUNDARY:
        _gate_invertible("N", inst.n)
        ms = inst.m - kh @ inverse(inst.n) @ k
        lhs = xi_index(inst.m, ms)
        if is_self_adjoint(inst.m):
            from .scattering import boundary_resolvent

            b0 = boundary_resolvent(inst.m, k, sched)
            details["boundary_route"] = "pseudoinverse"
        else:
            b0 = eps_operator_limit(
                lambda eps: k @ inverse(inst.m.shift(1j * eps)) @ kh,
                sched,
                "K (M + i eps)^{-1} K*",
            )
            details["boundary_route"] = "operator extrapolation"
        ns0 = inst.n - b0
        _gate_invertible("N - K(M + i0)^{-1}K*", ns0)
        rhs = xi_index(inst.n, ns0)
        statement = "xi(M, M - K*N^{-1}K) == xi(N, N - K(M + i0)^{-1}K*)"
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown mode {mode!r}")

    return check_report(
        "birman-schwinger-limit",
        statement,
        lhs,
        rhs,
        tol,
        inputs=inst.digest(),
        warnings=warnings,
        details=details,
    )


def block_corollary(inst: BSInstance, tol: float = BS_TOL) -> VerificationReport:
    """Trace identities splitting the negative mass of the block
    operator across its corners.

    With MM = [[M, K*], [K, N]], U = (I; 0) and W = (0; I), checks

        2 tau2[Xi(MM)] == tau[Xi((W* MM^{-1} W)^{-1})] + tau[Xi(U* MM U)]
        2 tau2[Xi(MM)] == tau[Xi((U* MM^{-1} U)^{-1})] + tau[Xi(W* MM W)]

    each in its compressed form and its closed Schur-complement form,
    plus the inversion step behind them,
    U* MM^{-1} U == (M - K*N^{-1}K)^{-1}.
    """
    _gate_invertible("M", inst.m)
    _gate_invertible("N", inst.n)
    big = inst.block_matrix(0.0)
    _gate_invertible("[[M, K*], [K, N]]", big)
    ms, ns = schur_complements(inst, 0.0)
    _gate_invertible("M - K*N^{-1}K", ms)
    _gate_invertible("N - K M^{-1}K*", ns)

    big_inv = inverse(big)
    both = 2.0 * float(np.real(tau2(xi_operator(big))))
    xi_m = xi_trace(inst.m)
    xi_n = xi_trace(inst.n)
    papa_closed = xi_trace(ns) + xi_m
    mama_closed = xi_trace(ms) + xi_n
    papa_compressed = xi_trace(inverse(bottom_corner(big_inv))) + xi_m
    mama_compressed = xi_trace(inverse(top_corner(big_inv))) + xi_n

    corner_residual = norm(top_corner(big_inv) - inverse(ms)) / max(
        1.0, norm(inverse(ms))
    )
    links = [
        ("papa-compressed", both, papa_compressed),
        ("papa-schur", both, papa_closed),
        ("mama-compressed", both, mama_compressed),
        ("mama-schur", both, mama_closed),
        ("corner-inverse", corner_residual, 0.0),
    ]
    return linked_report(
        "block-corollary",
        "2 tau2[Xi(MM)] splits across each corner and its Schur complement",
        links,
        tol,
        inputs=inst.digest(),
        details={"sign_convention": SIGN_CONVENTION},
    )


def sa_specialization(
    H0: Operator,
    K: Operator,
    N: Operator,
    tol: float = 1e-10,
) -> VerificationReport:
    """Self-adjoint spectral-counting form of the index identity.

    Checks

        index_tau(E_{H0}(R-), E_H(R-)) ==
            index_tau(E_N(R-), E_{N - K H0^{-1} K*}(R-))

    for H = H0 - K*N^{-1}K, via spectral projections.  When moreover
    H0 > 0 and N = I (so V = K*K >= 0), also checks the counting form

        dim_tau E_{H0 - V}(R-) == dim_tau E_{V^{1/2} H0^{-1} V^{1/2}}((1, inf))

    by weighted eigenvalue counts.
    """
    for label, op in (("H0", H0), ("N", N)):
        if not is_self_adjoint(op):
            raise DomainError(f"{label} must be self-adjoint")
    _gate_invertible("H0", H0)
    _gate_invertible("N", N)
    h = H0 - K.H @ inverse(N) @ K
    ns = N - K @ inverse(H0) @ K.H
    _gate_invertible("H0 - K*N^{-1}K", h)
    _gate_invertible("N - K H0^{-1}K*", ns)

    def neg_projection(op: Operator) -> Operator:
        ktol = KERNEL_SCALE * max(1.0, norm(op))
        return spectral(op).projection_where(lambda lam: lam < -ktol)

    lhs = tau_fredholm_index(neg_projection(H0), neg_projection(h))
    rhs = tau_fredholm_index(neg_projection(N), neg_projection(ns))
    links = [("index", lhs, rhs)]
    details: dict = {"sign_convention": SIGN_CONVENTION}

    eye = identity(H0.algebra)
    h0_positive = float(
        np.min([np.min(np.linalg.eigvalsh(b)) for b in H0.blocks])
    ) > KERNEL_SCALE * max(1.0, norm(H0))
    n_is_identity = norm(N - eye) <= 1e-12 * max(1.0, norm(N))
    if h0_positive and n_is_identity:
        v = K.H @ K
        root = psd_sqrt(v)
        bs_op = root @ inverse(H0) @ root
        ktol = KERNEL_SCALE * max(1.0, norm(h))
        w_neg = 0.0
        for weight, block in zip(h.algebra.weights, h.blocks):
            vals = np.linalg.eigvalsh(block)
            w_neg += weight * int(np.sum(vals < -ktol))
        w_above = 0.0
        for weight, block in zip(bs_op.algebra.weights, bs_op.blocks):
            vals = np.linalg.eigvalsh(block)
            w_above += weight * int(np.sum(vals > 1.0 + ktol))
        links.append(("counting", w_neg, w_above))
        details["counting_checked"] = True
    else:
        details["counting_checked"] = False

    return linked_report(
        "sa-specialization",
        "index_tau(E_{H0}(R-), E_H(R-)) == index_tau(E_N(R-), E_{Ns}(R-))",
        links,
        tol,
        inputs={
            "H0": operator_digest(H0),
            "K": operator_digest(K),
            "N": operator_digest(N),
        },
        details=details,
    )


def factor_perturbation(V: Operator) -> tuple[Operator, Operator]:
    """Factor a self-adjoint V as V = -K*N^{-1}K with K = |V|^{1/2} and
    N = -sgn(V), the sign taken as +1 on the kernel."""
    if not is_self_adjoint(V):
        raise DomainError("perturbation must be self-adjoint")
    dec = spectral(V)
    k = dec.apply(lambda lam: np.sqrt(abs(lam)))
    n = dec.apply(lambda lam: -1.0 if lam >= 0.0 else 1.0)
    return k, n


# -- invariants used by the property tests ------------------------------


def resolvent_identity_residual(inst: BSInstance, z: complex) -> float:
    """Residual of Ns(z)^{-1} == (N+z)^{-1} + (N+z)^{-1} K Ms(z)^{-1} K* (N+z)^{-1}."""
    ms, ns = schur_complements(inst, z)
    n_z_inv = inverse(inst.n.shift(complex(z)))
    lhs = inverse(ns)
    rhs = n_z_inv + n_z_inv @ inst.k @ inverse(ms) @ inst.k.H @ n_z_inv
    return norm(lhs - rhs) / max(1.0, norm(lhs))


def herglotz_threshold(inst: BSInstance) -> float:
    """A height above which N + iy - K (M + iy)^{-1} K* is safely
    invertible: twice the coupling scale of the instance."""
    k_norm = norm(inst.k)
    return 2.0 * (norm(inst.n) + k_norm + k_norm**2 / max(1.0, norm(inst.m)))


def log_shift_asymptotics(
    op: Operator, heights: Sequence[float] = (1e2, 1e3, 1e4)
) -> list[float]:
    """Residuals |tau[log(op + iy)] - log(iy)| at the given heights.

    For dissipative ``op`` these decay like 1/y (the leading term is
    |tau(op)| / y), which the callers assert.
    """
    out = []
    for y in heights:
        val = trace(log_op(op.shift(1j * float(y)), IM_CUT))
        ref = np.log(float(y)) + 1j * np.pi / 2.0
        out.append(float(abs(val - ref)))
    return out


def decays_like_inverse(
    heights: Sequence[float], residuals: Sequence[float], slack: float = 2.0
) -> bool:
    """True when residuals drop at least as fast as 1/y (up to slack),
    treating anything below 1e-12 as converged."""
    for (y0, r0), (y1, r1) in zip(
        zip(heights, residuals), zip(heights[1:], residuals[1:])
    ):
        if r1 > max(slack * r0 * (y0 / y1), 1e-12):
            return False
    return True
