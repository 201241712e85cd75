"""Branch logarithms: scalar calculus, functional calculus, quadrature route."""

import numpy as np
import pytest

from xindex import (
    AlgebraDescriptor,
    BranchCutError,
    DomainError,
    IM_CUT,
    NumericError,
    RE_CUT,
    arg_unitary,
    diagonal_operator,
    exp_op,
    from_blocks,
    identity,
    log_integral,
    log_op,
    log_series,
    norm,
    trace,
)
from xindex.oplog import cut_distance, scalar_log
from xindex.quadrature import adaptive_gauss


ALG2 = AlgebraDescriptor.factor(2)


def test_scalar_log_branch_oracles():
    # IM_CUT puts arguments in (-pi/2, 3pi/2)
    assert np.allclose(scalar_log(-1.0 + 0j, IM_CUT), 1j * np.pi)
    assert np.allclose(scalar_log(1j, IM_CUT), 1j * np.pi / 2)
    assert np.allclose(scalar_log(1.0 + 0j, IM_CUT), 0.0)
    # third quadrant lands in (pi, 3pi/2), not at the principal value
    assert np.allclose(scalar_log(-1.0 - 1.0j, IM_CUT), np.log(np.sqrt(2)) + 1j * 1.25 * np.pi)
    # RE_CUT keeps (-pi, pi] with the boundary pinned at +pi
    assert np.allclose(scalar_log(-1.0 + 0j, RE_CUT), 1j * np.pi)
    assert np.allclose(scalar_log(complex(-1.0, -0.0), RE_CUT), 1j * np.pi)
    assert np.allclose(scalar_log(-1j, RE_CUT), -1j * np.pi / 2)


def test_cut_distance():
    assert cut_distance(-2j, IM_CUT) == 0.0
    assert cut_distance(1.0, IM_CUT) == 1.0
    assert cut_distance(-3.0, RE_CUT) == 0.0
    assert cut_distance(-3.0 + 4j, RE_CUT) == 4.0


def test_log_oracle_diagonal():
    op = diagonal_operator(ALG2, [-1.0, 1j])
    out = log_op(op, IM_CUT)
    assert np.allclose(out.blocks[0], np.diag([1j * np.pi, 1j * np.pi / 2]))


def test_exp_log_roundtrip():
    rng = np.random.default_rng(23)
    for trial in range(20):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        f = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        block = (g + g.conj().T) / 2 + 1j * (f @ f.conj().T + 0.1 * np.eye(3))
        op = from_blocks(AlgebraDescriptor.factor(3), [block])
        back = exp_op(log_op(op, IM_CUT))
        assert norm(back - op) < 1e-10 * max(1.0, norm(op))


def test_log_branch_gate_im_cut():
    # spectrum on the negative imaginary semi-axis is rejected
    op = diagonal_operator(ALG2, [-1j, 1.0])
    with pytest.raises(BranchCutError):
        log_op(op, IM_CUT)


def test_log_singular_rejected():
    op = diagonal_operator(ALG2, [0.0, 1.0])
    with pytest.raises(DomainError):
        log_op(op, IM_CUT)


def test_log_non_normal_dissipative():
    # non-normal block exercises the rotated-branch route
    block = np.array([[1j, 5.0], [0.0, 2j]])
    op = from_blocks(ALG2, [block])
    out = log_op(op, IM_CUT)
    assert norm(exp_op(out) - op) < 1e-9


def test_log_integral_matches_functional_calculus():
    rng = np.random.default_rng(31)
    worst = 0.0
    for trial in range(10):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        f = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        block = (g + g.conj().T) / 2 + 1j * (f @ f.conj().T + 0.2 * np.eye(3))
        op = from_blocks(AlgebraDescriptor.factor(3), [block])
        gap = norm(log_integral(op) - log_op(op, IM_CUT))
        worst = max(worst, gap)
    assert worst < 1e-6


def test_log_integral_rejects_non_dissipative():
    op = diagonal_operator(ALG2, [1.0, -1j])
    with pytest.raises(DomainError):
        log_integral(op)


def test_log_series_near_identity():
    rng = np.random.default_rng(37)
    e = 0.05 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    op = from_blocks(ALG2, [np.eye(2) + e])
    assert norm(log_series(op) - log_op(op, IM_CUT)) < 1e-12


def test_log_series_rejects_far_from_identity():
    with pytest.raises(DomainError):
        log_series(diagonal_operator(ALG2, [3.0, 1.0]))


def test_arg_unitary_minus_identity_is_plus_pi():
    # the boundary angle must come out as +pi in every entry, never -pi
    out = arg_unitary(-1.0 * identity(ALG2))
    assert np.allclose(out.blocks[0], np.pi * np.eye(2))


def test_arg_unitary_phase_oracle():
    op = diagonal_operator(ALG2, [np.exp(0.3j), np.exp(-2.0j)])
    out = arg_unitary(op)
    assert np.allclose(np.diag(out.blocks[0]), [0.3, -2.0])


def test_arg_unitary_rejects_non_unitary():
    with pytest.raises(DomainError):
        arg_unitary(diagonal_operator(ALG2, [2.0, 1.0]))


def test_trace_of_log_additive_on_commuting_pair():
    a = diagonal_operator(ALG2, [1j, 2.0])
    b = diagonal_operator(ALG2, [3.0, 1.0 + 1j])
    lhs = trace(log_op(a @ b, IM_CUT))
    rhs = trace(log_op(a, IM_CUT)) + trace(log_op(b, IM_CUT))
    assert abs(lhs - rhs) < 1e-12


def test_adaptive_gauss_smooth_oracle():
    value, err, panels = adaptive_gauss(
        lambda t: np.array(np.exp(t)), 0.0, 1.0, 1e-12, norm=lambda v: float(abs(v))
    )
    assert abs(complex(value) - (np.e - 1.0)) < 1e-12
    assert panels >= 1
    assert err < 1e-10


def test_adaptive_gauss_refines_peaked_integrand():
    # narrow bump needs recursion; exact integral of 1/(t^2+a^2) over [-1,1]
    a = 1e-2
    value, _err, panels = adaptive_gauss(
        lambda t: np.array(1.0 / (t * t + a * a)),
        -1.0,
        1.0,
        1e-8,
        norm=lambda v: float(abs(v)),
    )
    exact = 2.0 * np.arctan(1.0 / a) / a
    assert abs(complex(value) - exact) < 1e-6 * exact
    assert panels > 4


def test_log_series_divergence_reports_history():
    # radius exactly below 1 but astronomically slow: force the term cap
    op = from_blocks(ALG2, [np.eye(2) * (1.0 - 1e-9)])
    with pytest.raises(NumericError):
        log_series(op, term_tol=0.0, max_terms=50)
