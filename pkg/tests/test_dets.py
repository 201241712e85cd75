"""Trace determinants: positive, branch, and path routes."""

import numpy as np
import pytest

from xindex import (
    AlgebraDescriptor,
    DomainError,
    Ensemble,
    PathError,
    cayley_path,
    det_tau_dissipative,
    det_tau_unitary,
    det_tau_via_path,
    diagonal_operator,
    dlhs_det_path,
    fk_det,
    from_blocks,
    generate,
    identity,
    linear_path,
    log_series,
    norm,
    path_determinant,
    polar_identity_check,
    sampled_path,
    scalar_operator,
    trace,
    trial_rng,
)
from xindex.dets import concat_paths, product_path, two_leg_dissipative_path


ALG1 = AlgebraDescriptor.factor(1)
ALG2 = AlgebraDescriptor.factor(2)


def scalar(z):
    return scalar_operator(ALG1, z)


def dissipative_draw(trial, dim=4):
    rng = trial_rng(1234, trial)
    return generate(Ensemble.DISSIPATIVE, AlgebraDescriptor.factor(dim), rng)


def test_fk_det_oracles():
    assert abs(fk_det(-1.0 * identity(ALG2)) - 1.0) < 1e-14
    assert abs(fk_det(2.0 * identity(ALG2)) - 2.0) < 1e-14
    # normalized trace turns det into a geometric mean
    assert abs(fk_det(diagonal_operator(ALG2, [1.0, 4.0])) - 2.0) < 1e-14


def test_fk_det_rejects_singular():
    with pytest.raises(DomainError):
        fk_det(diagonal_operator(ALG2, [0.0, 1.0]))


def test_fk_det_multiplicative():
    rng = trial_rng(2, 0)
    a = generate(Ensemble.DISSIPATIVE, AlgebraDescriptor.factor(4), rng)
    b = generate(Ensemble.DISSIPATIVE, AlgebraDescriptor.factor(4), rng)
    assert abs(fk_det(a @ b) - fk_det(a) * fk_det(b)) < 1e-10 * fk_det(a @ b)


def test_det_tau_scalar_oracles():
    assert abs(det_tau_dissipative(scalar(1j)) - 1j) < 1e-14
    assert abs(det_tau_dissipative(scalar(-2.0)) + 2.0) < 1e-14
    assert abs(det_tau_dissipative(scalar(1.0 + 1j)) - (1.0 + 1j)) < 1e-14


def test_det_tau_geometric_mean_on_blocks():
    op = diagonal_operator(ALG2, [1j, 1.0])
    # exp(0.5 * (i pi/2)) = exp(i pi/4)
    assert abs(det_tau_dissipative(op) - np.exp(1j * np.pi / 4)) < 1e-14


def test_det_tau_unitary_oracle():
    u = diagonal_operator(ALG2, [np.exp(0.7j), np.exp(-0.2j)])
    assert abs(det_tau_unitary(u) - np.exp(0.25j)) < 1e-13
    with pytest.raises(DomainError):
        det_tau_unitary(diagonal_operator(ALG2, [2.0, 1.0]))


def test_path_determinant_linear_scalar():
    path = linear_path(identity(ALG1), scalar(1.0 + 1j))
    out = path_determinant(path)
    assert abs(out.value - (1.0 + 1j)) < 1e-10
    assert abs(out.winding - np.pi / 4) < 1e-10
    assert out.error_estimate < 1e-8


def test_sampled_path_winding_half_turn():
    ts = np.linspace(0.0, 1.0, 201)
    samples = [(t, scalar(np.exp(1j * np.pi * t))) for t in ts]
    out = path_determinant(sampled_path(samples))
    assert abs(out.value + 1.0) < 5e-4
    assert abs(out.winding - np.pi) < 5e-4
    assert "sampled" in out.flags


def test_sampled_path_full_loop_keeps_winding():
    # a closed loop returns to det = 1 but the accumulated phase is 2 pi
    ts = np.linspace(0.0, 1.0, 401)
    samples = [(t, scalar(np.exp(2j * np.pi * t))) for t in ts]
    out = path_determinant(sampled_path(samples))
    assert abs(out.value - 1.0) < 1e-3
    assert abs(out.winding - 2.0 * np.pi) < 1e-3


def test_sampled_path_validation():
    mk = lambda ts: sampled_path([(t, scalar(1.0 + t)) for t in ts])
    with pytest.raises(DomainError):
        mk(np.linspace(0.0, 1.0, 8))
    with pytest.raises(DomainError):
        mk([0.0] + list(np.linspace(0.0, 1.0, 40)))
    with pytest.raises(DomainError):
        mk(np.linspace(0.0, 0.9, 40))


def test_path_determinant_flags_singular_node():
    # straight path from diag(1, 1) to diag(-1, -2) crosses a singular point
    target = diagonal_operator(ALG2, [-1.0, -2.0])
    path = linear_path(identity(ALG2), target)
    with pytest.raises(PathError):
        path_determinant(path)
    ts = np.linspace(0.0, 1.0, 41)  # node grid contains t = 0.5 exactly
    samples = [(t, diagonal_operator(ALG2, [1.0 - 2.0 * t, 1.0])) for t in ts]
    with pytest.raises(PathError):
        path_determinant(sampled_path(samples))


def test_two_leg_fallback_value_and_flag():
    m = -2.0 * identity(ALG1)
    out = det_tau_via_path(m)
    assert "two_leg_fallback" in out.flags
    assert abs(out.value - det_tau_dissipative(m)) < 1e-8


def test_det_path_route_matches_closed_form():
    for trial in range(10):
        m = dissipative_draw(trial)
        out = det_tau_via_path(m)
        closed = det_tau_dissipative(m)
        assert abs(out.value - closed) < 1e-7 * max(1.0, abs(closed))


def test_concat_matches_endpoints():
    a = scalar(1.0 + 0.5j)
    b = scalar(2.0 + 1j)
    path = concat_paths(linear_path(identity(ALG1), a), linear_path(a, b))
    out = path_determinant(path)
    assert abs(out.value - complex(b.blocks[0][0, 0])) < 1e-9
    assert "concat" in out.flags


def test_homotopy_invariance_linear_vs_bezier():
    # same endpoints, second path bulges into the upper half plane
    for trial in range(5):
        m = dissipative_draw(trial, dim=3)
        eye = identity(m.algebra)
        direct = dlhs_det_path(linear_path(eye, m))
        mid = 1j * max(norm(m), 1.0) * eye
        ts = np.linspace(0.0, 1.0, 4097)
        samples = [
            (
                t,
                (1 - t) * (1 - t) * eye + 2 * t * (1 - t) * mid + t * t * m,
            )
            for t in ts
        ]
        arc = path_determinant(sampled_path(samples)).value
        assert abs(direct - arc) < 2e-6 * max(1.0, abs(direct))


def test_multiplicativity_on_product_path():
    for trial in range(5):
        p_op = dissipative_draw(10 + trial)
        q_op = dissipative_draw(20 + trial)
        eye = identity(p_op.algebra)
        p = linear_path(eye, p_op)
        q = linear_path(eye, q_op)
        lhs = dlhs_det_path(product_path(p, q))
        rhs = dlhs_det_path(p) * dlhs_det_path(q)
        assert abs(lhs - rhs) < 1e-6 * max(1.0, abs(rhs))


def test_near_identity_series_law():
    rng = trial_rng(77, 0)
    for trial in range(5):
        e0 = 0.1 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        e1 = 0.1 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        alg = AlgebraDescriptor.factor(3)
        h0 = from_blocks(alg, [np.eye(3) + e0])
        h1 = from_blocks(alg, [np.eye(3) + e1])
        got = dlhs_det_path(linear_path(h0, h1))
        want = np.exp(trace(log_series(h1)) - trace(log_series(h0)))
        assert abs(got - want) < 1e-8 * max(1.0, abs(want))


def test_cayley_path_matches_unitary_det():
    rng = trial_rng(31, 3)
    g = rng.standard_normal((3, 3))
    h = from_blocks(AlgebraDescriptor.factor(3), [(g + g.T) / 2])
    path = cayley_path(h)
    s = path.value(1.0)
    got = dlhs_det_path(path)
    want = det_tau_unitary(s)
    assert abs(got - want) < 1e-8


def test_modulus_law():
    for trial in range(10):
        m = dissipative_draw(30 + trial)
        assert abs(abs(det_tau_dissipative(m)) - fk_det(m)) < 1e-10 * fk_det(m)


def test_polar_identity_reports():
    m = dissipative_draw(40)
    rep = polar_identity_check(m)
    assert rep.passed
    assert rep.residual <= 1e-8
    assert rep.name == "polar-identity"
    assert "xi_trace" in rep.details
    assert "fk_det" in rep.details
