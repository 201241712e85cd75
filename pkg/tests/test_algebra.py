"""Block algebra structure: descriptors, traces, arithmetic, spectral calculus."""

import numpy as np
import pytest

from xindex import (
    AlgebraDescriptor,
    Operator,
    StructuralError,
    DomainError,
    block2,
    diagonal_operator,
    from_blocks,
    identity,
    inverse,
    norm,
    psd_sqrt,
    spectral,
    tau2,
    trace,
)
from xindex.algebra import (
    amplify,
    base_of_amplified,
    bottom_corner,
    dissipativity_defect,
    eigenvalues_self_adjoint,
    self_adjointness_defect,
    swap_conjugate,
    top_corner,
)


def test_factor_descriptor():
    alg = AlgebraDescriptor.factor(5)
    assert alg.blocks == ((5, 0.2),)
    assert alg.total_dim == 5
    assert abs(sum(d * w for d, w in alg.blocks) - 1.0) < 1e-15


def test_descriptor_weights_must_normalize():
    with pytest.raises(StructuralError):
        AlgebraDescriptor(((2, 0.5), (2, 0.6)))


def test_descriptor_rejects_nonpositive():
    with pytest.raises(StructuralError):
        AlgebraDescriptor(((0, 1.0),))
    with pytest.raises(StructuralError):
        AlgebraDescriptor(((2, -0.5), (2, 1.0)))


def test_descriptor_parse_roundtrip():
    alg = AlgebraDescriptor.parse("2x0.25,1x0.5")
    assert alg.blocks == ((2, 0.25), (1, 0.5))
    assert AlgebraDescriptor.parse(alg.spec_string()) == alg


def test_descriptor_parse_rejects_garbage():
    for text in ("", "2x", "ax0.5,1x0.5", "2"):
        with pytest.raises(StructuralError):
            AlgebraDescriptor.parse(text)


def test_weighted_trace_two_block_oracle():
    # tau(diag(2, 4)) with weights 0.3 / 0.7 is 0.3*2 + 0.7*4 = 3.4
    alg = AlgebraDescriptor(((1, 0.3), (1, 0.7)))
    op = from_blocks(alg, [np.array([[2.0]]), np.array([[4.0]])])
    assert abs(trace(op) - 3.4) < 1e-15


def test_trace_normalized_within_block():
    alg = AlgebraDescriptor.factor(3)
    op = from_blocks(alg, [np.diag([1.0, 2.0, 3.0])])
    assert abs(trace(op) - 2.0) < 1e-15


def test_identity_and_arithmetic():
    alg = AlgebraDescriptor(((2, 0.25), (2, 0.25)))
    eye = identity(alg)
    rng = np.random.default_rng(7)
    a = from_blocks(alg, [rng.standard_normal((2, 2)) for _ in range(2)])
    assert norm((a + eye) - a - eye) < 1e-14
    assert norm(2.0 * a - a - a) < 1e-14
    assert norm((a @ eye) - a) < 1e-14
    assert norm(a.shift(1j) - (a + 1j * eye)) < 1e-14


def test_adjoint_is_conjugate_transpose():
    alg = AlgebraDescriptor.factor(3)
    rng = np.random.default_rng(11)
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    op = from_blocks(alg, [m])
    assert np.allclose(op.H.blocks[0], m.conj().T)
    assert norm(op.H.H - op) < 1e-15


def test_block_shape_mismatch_rejected():
    alg = AlgebraDescriptor.factor(2)
    with pytest.raises(StructuralError):
        from_blocks(alg, [np.zeros((3, 3))])
    with pytest.raises(StructuralError):
        from_blocks(alg, [np.zeros((2, 3))])


def test_nonfinite_entries_rejected():
    alg = AlgebraDescriptor.factor(2)
    with pytest.raises(StructuralError):
        from_blocks(alg, [np.array([[np.nan, 0.0], [0.0, 1.0]])])


def test_mixed_algebra_arithmetic_rejected():
    a = identity(AlgebraDescriptor.factor(2))
    b = identity(AlgebraDescriptor.factor(3))
    with pytest.raises(StructuralError):
        _ = a + b


def test_defects():
    alg = AlgebraDescriptor.factor(2)
    h = from_blocks(alg, [np.array([[1.0, 2.0], [2.0, -1.0]])])
    assert self_adjointness_defect(h) < 1e-15
    sk = from_blocks(alg, [np.array([[0.0, 1.0], [-1.0, 0.0]])])
    assert self_adjointness_defect(sk) > 0.5
    assert dissipativity_defect(h + 1j * identity(alg)) < 1e-15
    assert dissipativity_defect(h - 1j * identity(alg)) > 0.5


def test_inverse_residual():
    alg = AlgebraDescriptor.factor(4)
    rng = np.random.default_rng(3)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    op = from_blocks(alg, [g + 4.0 * np.eye(4)])
    inv = inverse(op)
    assert norm(op @ inv - identity(alg)) < 1e-12
    assert norm(inv @ op - identity(alg)) < 1e-12


def test_inverse_gates_on_condition_number():
    alg = AlgebraDescriptor.factor(2)
    nearly = diagonal_operator(alg, [1.0, 1e-15])
    with pytest.raises(DomainError):
        inverse(nearly)
    # explicit limit opens the gate for merely ill-conditioned input
    assert inverse(nearly, cond_limit=np.inf) is not None


def test_singular_inverse_raises():
    alg = AlgebraDescriptor.factor(2)
    op = diagonal_operator(alg, [1.0, 0.0])
    with pytest.raises(DomainError):
        inverse(op)


def test_spectral_decomposition_reconstructs():
    alg = AlgebraDescriptor(((2, 0.2), (3, 0.2)))
    rng = np.random.default_rng(19)
    blocks = []
    for dim, _ in alg.blocks:
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        blocks.append(g + g.conj().T)
    h = from_blocks(alg, blocks)
    dec = spectral(h)
    assert norm(dec.reconstruct() - h) < 1e-12
    for p in dec.projections:
        assert norm(p @ p - p) < 1e-12
        assert norm(p - p.H) < 1e-12


def test_spectral_projections_resolve_identity():
    alg = AlgebraDescriptor.factor(3)
    h = diagonal_operator(alg, [-1.0, 0.0, 2.0])
    dec = spectral(h)
    neg = dec.projection_where(lambda lam: lam < -1e-8)
    ker = dec.projection_where(lambda lam: abs(lam) <= 1e-8)
    pos = dec.projection_where(lambda lam: lam > 1e-8)
    assert norm(neg + ker + pos - identity(alg)) < 1e-14
    assert abs(trace(neg) - 1.0 / 3.0) < 1e-15
    assert abs(trace(ker) - 1.0 / 3.0) < 1e-15


def test_spectral_clusters_across_blocks():
    # a doubly degenerate eigenvalue split across two blocks must land
    # in one cluster so its projection stays in the algebra
    alg = AlgebraDescriptor(((1, 0.5), (1, 0.5)))
    op = from_blocks(alg, [np.array([[2.0]]), np.array([[2.0 + 1e-12]])])
    dec = spectral(op)
    assert len(dec.eigenvalues) == 1
    assert abs(trace(dec.projections[0]) - 1.0) < 1e-14


def test_spectral_rejects_non_self_adjoint():
    alg = AlgebraDescriptor.factor(2)
    op = from_blocks(alg, [np.array([[0.0, 1.0], [0.0, 0.0]])])
    with pytest.raises(DomainError):
        spectral(op)


def test_eigenvalues_sorted():
    alg = AlgebraDescriptor(((1, 0.5), (1, 0.5)))
    op = from_blocks(alg, [np.array([[3.0]]), np.array([[-1.0]])])
    vals = eigenvalues_self_adjoint(op)
    assert np.allclose(vals, [-1.0, 3.0])


def test_psd_sqrt_oracle():
    alg = AlgebraDescriptor.factor(2)
    op = diagonal_operator(alg, [4.0, 9.0])
    root = psd_sqrt(op)
    assert np.allclose(root.blocks[0], np.diag([2.0, 3.0]))
    assert norm(root @ root - op) < 1e-13


def test_psd_sqrt_rejects_indefinite():
    alg = AlgebraDescriptor.factor(2)
    with pytest.raises(DomainError):
        psd_sqrt(diagonal_operator(alg, [1.0, -1.0]))


def test_block2_corners_and_trace():
    alg = AlgebraDescriptor.factor(2)
    rng = np.random.default_rng(5)
    m = from_blocks(alg, [rng.standard_normal((2, 2))])
    n = from_blocks(alg, [rng.standard_normal((2, 2))])
    k = from_blocks(alg, [rng.standard_normal((2, 2))])
    big = block2(m, k, n)
    assert norm(top_corner(big) - m) < 1e-15
    assert norm(bottom_corner(big) - n) < 1e-15
    assert np.allclose(big.blocks[0][2:, :2], k.blocks[0])
    assert np.allclose(big.blocks[0][:2, 2:], k.blocks[0].conj().T)
    # amplified trace averages the corner traces
    assert abs(tau2(big) - 0.5 * (trace(m) + trace(n))) < 1e-14


def test_swap_conjugate_exchanges_corners():
    alg = AlgebraDescriptor.factor(2)
    rng = np.random.default_rng(6)
    m = from_blocks(alg, [rng.standard_normal((2, 2))])
    n = from_blocks(alg, [rng.standard_normal((2, 2))])
    k = from_blocks(alg, [rng.standard_normal((2, 2))])
    swapped = swap_conjugate(block2(m, k, n))
    assert norm(swapped - block2(n, k.H, m)) < 1e-15


def test_amplification_roundtrip():
    alg = AlgebraDescriptor(((1, 0.3), (1, 0.7)))
    alg2 = amplify(alg)
    assert base_of_amplified(alg2) == alg
    op = from_blocks(alg, [np.array([[2.0]]), np.array([[-1.0]])])
    big = block2(op, 0.0 * op, op)
    assert big.algebra == alg2
    assert norm(top_corner(big) - op) < 1e-15


def test_norm_is_operator_norm():
    alg = AlgebraDescriptor(((2, 0.25), (1, 0.5)))
    op = from_blocks(alg, [np.diag([1.0, -3.0]), np.array([[2.0]])])
    assert abs(norm(op) - 3.0) < 1e-14
