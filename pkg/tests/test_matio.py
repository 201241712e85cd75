"""Operator text files."""

import numpy as np
import pytest

from xindex import AlgebraDescriptor, StructuralError, load_operator, save_operator
from xindex.ensembles import complex_gaussian, trial_rng


def test_roundtrip_exact(tmp_path):
    alg = AlgebraDescriptor.parse("2x0.3,1x0.4")
    op = complex_gaussian(alg, trial_rng(3, 0))
    path = tmp_path / "op.txt"
    save_operator(op, path)
    back = load_operator(path)
    assert back.algebra == alg
    for a, b in zip(op.blocks, back.blocks):
        # %.17g round-trips doubles exactly
        assert np.array_equal(a, b)


def test_comments_and_blank_lines_ignored(tmp_path):
    path = tmp_path / "op.txt"
    path.write_text(
        "# a fixture\n"
        "\n"
        "blocks: 2x0.5\n"
        "1.0,0.0 0.0,1.0\n"
        "# middle comment\n"
        "0.0,-1.0 2.0,0.5\n"
    )
    op = load_operator(path)
    assert op.blocks[0][0, 1] == 1j
    assert op.blocks[0][1, 1] == 2.0 + 0.5j


def test_missing_header(tmp_path):
    path = tmp_path / "op.txt"
    path.write_text("1.0,0.0\n")
    with pytest.raises(StructuralError):
        load_operator(path)


def test_wrong_row_count(tmp_path):
    path = tmp_path / "op.txt"
    path.write_text("blocks: 2x0.5\n1.0,0.0 0.0,0.0\n")
    with pytest.raises(StructuralError):
        load_operator(path)


def test_wrong_entry_count_in_row(tmp_path):
    path = tmp_path / "op.txt"
    path.write_text("blocks: 2x0.5\n1.0,0.0\n0.0,0.0 1.0,0.0\n")
    with pytest.raises(StructuralError):
        load_operator(path)


def test_malformed_entry(tmp_path):
    path = tmp_path / "op.txt"
    path.write_text("blocks: 1x1.0\nnot-a-number\n")
    with pytest.raises(StructuralError):
        load_operator(path)


def test_bad_header_spec(tmp_path):
    path = tmp_path / "op.txt"
    path.write_text("blocks: 2xhalf\n1.0,0.0 0.0,0.0\n0.0,0.0 1.0,0.0\n")
    with pytest.raises(StructuralError):
        load_operator(path)
