"""Text fixtures for operators.

Format, one operator per file:

    # optional comments
    blocks: 2x0.3,2x0.7
    1.0,0.0 0.5,-0.25
    0.5,0.25 2.0,0.0
    ...

The header names the algebra (dim x weight per block, comma separated).
Then each block contributes ``dim`` lines of ``dim`` whitespace
separated entries, every entry a ``re,im`` pair.  Blank lines and
``#`` comments are ignored anywhere.
"""

from __future__ import annotations

from .algebra import AlgebraDescriptor, Operator, from_blocks
from .errors import StructuralError

import numpy as np

HEADER = "blocks:"


def save_operator(op: Operator, path) -> None:
    lines = [f"{HEADER} {op.algebra.spec_string()}"]
    for block in op.blocks:
        for row in block:
            lines.append(
                " ".join(f"{v.real:.17g},{v.imag:.17g}" for v in row)
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def _entry(token: str, where: str) -> complex:
    try:
        re_s, im_s = token.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError as exc:
        raise StructuralError(f"bad matrix entry {token!r} at {where}") from exc


def load_operator(path) -> Operator:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()
    lines = []
    for ln in raw:
        ln = ln.strip()
        if ln and not ln.startswith("#"):
            lines.append(ln)
    if not lines or not lines[0].startswith(HEADER):
        raise StructuralError(f"{path}: expected a '{HEADER} <spec>' header line")
    alg = AlgebraDescriptor.parse(lines[0][len(HEADER):].strip())
    rows = lines[1:]
    if len(rows) != alg.total_dim:
        raise StructuralError(
            f"{path}: expected {alg.total_dim} matrix rows, found {len(rows)}"
        )
    blocks = []
    at = 0
    for d in alg.dims:
        block = np.zeros((d, d), dtype=np.complex128)
        for i in range(d):
            tokens = rows[at + i].split()
            if len(tokens) != d:
                raise StructuralError(
                    f"{path}: row {at + i + 2} has {len(tokens)} entries, expected {d}"
                )
            for j, tok in enumerate(tokens):
                block[i, j] = _entry(tok, f"row {at + i + 2}, column {j + 1}")
        blocks.append(block)
        at += d
    return from_blocks(alg, blocks)
