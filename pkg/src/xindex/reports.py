"""Structured verification records and their newline-delimited encoding.

Every identity check in the toolkit produces a :class:`VerificationReport`:
what was checked (a short name plus a self-contained formula statement),
on which inputs, the two sides, the residual, the tolerance, and whether
it passed.  Reports serialize to one JSON object per line; complex
numbers are encoded as ``{"re": ..., "im": ...}``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np


@dataclass
class VerificationReport:
    name: str
    statement: str
    inputs: dict
    lhs: Any
    rhs: Any
    residual: float
    tolerance: float
    passed: bool
    elapsed_s: float = 0.0
    warnings: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "statement": self.statement,
            "inputs": _encode(self.inputs),
            "lhs": _encode(self.lhs),
            "rhs": _encode(self.rhs),
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
            "elapsed_s": float(self.elapsed_s),
            "warnings": list(self.warnings),
            "details": _encode(self.details),
        }


def _encode(value):
    """JSON-friendly encoding; complex -> {"re", "im"}."""
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        z = complex(value)
        return {"re": z.real, "im": z.imag}
    if isinstance(value, np.ndarray):
        return [_encode(v) for v in value.tolist()]
    return str(value)


def residual_of(lhs, rhs) -> float:
    if lhs is None or rhs is None:
        return float("nan")
    return float(abs(complex(lhs) - complex(rhs)))


def check_report(
    name: str,
    statement: str,
    lhs,
    rhs,
    tolerance: float,
    inputs: dict | None = None,
    warnings: Iterable[str] = (),
    details: dict | None = None,
    elapsed_s: float = 0.0,
) -> VerificationReport:
    """Single two-sided check; residual is ``|lhs - rhs|``."""
    residual = residual_of(lhs, rhs)
    passed = bool(np.isfinite(residual) and residual <= tolerance)
    return VerificationReport(
        name=name,
        statement=statement,
        inputs=dict(inputs or {}),
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        tolerance=float(tolerance),
        passed=passed,
        elapsed_s=elapsed_s,
        warnings=list(warnings),
        details=dict(details or {}),
    )


def linked_report(
    name: str,
    statement: str,
    links: Sequence[tuple[str, Any, Any]],
    tolerance: float,
    inputs: dict | None = None,
    warnings: Iterable[str] = (),
    details: dict | None = None,
    elapsed_s: float = 0.0,
) -> VerificationReport:
    """Several sub-identities folded into one report.

    ``links`` is a sequence of ``(label, lhs, rhs)``; the report residual
    is the worst link residual and the per-link data land in
    ``details["links"]``.
    """
    link_rows = []
    worst = -1.0
    worst_pair = (None, None)
    for label, lhs, rhs in links:
        r = residual_of(lhs, rhs)
        link_rows.append({"label": label, "lhs": lhs, "rhs": rhs, "residual": r})
        key = float("inf") if not np.isfinite(r) else r
        if key > worst:
            worst = key
            worst_pair = (lhs, rhs)
    worst = max(worst, 0.0)
    all_details = dict(details or {})
    all_details["links"] = link_rows
    passed = bool(np.isfinite(worst) and worst <= tolerance)
    return VerificationReport(
        name=name,
        statement=statement,
        inputs=dict(inputs or {}),
        lhs=worst_pair[0],
        rhs=worst_pair[1],
        residual=float(worst),
        tolerance=float(tolerance),
        passed=passed,
        elapsed_s=elapsed_s,
        warnings=list(warnings),
        details=all_details,
    )


def operator_digest(X) -> str:
    """Short content hash of an operator's blocks, for input provenance."""
    h = hashlib.sha256()
    h.update(X.algebra.spec_string().encode())
    for b in X.blocks:
        h.update(np.ascontiguousarray(b).tobytes())
    return h.hexdigest()[:16]


def write_ndjson(reports: Iterable[VerificationReport], path) -> int:
    """One JSON object per line; returns the number of lines written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            fh.write(json.dumps(rep.to_json_dict(), allow_nan=True))
            fh.write("\n")
            count += 1
    return count


def read_ndjson(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
