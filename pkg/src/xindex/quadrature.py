"""Deterministic adaptive Gauss-Legendre quadrature.

Shared by the logarithm integral representation and the path
determinants.  Values can be scalars or arrays; panels are refined
depth-first (left half first) so evaluation and summation order never
depend on timing, and the final sum runs over panels sorted by left
endpoint.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(15)


def gauss_panel(f: Callable[[float], np.ndarray], a: float, b: float) -> np.ndarray:
    """Fixed 15-point Gauss-Legendre rule on ``[a, b]``."""
    mid = (a + b) / 2.0
    half = (b - a) / 2.0
    total = None
    for x, w in zip(_NODES, _WEIGHTS):
        val = np.asarray(f(mid + half * x))
        total = w * val if total is None else total + w * val
    return half * total


def adaptive_gauss(
    f: Callable[[float], np.ndarray],
    a: float,
    b: float,
    tol: float,
    norm: Callable[[np.ndarray], float] | None = None,
    max_depth: int = 28,
) -> tuple[np.ndarray, float, int]:
    """Adaptive composite rule with a whole-vs-halves error estimate.

    Returns ``(integral, error_estimate, panel_count)``.  Raises
    :class:`NumericError` when a panel still violates its share of the
    tolerance at ``max_depth``; the history carries the offending
    panels.
    """
    if norm is None:
        norm = lambda v: float(np.max(np.abs(v)))
    width = b - a
    if width <= 0:
        raise ValueError("empty integration interval")

    # stack of (a, b, depth); DFS with the left half pushed last
    stack = [(a, b, 0)]
    accepted: list[tuple[float, np.ndarray]] = []
    err_total = 0.0
    bad: list[tuple[float, float, float]] = []
    panels = 0
    while stack:
        lo, hi, depth = stack.pop()
        mid = (lo + hi) / 2.0
        whole = gauss_panel(f, lo, hi)
        left = gauss_panel(f, lo, mid)
        right = gauss_panel(f, mid, hi)
        err = norm(whole - (left + right))
        local_tol = tol * (hi - lo) / width
        if err <= local_tol or depth >= max_depth:
            if err > local_tol:
                bad.append((lo, hi, err))
            accepted.append((lo, left))
            accepted.append((mid, right))
            err_total += err
            panels += 2
        else:
            stack.append((mid, hi, depth + 1))
            stack.append((lo, mid, depth + 1))
    if bad:
        raise NumericError(
            f"quadrature failed to converge on {len(bad)} panel(s); "
            f"worst error {max(e for *_ , e in bad):.3e}",
            history=bad,
        )
    accepted.sort(key=lambda item: item[0])
    total = accepted[0][1]
    for _, val in accepted[1:]:
        total = total + val
    return total, err_total, panels
