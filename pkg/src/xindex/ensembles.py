"""Seeded random operator ensembles.

Every draw is deterministic in (seed, trial): the per-trial generator
is derived through `numpy.random.SeedSequence([seed, trial])`, so
trials can run in any order, on any number of workers, and still
produce identical operators.

DISSIPATIVE draws have exactly PSD imaginary parts by construction
(``B = G*G / d + floor I``); the floor keeps the imaginary part, and
with it every inverse the identities need, safely away from zero.
"""

from __future__ import annotations

import enum

import numpy as np

from .algebra import (
    AlgebraDescriptor,
    Operator,
    condition_number,
    from_blocks,
    spectral,
)
from .errors import NumericError

DEFAULT_FLOOR = 0.05
RESAMPLE_COND = 1e8
MAX_RESAMPLES = 64


class Ensemble(enum.Enum):
    HERMITIAN_GAUSSIAN = "hermitian_gaussian"
    DISSIPATIVE = "dissipative"
    POSITIVE_DEFINITE = "positive_definite"
    UNITARY_HAAR_LIKE = "unitary_haar_like"


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for one trial, independent of every other trial."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def _gaussian(rng: np.random.Generator, d: int) -> np.ndarray:
    return (
        rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    ) / np.sqrt(2.0 * d)


def complex_gaussian(alg: AlgebraDescriptor, rng: np.random.Generator) -> Operator:
    """Unstructured complex operator; the coupling factor of instances."""
    return from_blocks(alg, [_gaussian(rng, d) for d in alg.dims])


def _draw_block(ens: Ensemble, rng: np.random.Generator, d: int, floor: float) -> np.ndarray:
    if ens is Ensemble.HERMITIAN_GAUSSIAN:
        g = _gaussian(rng, d)
        return (g + g.conj().T) / np.sqrt(2.0)
    if ens is Ensemble.DISSIPATIVE:
        g = _gaussian(rng, d)
        f = _gaussian(rng, d)
        return (g + g.conj().T) / np.sqrt(2.0) + 1j * (
            f.conj().T @ f + floor * np.eye(d)
        )
    if ens is Ensemble.POSITIVE_DEFINITE:
        g = _gaussian(rng, d)
        return g.conj().T @ g + floor * np.eye(d)
    if ens is Ensemble.UNITARY_HAAR_LIKE:
        q, r = np.linalg.qr(_gaussian(rng, d))
        phases = np.diag(r).copy()
        phases[phases == 0] = 1.0
        return q @ np.diag(phases / np.abs(phases))
    raise ValueError(f"unknown ensemble {ens!r}")  # pragma: no cover


def generate(
    ens: Ensemble,
    alg: AlgebraDescriptor,
    rng: np.random.Generator,
    floor: float = DEFAULT_FLOOR,
    cond_limit: float | None = None,
) -> Operator:
    """One operator from the ensemble.

    With ``cond_limit`` set, badly conditioned draws are discarded and
    redrawn from the same stream, which keeps the result deterministic
    in the generator state.
    """
    for _ in range(MAX_RESAMPLES):
        op = from_blocks(alg, [_draw_block(ens, rng, d, floor) for d in alg.dims])
        if cond_limit is None or condition_number(op) <= cond_limit:
            return op
    raise NumericError(
        f"could not draw a {ens.value} operator under condition {cond_limit:g} "
        f"in {MAX_RESAMPLES} attempts"
    )


def hermitian_gapped(
    alg: AlgebraDescriptor, rng: np.random.Generator, gap: float = 0.4
) -> Operator:
    """Hermitian draw with spectrum pushed away from zero by ``gap``.

    Keeps signs mixed (unlike a positive-definite draw) while making
    inverses and boundary values well conditioned.
    """
    x = generate(Ensemble.HERMITIAN_GAUSSIAN, alg, rng)
    dec = spectral(x)
    return dec.apply(lambda lam: np.copysign(abs(lam) + gap, lam if lam != 0 else 1.0))


def hermitian_with_kernel(
    alg: AlgebraDescriptor, rng: np.random.Generator, corank: int = 1
) -> Operator:
    """Hermitian draw with ``corank`` eigenvalues pinned to exactly
    zero (the ones nearest zero are zeroed, lowest blocks first)."""
    x = generate(Ensemble.HERMITIAN_GAUSSIAN, alg, rng)
    blocks = []
    remaining = corank
    for b in x.blocks:
        vals, vecs = np.linalg.eigh((b + b.conj().T) / 2)
        if remaining > 0:
            order = np.argsort(np.abs(vals))
            kill = order[: min(remaining, len(vals))]
            vals[kill] = 0.0
            remaining -= len(kill)
        blocks.append((vecs * vals) @ vecs.conj().T)
    return from_blocks(alg, blocks)
