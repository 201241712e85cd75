"""Exception taxonomy.

Structural errors are shape or descriptor mismatches, domain errors are
violated mathematical preconditions, numeric errors are convergence
failures and carry the history that failed to converge.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(ToolkitError):
    """Operator data does not match its algebra descriptor."""


class DomainError(ToolkitError):
    """A mathematical precondition is violated (non-dissipative input,
    singular operator where invertibility is required, and so on)."""


class BranchCutError(DomainError):
    """Spectrum touches the branch cut of the requested logarithm."""


class PathError(DomainError):
    """An operator path leaves its admissible class (singular node,
    bad parametrization)."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class NumericError(ToolkitError):
    """A numerical procedure failed to converge.

    ``history`` holds the diagnostic trail (per-level quadrature error
    estimates, per-epsilon iterates) for post-mortem inspection.
    """

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ExistenceError(NumericError):
    """A boundary limit provably fails to exist.

    ``obstruction`` carries the norm of the witnessing obstruction
    (kernel overlap), ``history`` the divergent iterates.
    """

    def __init__(self, message: str, obstruction: float | None = None, history=None):
        super().__init__(message, history)
        self.obstruction = obstruction
