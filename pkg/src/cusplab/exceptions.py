"""Error types shared across the laboratory modules."""

from __future__ import annotations


class CuspLabError(Exception):
    """Base class for all laboratory-specific failures."""


class NonContractionError(CuspLabError):
    """Fixed-point startup iteration failed to contract."""


class StepFailureError(CuspLabError):
    """A time integrator could not complete a step within tolerance."""


class NonConvergedError(CuspLabError):
    """An iterative estimate did not reach its convergence certificate."""


class InsufficientSamplesError(CuspLabError):
    """Not enough samples in the requested window to form an estimate."""


class SelfIntersectionError(CuspLabError):
    """A contour crossed itself (beyond the shared corner node)."""


class IntersectionCountError(CuspLabError):
    """A circle/boundary intersection produced an inconsistent crossing set."""


class InvariantViolationError(CuspLabError):
    """A runtime invariant check failed.

    Carries the short name of the violated invariant so callers (and the
    command line driver) can report it without parsing the message.
    """

    def __init__(self, invariant: str, message: str = ""):
        self.invariant = invariant
        super().__init__(f"invariant violated [{invariant}]: {message}" if message
                         else f"invariant violated [{invariant}]")
