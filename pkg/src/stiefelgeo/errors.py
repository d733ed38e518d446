"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class StiefelGeoError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(StiefelGeoError, ValueError):
    """A precondition on the inputs is violated."""


class DimensionError(DomainError):
    """Matrix shapes are incompatible with the requested operation."""


class StructureError(DomainError):
    """A structural property (skew-symmetry, orthonormality, ...) is violated."""


class RankError(DomainError):
    """The input does not have the rank the operation requires."""


class NormalizationError(DomainError):
    """The input is not normalized to unit speed; the caller must rescale."""


class DegenerateCurveError(DomainError):
    """The curve is degenerate (zero velocity, or no active frequency)."""


class ResolutionError(DomainError):
    """The parameter grid is too coarse for the requested derivative order."""


class ConvergenceError(StiefelGeoError, RuntimeError):
    """The shooting solver did not converge within the iteration budget."""

    def __init__(self, message: str, best_residual: float, iterations: int):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class AmbiguityError(StiefelGeoError, RuntimeError):
    """Several geodesics of equal length reach the target point.

    ``solutions`` holds all distinct tangent vectors found, sorted by norm.
    """

    def __init__(self, message: str, solutions):
        super().__init__(message)
        self.solutions = list(solutions)
