"""Exception types shared across the toolkit.

Numeric failures (``NumericError`` subclasses) map to CLI exit code 3; everything
else that a caller can trigger with bad input maps to exit code 2.
"""


class ClassicMLError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(ClassicMLError, ValueError):
    """Input arrays have incompatible or invalid shapes."""


class EmptyInputError(ClassicMLError, ValueError):
    """An operation received no data (or zero total mass)."""


class InvalidParameterError(ClassicMLError, ValueError):
    """A parameter is outside its admissible range."""


class NumericError(ClassicMLError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""


class DegeneracyError(NumericError):
    """Rank deficiency detected (e.g. dependent columns in QR)."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


class SingularityError(NumericError):
    """A matrix that must be positive definite / invertible is not."""


class ConvergenceError(NumericError):
    """An iterative solver exhausted its budget without converging."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ComponentCollapseError(NumericError):
    """A mixture component's variance collapsed to (near) zero."""

    def __init__(self, message: str, component: int):
        super().__init__(message)
        self.component = component


class ZeroMassError(NumericError, ZeroDivisionError):
    """Conditioning on (or normalising by) a zero-probability quantity."""
