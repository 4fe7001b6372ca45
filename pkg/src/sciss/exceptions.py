"""Exception types raised across the package."""


class ScissError(Exception):
    """Base class for all package errors."""


class DimensionError(ScissError):
    """Inputs have inconsistent shapes."""


class SingularMatrixError(ScissError):
    """A pivot fell below the singularity threshold during elimination."""


class ConvergenceError(ScissError):
    """An iterative solver failed to converge (includes separation)."""


class EnumerationLimitError(ScissError):
    """Requested outcome dimension exceeds the exact-enumeration cap."""


class DegenerateSurrogateError(ScissError):
    """A surrogate column carries no identifying variation for its node."""


class NumericalUnderflowError(ScissError):
    """All enumerated configuration weights underflowed to zero."""


class SingularCovarianceError(ScissError):
    """Influence covariance of ensemble members is numerically singular."""


class EmptyLabeledError(ScissError):
    """Dataset contains no fully labeled rows."""


class EmptyUnlabeledError(ScissError):
    """Semi-supervised estimation requires at least one unlabeled row."""


class InvalidMechanismError(ScissError):
    """Unknown synthetic-data generating mechanism."""


class ParseError(ScissError):
    """Malformed dataset file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class SchemaError(ScissError):
    """Dataset columns do not form a consistent schema."""
