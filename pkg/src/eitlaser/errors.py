"""Exception types raised across the package."""


class EitLaserError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(EitLaserError, ValueError):
    """A Fock truncation dimension is not a positive integer."""


class DimensionMismatchError(EitLaserError, ValueError):
    """Two objects that must share a Fock dimension do not."""


class NotNormalizedError(EitLaserError, ValueError):
    """A state handed to a measure violates the unit-norm contract."""


class ConvergenceError(EitLaserError, RuntimeError):
    """Truncation or time stepping is too coarse for the requested accuracy."""


class ZeroProbabilityError(EitLaserError, ValueError):
    """A conditional state was requested for an outcome of zero probability."""


class ConfigError(EitLaserError, ValueError):
    """A scenario configuration could not be parsed or failed validation."""
