"""Exception types raised across the package."""


class RandThreshError(Exception):
    """Base class for all package errors."""


class DomainError(RandThreshError, ValueError):
    """An argument lies outside the domain of the function."""


class UsageError(RandThreshError, ValueError):
    """A call is ill-formed, e.g. a model parameter has not been resolved."""


class DataError(RandThreshError, ValueError):
    """Input data cannot be processed (non-finite, too short, unparsable)."""


class CalibrationError(RandThreshError, LookupError):
    """No critical value is available for the requested (n, level)."""


class InitializationError(RandThreshError, ValueError):
    """The mixture initialization could not be computed from the data."""


class DegenerateFitError(RandThreshError, RuntimeError):
    """A mixture fit collapsed (vanishing weight or scale)."""
