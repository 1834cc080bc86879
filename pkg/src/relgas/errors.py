"""Exception types shared across the package."""


class RelGasError(Exception):
    """Base class for all package errors."""


class DomainError(RelGasError, ValueError):
    """An argument lies outside the domain of the operation."""


class ValidationError(DomainError):
    """A run configuration failed parse-time validation."""


class NumericError(RelGasError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance or overflowed.

    Attributes
    ----------
    estimate : float or None
        Best available estimate of the quantity.
    error_bound : float or None
        Error estimate attached to ``estimate``.
    log_value : float or None
        Natural log of the quantity when the linear value is not representable.
    """

    def __init__(self, message, *, estimate=None, error_bound=None, log_value=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound
        self.log_value = log_value


class TruncationError(NumericError):
    """A truncated series has a tail bound above the requested tolerance."""

    def __init__(self, message, *, partial_log_value, tail_bound):
        super().__init__(message, log_value=partial_log_value, error_bound=tail_bound)
        self.partial_log_value = partial_log_value
        self.tail_bound = tail_bound


class ModelError(RelGasError):
    """The physical model violates a hypothesis of the requested operation."""


class UnsupportedLimitError(ModelError):
    """The spacetime has no Newtonian limit (alpha(0) = 1, alpha'(0) = 0 fail)."""
