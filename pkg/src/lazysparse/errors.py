"""Exception types raised across the package."""


class LazySparseError(Exception):
    """Base class for all package errors."""


class InvalidRate(LazySparseError, ValueError):
    """A learning rate / L2 strength combination breaks SGD positivity (eta * l2 >= 1)."""


class OutOfRange(LazySparseError, IndexError):
    """A schedule-cache lookup outside [base - 1, base + high_water]."""


class ContractViolation(LazySparseError, ValueError):
    """Caller broke a precondition (non-finite weight, psi > k, p > d, ...)."""


class ParseError(LazySparseError, ValueError):
    """Malformed dataset or model file. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatch(LazySparseError, ValueError):
    """A feature index does not fit the declared dimensionality."""
