"""Exception types shared across the package."""


class MvcalError(Exception):
    """Base class for all package errors."""


class ValidationError(MvcalError, ValueError):
    """Invalid argument or configuration value."""


class DimensionMismatchError(ValidationError):
    """Vectors or matrices with incompatible feature dimensions."""

    def __init__(self, expected, got, context=""):
        self.expected = int(expected)
        self.got = int(got)
        msg = f"dimension mismatch: expected {expected}, got {got}"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class DegenerateDataError(ValidationError):
    """A coordinate with zero spread where spread is required."""

    def __init__(self, coordinate, detail=""):
        self.coordinate = int(coordinate)
        msg = f"degenerate coordinate {coordinate}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class ConvergenceError(MvcalError, RuntimeError):
    """Iterative solver exhausted its iteration budget."""

    def __init__(self, message, best_violation=None, iterations=None):
        self.best_violation = best_violation
        self.iterations = iterations
        super().__init__(message)
