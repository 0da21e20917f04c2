# symbolic/errors.py
"""
Exception hierarchy shared by every package.

All library errors derive from DomainError so drivers can separate domain
failures (exit code 1) from configuration problems (exit code 2).
"""


class DomainError(Exception):
    """Base class for every error raised by the library."""


class ExpressionSyntaxError(DomainError):
    """Malformed expression text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownIdentifierError(ExpressionSyntaxError):
    """Identifier that is neither a variable, a constant, a field nor a function."""


class ArityError(ExpressionSyntaxError):
    """Function called with the wrong number of arguments."""


class EvaluationError(DomainError):
    """Vanishing denominator or non-finite value during evaluation."""

    def __init__(self, message: str, point=None):
        if point is not None:
            message = f"{message} at point {tuple(float(p) for p in point)}"
        super().__init__(message)
        self.point = point


class QuadratureError(DomainError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ExpressionTooLargeError(DomainError):
    """Expression exceeded the configured node limit."""
