# simulate/errors.py
"""Errors raised by the finite-difference layer."""

from symbolic.errors import DomainError


class DiscretizationError(DomainError):
    """The grid or the coefficients cannot be turned into a discrete system."""


class InstabilityError(DomainError):
    """Non-finite values appeared while time stepping."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


class SupportViolationError(DomainError):
    """The assembled (z, v) does not vanish outside the support of the data."""


class ConvergenceOrderError(DomainError):
    """A refinement study converged slower than required."""

    def __init__(self, message: str, rates=None):
        super().__init__(message)
        self.rates = rates
