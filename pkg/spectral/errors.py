# spectral/errors.py
"""Errors raised while building and testing non-controllability witnesses."""

from symbolic.errors import DomainError


class ConstructionError(DomainError):
    """A witness construction could not meet its sign or nesting conditions."""


class EigenSolverError(DomainError):
    """The eigensolver did not converge."""


class WitnessNotFoundError(DomainError):
    """No adjoint eigenvector invisible to the control was found."""
