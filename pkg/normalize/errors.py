# normalize/errors.py
"""Errors raised by the coupling normalization."""

from symbolic.errors import DomainError


class NormalizationError(DomainError):
    """Flow straightening or gauge removal could not be carried out."""
