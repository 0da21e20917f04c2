# solvability/errors.py
"""Errors raised while building operators and eliminating derivatives."""

from symbolic.errors import DomainError


class NormalFormError(DomainError):
    """The coupling of the second equation is not the x1 derivative on the control window."""


class EllipticityError(DomainError):
    """A diffusion tensor is not symmetric or not uniformly elliptic."""


class NonSolvableError(DomainError):
    """Every coefficient vanishes on the window: the operator cannot be inverted there."""


class WindowTooSmallError(DomainError):
    """The window shrank below the configured minimum volume."""


class IdentityCheckError(DomainError):
    """A sampled operator identity was violated beyond tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual
