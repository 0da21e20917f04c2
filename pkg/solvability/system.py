# solvability/system.py
"""
Coupled parabolic system and its operators

Second-order system in (0, T) x Omega:

    dt y1 - div(d1 grad y1) - g11.grad y1 - a11 y1 - g12.grad y2 - a12 y2 = u 1_omega
    dt y2 - div(d2 grad y2) - g22.grad y2 - a22 y2 - g21.grad y1 - a21 y1 = 0

Features:
- ParabolicSystem coefficient bundle with symmetry and ellipticity checks
- Construction of the underdetermined operator L(z, v), its scalar
  reduction L0, the adjoint pair (L1, L2) and the x1-free operator L3
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from config.config import SOLVABILITY_CONFIG
from symbolic import (
    ONE, ZERO, Expression, LinDiffOp, MultiIndex, OperatorMatrix, Window, add, differentiate,
    evaluate_array, neg, sub, to_text,
)
from symbolic.expression import as_expression
from .errors import EllipticityError, NormalFormError

Matrix = Tuple[Tuple[Expression, ...], ...]
Vector = Tuple[Expression, ...]


def identity_matrix(dimension: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(dimension)) for i in range(dimension))


def zero_vector(dimension: int) -> Vector:
    return (ZERO,) * dimension


def unit_vector(dimension: int, axis: int = 1) -> Vector:
    return tuple(ONE if i + 1 == axis else ZERO for i in range(dimension))


@dataclass(frozen=True)
class ParabolicSystem:
    """
    Coefficients and geometry of a two-equation system with one control.

    Matrices are full N x N tuples (symmetric); vectors have N entries.
    The control window is a box in (t, x1, ..., xN).
    """

    dimension: int
    d1: Matrix
    d2: Matrix
    g11: Vector
    g12: Vector
    g21: Vector
    g22: Vector
    a11: Expression
    a12: Expression
    a21: Expression
    a22: Expression
    domain: Tuple[Tuple[float, float], ...]
    control_window: Window
    horizon: float
    d0: Optional[float] = None
    normal_form: bool = False
    name: str = ''

    @classmethod
    def create(cls, dimension: int, domain: Sequence[Sequence[float]], control_window: Window,
               horizon: float, d1=None, d2=None, g11=None, g12=None, g21=None, g22=None,
               a11=0.0, a12=0.0, a21=0.0, a22=0.0, d0=None, normal_form=False,
               name='') -> 'ParabolicSystem':
        """Build a system, defaulting to identity diffusion, zero drifts and g21 = e1."""
        def matrix(m):
            if m is None:
                return identity_matrix(dimension)
            return tuple(tuple(as_expression(c) for c in row) for row in m)

        def vector(v, default):
            return default if v is None else tuple(as_expression(c) for c in v)

        return cls(
            dimension=dimension,
            d1=matrix(d1), d2=matrix(d2),
            g11=vector(g11, zero_vector(dimension)), g12=vector(g12, zero_vector(dimension)),
            g21=vector(g21, unit_vector(dimension)), g22=vector(g22, zero_vector(dimension)),
            a11=as_expression(a11), a12=as_expression(a12),
            a21=as_expression(a21), a22=as_expression(a22),
            domain=tuple((float(lo), float(hi)) for lo, hi in domain),
            control_window=control_window, horizon=float(horizon),
            d0=d0, normal_form=normal_form, name=name,
        )

    def replace(self, **changes) -> 'ParabolicSystem':
        return dataclasses.replace(self, **changes)

    @property
    def space_time_box(self) -> Window:
        return Window((0.0,) + tuple(lo for lo, _ in self.domain),
                      (self.horizon,) + tuple(hi for _, hi in self.domain))

    def coefficients(self) -> Dict[str, Expression]:
        """Flat name -> expression map (d2_12, g21_1, a22, ...)."""
        flat = {}
        n = self.dimension
        for label in ('d1', 'd2'):
            m = getattr(self, label)
            for i in range(n):
                for j in range(i, n):
                    flat[f'{label}_{i + 1}{j + 1}'] = m[i][j]
        for label in ('g11', 'g12', 'g21', 'g22'):
            for i, c in enumerate(getattr(self, label)):
                flat[f'{label}_{i + 1}'] = c
        for label in ('a11', 'a12', 'a21', 'a22'):
            flat[label] = getattr(self, label)
        return flat

    def validate(self, rng: np.random.Generator = None) -> float:
        """
        Check shapes, geometry, symmetry and uniform ellipticity by sampling.

        Returns:
            float: smallest sampled value of xi.d.xi / |xi|^2 over both tensors

        Raises:
            EllipticityError: asymmetric or degenerate diffusion
            ValueError: malformed shapes or geometry
        """
        n = self.dimension
        if n < 1:
            raise ValueError("dimension must be at least 1")
        if len(self.domain) != n or self.control_window.dimension != n:
            raise ValueError("domain and control window must match the dimension")
        for label in ('d1', 'd2'):
            m = getattr(self, label)
            if len(m) != n or any(len(row) != n for row in m):
                raise ValueError(f"{label} must be a {n}x{n} matrix")
        for label in ('g11', 'g12', 'g21', 'g22'):
            if len(getattr(self, label)) != n:
                raise ValueError(f"{label} must have {n} entries")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not self.space_time_box.contains_window(self.control_window):
            raise ValueError("control window must lie inside (0, T) x domain")

        rng = rng or np.random.default_rng(0)
        points = self.space_time_box.cell_centers(SOLVABILITY_CONFIG['ellipticity_samples'])
        directions = np.vstack([np.eye(n), rng.normal(size=(SOLVABILITY_CONFIG['ellipticity_directions'], n))])
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        smallest = np.inf
        for label in ('d1', 'd2'):
            m = getattr(self, label)
            values = np.empty(points[0].shape + (n, n))
            for i in range(n):
                for j in range(n):
                    values[..., i, j] = evaluate_array(m[i][j], points)
            asymmetry = np.max(np.abs(values - np.swapaxes(values, -1, -2)))
            if asymmetry > 1e-12:
                raise EllipticityError(f"{label} is not symmetric (sampled asymmetry {asymmetry:.3e})")
            quadratic = np.einsum('...ij,ki,kj->...k', values, directions, directions)
            smallest = min(smallest, float(np.min(quadratic)))
        if smallest <= 0 or (self.d0 is not None and smallest < self.d0):
            bound = self.d0 if self.d0 is not None else 0.0
            raise EllipticityError(f"ellipticity violated: sampled minimum {smallest:.3e} below {bound}")
        return smallest

    def check_normal_form(self, samples: int = 8, tolerance: float = 1e-10):
        """Sample g21 - e1 and a21 on the control window."""
        if not self.normal_form:
            raise NormalFormError("system does not declare the normal form g21.grad + a21 = d/dx1 "
                                  "on the control window; normalize it first")
        points = self.control_window.cell_centers(samples)
        target = unit_vector(self.dimension)
        worst = 0.0
        for c, e in zip(self.g21 + (self.a21,), target + (ZERO,)):
            worst = max(worst, float(np.max(np.abs(evaluate_array(sub(c, e), points)))))
        if worst > tolerance:
            raise NormalFormError(f"coupling differs from d/dx1 by {worst:.3e} on the control window")
        return worst

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'dimension': self.dimension,
            'domain': [list(b) for b in self.domain],
            'control_window': self.control_window.to_dict(),
            'horizon': self.horizon,
            'normal_form': self.normal_form,
            'coefficients': {k: to_text(v) for k, v in self.coefficients().items()},
        }


def divergence_drift(d: Matrix, g: Vector) -> Vector:
    """Drift of the expanded form: div(d grad u) + g.grad u = d:D2u + b.grad u."""
    n = len(g)
    return tuple(add(g[j], *(differentiate(d[i][j], i + 1) for i in range(n))) for j in range(n))


def parabolic_operator(dimension: int, d: Matrix, g: Vector, a: Expression) -> LinDiffOp:
    """dt - div(d grad .) - g.grad - a"""
    b = divergence_drift(d, g)
    terms = {MultiIndex.unit(dimension, 0): ONE, MultiIndex.zero(dimension): neg(a)}
    for i in range(dimension):
        terms[MultiIndex.unit(dimension, i + 1)] = neg(b[i])
        for j in range(dimension):
            alpha = MultiIndex.unit(dimension, i + 1) + MultiIndex.unit(dimension, j + 1)
            terms[alpha] = add(terms.get(alpha, ZERO), neg(d[i][j]))
    return LinDiffOp(dimension, terms)


def first_order_operator(dimension: int, g: Vector, a: Expression) -> LinDiffOp:
    """g.grad + a"""
    terms = {MultiIndex.zero(dimension): a}
    for i in range(dimension):
        terms[MultiIndex.unit(dimension, i + 1)] = g[i]
    return LinDiffOp(dimension, terms)


@dataclass
class SystemOperators:
    """Operators of the fictitious-control reduction for one system."""

    L: OperatorMatrix
    L0: OperatorMatrix
    L0_star: OperatorMatrix
    L1: LinDiffOp
    L2: LinDiffOp
    L3: LinDiffOp
    K: LinDiffOp
    g_tilde: Vector
    a_tilde: Expression
    first_row: Tuple[LinDiffOp, LinDiffOp] = field(default=None)

    def to_dict(self) -> dict:
        return {
            'L1': self.L1.to_dict(),
            'L2': self.L2.to_dict(),
            'L3': self.L3.to_dict(),
            'K': self.K.to_dict(),
            'g_tilde': [to_text(g) for g in self.g_tilde],
            'a_tilde': to_text(self.a_tilde),
        }


def build_system_operators(system: ParabolicSystem) -> SystemOperators:
    """
    Build L, L0, L0*, L1, L2, L3 for a system in normal form.

    L acts on (z1, z2, v); its second row uses the normal-form coupling
    -dx1 z1. L2 is obtained as the formal adjoint of the z2 block, and
    L3 = L2 - K o L1 removes every x1 derivative from L2.

    Raises:
        NormalFormError: the system does not declare or satisfy the normal form
    """
    system.check_normal_form()
    n = system.dimension
    identity = LinDiffOp.identity(n)
    dx1 = LinDiffOp.partial(n, 1)

    p1 = parabolic_operator(n, system.d1, system.g11, system.a11)
    q12 = -first_order_operator(n, system.g12, system.a12)
    p2 = parabolic_operator(n, system.d2, system.g22, system.a22)
    zero = LinDiffOp.zero(n)

    L = OperatorMatrix([[p1, q12, -identity], [-dx1, p2, zero]])
    L0 = OperatorMatrix([[-dx1, p2]])
    L0_star = L0.adjoint()
    L1 = L0_star[0, 0]
    L2 = L0_star[1, 0]

    g_tilde = tuple(sub(system.g22[i], add(*(differentiate(system.d2[i][j], j + 1) for j in range(n))))
                    for i in range(n))
    a_tilde = add(neg(system.a22), *(differentiate(system.g22[i], i + 1) for i in range(n)))

    carrying = {}
    for alpha, c in L2.terms.items():
        if alpha.exponents[1] >= 1:
            carrying[alpha - MultiIndex.unit(n, 1)] = c
    K = LinDiffOp(n, carrying)
    L3 = L2 - K.compose(L1)
    return SystemOperators(L=L, L0=L0, L0_star=L0_star, L1=L1, L2=L2, L3=L3, K=K,
                           g_tilde=g_tilde, a_tilde=a_tilde, first_row=(p1, q12))
