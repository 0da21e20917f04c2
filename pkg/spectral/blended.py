# spectral/blended.py
"""
Blended-potential witness

phi is glued from the first Dirichlet eigenfunction phi1 of the box and the
constant 1 by a smooth cut-off chi (chi = 1 on omega1, chi = 0 outside
omega2). With a = (-Lap phi - lambda1 phi) / phi, phi is an eigenfunction of
-Lap - a whose x1-derivative vanishes on omega1, so a system coupled through
d/dx1(theta y1) cannot be approximately controlled from omega.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from config.config import SPECTRAL_CONFIG, status
from simulate.discrete import difference_operators
from simulate.grid import Grid
from solvability import ParabolicSystem, Window
from symbolic import (
    ONE, Expression, add, blend, const, differentiate, div, evaluate_array, mul, neg, sin, sub,
    tabulated_field, var,
)
from .errors import ConstructionError

Box = Tuple[Tuple[float, float], ...]


def _box(bounds) -> Box:
    if np.ndim(bounds) == 1:
        bounds = [bounds]
    return tuple((float(lo), float(hi)) for lo, hi in bounds)


def _check_nesting(inner: Box, outer: Box, label: str):
    for (ilo, ihi), (olo, ohi) in zip(inner, outer):
        if not (olo < ilo < ihi < ohi):
            raise ConstructionError(f"{label}: ({ilo}, {ihi}) is not strictly inside ({olo}, {ohi})")


def cutoff(inner: Box, outer: Box) -> Expression:
    """Smooth function equal to 1 on the closed inner box and 0 outside the outer box."""
    factors = []
    for axis, ((ilo, ihi), (olo, ohi)) in enumerate(zip(inner, outer), start=1):
        factors.append(blend(axis, olo, ilo))
        factors.append(blend(axis, ohi, ihi))
    return mul(*factors)


def first_eigenfunction(domain: Box) -> Tuple[Expression, float]:
    """prod sin(pi (x_i - lo_i) / L_i) and its Dirichlet eigenvalue."""
    factors, eigenvalue = [], 0.0
    for axis, (lo, hi) in enumerate(domain, start=1):
        k = np.pi / (hi - lo)
        factors.append(sin(mul(k, sub(var(axis), lo))))
        eigenvalue += k * k
    return mul(*factors), eigenvalue


def laplacian(expr: Expression, dimension: int) -> Expression:
    return add(*(differentiate(differentiate(expr, i), i) for i in range(1, dimension + 1)))


@dataclass
class BlendedPotential:
    phi: Expression
    a: Expression
    cutoff: Expression
    eigenvalue: float
    domain: Box
    omega: Box
    omega1: Box
    omega2: Box
    delta: float
    min_phi: float

    @property
    def dimension(self) -> int:
        return len(self.domain)

    def to_dict(self) -> dict:
        return {
            'dimension': self.dimension,
            'eigenvalue': self.eigenvalue,
            'domain': [list(b) for b in self.domain],
            'omega': [list(b) for b in self.omega],
            'omega1': [list(b) for b in self.omega1],
            'omega2': [list(b) for b in self.omega2],
            'delta': self.delta,
            'min_phi_on_omega2': self.min_phi,
        }


def _sample_box(box: Box, samples: int):
    axes = [np.linspace(lo, hi, samples + 2)[1:-1] for lo, hi in box]
    mesh = [m.ravel() for m in np.meshgrid(*axes, indexing='ij')]
    return [np.zeros_like(mesh[0])] + mesh


def build_blended_potential_nd(domain, omega, omega1, omega2, delta: float = None,
                               samples: int = 64) -> BlendedPotential:
    """
    Build phi and a = (-Lap phi - lambda1 phi) / phi for nested boxes omega << omega1 << omega2 << domain.

    Raises:
        ConstructionError: nesting violated or phi not above delta on omega2
    """
    domain, omega, omega1, omega2 = (_box(b) for b in (domain, omega, omega1, omega2))
    if not len(domain) == len(omega) == len(omega1) == len(omega2):
        raise ConstructionError("all boxes must have the dimension of the domain")
    delta = SPECTRAL_CONFIG['delta'] if delta is None else delta
    if delta <= 0:
        raise ConstructionError("delta must be positive")
    _check_nesting(omega, omega1, "omega in omega1")
    _check_nesting(omega1, omega2, "omega1 in omega2")
    _check_nesting(omega2, domain, "omega2 in the domain")

    n = len(domain)
    chi = cutoff(omega1, omega2)
    phi1, eigenvalue = first_eigenfunction(domain)
    phi = add(chi, mul(sub(ONE, chi), phi1))
    a = div(sub(neg(laplacian(phi, n)), mul(eigenvalue, phi)), phi, guard=True)

    min_phi = float(np.min(evaluate_array(phi, _sample_box(omega2, samples if n == 1 else samples // 4))))
    if min_phi <= delta:
        raise ConstructionError(f"phi drops to {min_phi:.3e} <= delta = {delta} on omega2")
    status(f"✅ Blended potential in {n}D: lambda1 = {eigenvalue:.6g}, min phi on omega2 {min_phi:.3f}", 2)
    return BlendedPotential(phi=phi, a=a, cutoff=chi, eigenvalue=eigenvalue, domain=domain,
                            omega=omega, omega1=omega1, omega2=omega2, delta=delta, min_phi=min_phi)


def discrete_dirichlet_eigenvalue(grid: Grid, modes: Sequence[int] = None) -> float:
    """Eigenvalue of -Lap_h for prod sin(k_i pi (x_i - lo_i) / L_i) on the interior nodes."""
    modes = modes or [1] * grid.dimension
    total = 0.0
    for k, h, (lo, hi) in zip(modes, grid.spacing, grid.domain):
        total += 4.0 / h ** 2 * np.sin(k * np.pi * h / (2.0 * (hi - lo))) ** 2
    return total


def pure_stencil(grid: Grid, perturbation: np.ndarray) -> np.ndarray:
    """Nodes whose five/three-point stencil sees no perturbation (exact zeros only)."""
    clean = np.pad(np.reshape(perturbation == 0.0, grid.nodes), 1, constant_values=True)
    inner = tuple(slice(1, -1) for _ in grid.nodes)
    result = clean[inner].copy()
    for axis in range(grid.dimension):
        for shift in (-1, 1):
            index = list(inner)
            index[axis] = slice(1 + shift, clean.shape[axis] - 1 + shift)
            result &= clean[tuple(index)]
    return result.ravel()


@dataclass
class CalibratedPotential:
    """Nodal potential for which the sampled phi is an exact eigenvector of -Lap_h - a_h."""

    grid: Grid
    phi_nodes: np.ndarray
    a_nodes: np.ndarray
    eigenvalue: float
    a: Expression
    source: BlendedPotential


def calibrate_blended_potential(potential: BlendedPotential, grid: Grid) -> CalibratedPotential:
    """Recompute a from the nodal phi with the discrete Laplacian of `grid`."""
    if grid.dimension != potential.dimension:
        raise ConstructionError("grid and potential dimensions differ")
    coords = grid.space_time_coords(0.0)
    phi = evaluate_array(potential.phi, coords)
    chi = evaluate_array(potential.cutoff, coords)
    _, second = difference_operators(grid)
    lap = sum(second[i][i] for i in range(grid.dimension)) @ phi
    eigenvalue = discrete_dirichlet_eigenvalue(grid)
    a_nodes = (-lap - eigenvalue * phi) / phi
    a_nodes[pure_stencil(grid, chi)] = 0.0
    table = np.pad(np.reshape(a_nodes, grid.nodes), 1)
    a_expr = tabulated_field('a_blended', range(1, grid.dimension + 1), grid.padded_axes(), table, degree=3)
    return CalibratedPotential(grid=grid, phi_nodes=phi, a_nodes=a_nodes, eigenvalue=eigenvalue,
                               a=a_expr, source=potential)


def blended_potential_system(potential: BlendedPotential, horizon: float = 1.0, a: Expression = None,
                             name: str = 'blended potential') -> ParabolicSystem:
    """
    System whose second equation reads dt y2 = Lap y2 + a y2 + d/dx1(theta y1), theta the
    cut-off of the potential (theta = 1 on omega1), controlled from omega.
    """
    n = potential.dimension
    theta = potential.cutoff
    window = Window((0.0,) + tuple(lo for lo, _ in potential.omega),
                    (float(horizon),) + tuple(hi for _, hi in potential.omega))
    g21 = (theta,) + (const(0.0),) * (n - 1)
    return ParabolicSystem.create(
        dimension=n, domain=potential.domain, control_window=window, horizon=horizon,
        g21=g21, a21=differentiate(theta, 1), a22=potential.a if a is None else a,
        normal_form=True, name=name,
    )
