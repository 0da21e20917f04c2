# spectral/calibration.py
"""
Discrete calibration of the counterexample

On a grid the continuous construction is only an eigenpair up to O(h^2).
Here psi is re-sampled with grid-adjusted constants C1, Ck and the potential
is recomputed from the nodal psi, so that (q1, psi_h) is an exact left
eigenvector of the discrete operator whose first component vanishes on the
control nodes. The uncontrollability of the one-control system then holds
on the grid, not only in the limit.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import lstsq

from config.config import SPECTRAL_CONFIG, status
from simulate.discrete import control_mask, difference_operators
from simulate.grid import Grid
from solvability import ParabolicSystem, Window
from symbolic import Expression, evaluate_array, sub, tabulated_field
from .blended import discrete_dirichlet_eigenvalue, pure_stencil
from .counterexample import CounterexampleData, _sin3, counterexample_system
from .errors import ConstructionError


@dataclass
class DiscreteCounterexample:
    grid: Grid
    eigenvalue: float
    c1: float
    c_other: float
    branch: str
    psi_nodes: np.ndarray
    q_nodes: np.ndarray
    a_nodes: np.ndarray
    a: Expression
    window: Tuple[float, float]
    residual: float

    @property
    def witness(self) -> np.ndarray:
        """(q1, psi_h) scaled to unit Euclidean norm."""
        w = np.concatenate([self.q_nodes, self.psi_nodes])
        return w / np.linalg.norm(w)

    def system(self, data: CounterexampleData, window: Tuple[float, float] = None) -> ParabolicSystem:
        return counterexample_system(data, window or self.window, self.grid.horizon, a=self.a,
                                     name='calibrated counterexample')

    def to_dict(self) -> dict:
        return {
            'grid': self.grid.to_dict(),
            'discrete_eigenvalue': self.eigenvalue,
            'C1_h': self.c1,
            f'{self.branch}_h': self.c_other,
            'residual': self.residual,
            'max_q_on_window': float(np.max(np.abs(self.q_nodes[self._window_nodes()]))),
        }

    def _window_nodes(self) -> np.ndarray:
        lo, hi = self.window
        return control_mask(self.grid, Window((0.0, lo), (self.grid.horizon, hi))) > 0


def discrete_counterexample(data: CounterexampleData, grid: Grid, window: Tuple[float, float] = None,
                            tolerance: float = 1e-8) -> DiscreteCounterexample:
    """
    Solve for (q1, C1_h, Ck_h) in

        (-Lap_h - s_h) q1 + D_h psi_h = 0,   q1 = 0 on the control nodes,

    with psi_h = psi0 + C1_h theta1 + Ck_h thetak sampled at the nodes and
    s_h the discrete eigenvalue of sin(3x); then a_h = (-Lap_h psi_h - s_h psi_h) / psi_h.

    Raises:
        ConstructionError: the grid is not one-dimensional on (0, pi), the stacked
            system is inconsistent, a constant turns negative or psi_h vanishes
            where the potential is needed
    """
    if grid.dimension != 1 or not np.allclose(grid.domain[0], SPECTRAL_CONFIG['domain']):
        raise ConstructionError("the counterexample lives on a one-dimensional grid over (0, pi)")
    window = tuple(window or data.omega)
    h = grid.spacing[0]
    coords = grid.space_time_coords(0.0)
    n = grid.size
    sine = evaluate_array(_sin3(), coords)
    theta1 = evaluate_array(data.bumps[0], coords)
    thetak = evaluate_array(data.active_bump, coords)
    # exact zeros away from the collars
    blend_part = evaluate_array(sub(data.base, _sin3()), coords)

    first, second = difference_operators(grid)
    D1, D2 = first[0], second[0][0]
    s_h = discrete_dirichlet_eigenvalue(grid, [3])
    on_window = control_mask(grid, Window((0.0, window[0]), (grid.horizon, window[1]))) > 0
    rows = np.flatnonzero(on_window)

    top = np.hstack([(-D2 - s_h * sparse.identity(n)).toarray(), (D1 @ theta1)[:, None], (D1 @ thetak)[:, None]])
    bottom = np.zeros((rows.size, n + 2))
    bottom[np.arange(rows.size), rows] = 1.0 / h ** 2
    matrix = np.vstack([top, bottom])
    rhs = np.concatenate([-(D1 @ (sine + blend_part)), np.zeros(rows.size)])
    solution = lstsq(matrix, rhs)[0]
    residual = float(np.linalg.norm(matrix @ solution - rhs) / np.linalg.norm(rhs))
    if residual > tolerance:
        raise ConstructionError(f"discrete eigen-equation inconsistent on this grid (residual {residual:.3e})")

    q1, c1, ck = solution[:n], float(solution[n]), float(solution[n + 1])
    if c1 < 0 or ck < 0:
        raise ConstructionError(f"grid constants C1_h={c1:.3e}, Ck_h={ck:.3e} must be nonnegative")
    perturbation = blend_part + c1 * theta1 + ck * thetak
    psi = sine + perturbation

    clean = pure_stencil(grid, perturbation)
    if np.min(np.abs(psi[~clean])) <= 0:
        raise ConstructionError("psi_h vanishes at a node where the potential is recomputed")
    image = -(D2 @ psi) - s_h * psi
    a_nodes = np.divide(image, psi, out=np.zeros(n), where=~clean)
    table = np.pad(a_nodes, 1)
    a = tabulated_field('a_calibrated', [1], grid.padded_axes(), table, degree=3)

    status(f"✅ Calibrated counterexample on {n} nodes: C1_h={c1:.6g}, {data.branch}_h={ck:.6g}, "
           f"residual {residual:.1e}", 2)
    return DiscreteCounterexample(grid=grid, eigenvalue=s_h, c1=c1, c_other=ck, branch=data.branch,
                                  psi_nodes=psi, q_nodes=q1, a_nodes=a_nodes, a=a, window=window,
                                  residual=residual)
