# spectral/fattorini.py
"""
Fattorini-Hautus tests on grids

single: eigenpairs (s, phi) of -Lap_h - a_h, reporting max |d/dx1 phi| over
        the control window. A pair with a vanishing derivative obstructs
        controllability of the d/dx1-coupled system.
coupled: eigenpairs (s, psi) of -A22^T completed by q1 solving
        (A11^T + s) q1 = -A21^T psi with q1 = 0 on the control nodes. A pair
        for which this stacked system is consistent is a left eigenvector
        invisible to the single control.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from config.config import SPECTRAL_CONFIG, status
from simulate.discrete import ONE_CONTROL, difference_operators, discretize
from simulate.grid import Grid
from solvability import ParabolicSystem, Window
from symbolic import Expression, evaluate_array
from .errors import EigenSolverError

SINGLE = 'single'
COUPLED = 'coupled'
DENSE_LIMIT = 2000


@dataclass
class FattoriniReport:
    mode: str
    eigenvalues: List[float] = field(default_factory=list)
    eigen_residuals: List[float] = field(default_factory=list)
    window_values: List[float] = field(default_factory=list)
    tolerance: float = 0.0
    window: Tuple[Tuple[float, float], ...] = ()

    @property
    def obstructed_indices(self) -> List[int]:
        return [i for i, (r, v) in enumerate(zip(self.eigen_residuals, self.window_values))
                if r <= self.tolerance and v <= self.tolerance]

    @property
    def obstructed(self) -> bool:
        return bool(self.obstructed_indices)

    @property
    def verdict(self) -> str:
        return 'obstructed' if self.obstructed else 'no obstruction found'

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'eigenvalue [1/time]': self.eigenvalues,
            'eigen_residual [1]': self.eigen_residuals,
            'window_value [1]': self.window_values,
        })

    def to_dict(self) -> dict:
        return {
            'mode': self.mode,
            'verdict': self.verdict,
            'obstructed_indices': self.obstructed_indices,
            'eigenvalues': self.eigenvalues,
            'eigen_residuals': self.eigen_residuals,
            'window_values': self.window_values,
            'tolerance': self.tolerance,
            'window': [list(b) for b in self.window],
        }


def stencil_interior(grid: Grid, box) -> np.ndarray:
    """Nodes strictly inside `box` whose x1-neighbours are strictly inside too."""
    box = [box] if np.ndim(box) == 1 else box
    inside = np.ones(grid.nodes, dtype=bool)
    for x, (lo, hi) in zip(grid.mesh(), box):
        inside &= (x > lo) & (x < hi)
    padded = np.pad(inside, [(1, 1)] + [(0, 0)] * (grid.dimension - 1), constant_values=False)
    return (inside & padded[2:] & padded[:-2]).ravel()


def _nodal_potential(a, grid: Grid) -> np.ndarray:
    if isinstance(a, Expression):
        values = evaluate_array(a, grid.space_time_coords(0.0))
        return np.broadcast_to(np.asarray(values, dtype=float), (grid.size,)).copy()
    values = np.asarray(a, dtype=float).ravel()
    if values.size != grid.size:
        raise EigenSolverError(f"potential has {values.size} values for {grid.size} nodes")
    return values


def _lowest_pairs(matrix: sparse.csr_matrix, count: int, target: float = None):
    n = matrix.shape[0]
    if n <= DENSE_LIMIT:
        values, vectors = scipy.linalg.eigh(matrix.toarray())
        order = np.argsort(np.abs(values - target)) if target is not None else np.argsort(values)
        order = order[:count]
        return values[order], vectors[:, order]
    sigma = target if target is not None else float(matrix.diagonal().min()) - 1.0
    try:
        values, vectors = eigsh(matrix.tocsc(), k=count, sigma=sigma, which='LM')
    except ArpackNoConvergence as e:
        raise EigenSolverError(f"ARPACK did not converge: {e}")
    order = np.argsort(values)
    return values[order], vectors[:, order]


def fattorini_single(a, grid: Grid, window, eigenpairs: int = None, target: float = None,
                     tolerance: float = None) -> FattoriniReport:
    """
    Eigenpairs of -Lap_h - a_h with max |D1 phi| over the stencil-interior nodes of `window`
    (phi normalized in the discrete L2 norm).
    """
    eigenpairs = eigenpairs or SPECTRAL_CONFIG['eigenpairs']
    tolerance = SPECTRAL_CONFIG['fattorini_tolerance'] if tolerance is None else tolerance
    first, second = difference_operators(grid)
    laplacian = sum(second[i][i] for i in range(grid.dimension))
    operator = (-laplacian - sparse.diags(_nodal_potential(a, grid))).tocsr()
    scale = max(abs(operator).sum(axis=1).max(), 1.0)
    nodes = stencil_interior(grid, window)
    if not np.any(nodes):
        raise EigenSolverError("no grid node has its x1-stencil inside the window")

    values, vectors = _lowest_pairs(operator, min(eigenpairs, grid.size - 1), target)
    box = [window] if np.ndim(window) == 1 else window
    report = FattoriniReport(mode=SINGLE, tolerance=tolerance, window=tuple(tuple(b) for b in box))
    for s, phi in zip(values, vectors.T):
        phi = phi / grid.norm(phi)
        report.eigenvalues.append(float(s))
        report.eigen_residuals.append(float(np.max(np.abs(operator @ phi - s * phi)) / scale))
        report.window_values.append(float(np.max(np.abs((first[0] @ phi)[nodes]))))
    status(f"📊 single-equation test: {len(values)} pairs, verdict {report.verdict}", 2)
    return report


def fattorini_coupled(system: ParabolicSystem, grid: Grid, eigenpairs: int = None, target: float = None,
                      tolerance: float = None) -> FattoriniReport:
    """
    Coupled test on the one-control discretization of `system`.

    Residuals of the stacked q1-problem and of the psi eigen-equation are
    relative to |A|_inf.
    """
    eigenpairs = eigenpairs or SPECTRAL_CONFIG['eigenpairs']
    tolerance = SPECTRAL_CONFIG['fattorini_tolerance'] if tolerance is None else tolerance
    ds = discretize(system, grid, mode=ONE_CONTROL)
    n = grid.size
    A = ds.A.toarray()
    scale = max(np.linalg.norm(A, np.inf), 1.0)
    A11t, A21t, A22t = A[:n, :n].T, A[n:, :n].T, A[n:, n:].T
    rows = np.flatnonzero(ds.mask > 0)
    try:
        values, vectors = scipy.linalg.eig(-A22t)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"dense eigensolver failed: {e}")
    real = np.abs(values.imag) <= 1e-8 * scale
    values, vectors = values.real[real], vectors[:, real].real
    order = np.argsort(np.abs(values - target)) if target is not None else np.argsort(values)

    window = tuple(zip(system.control_window.lower[1:], system.control_window.upper[1:]))
    report = FattoriniReport(mode=COUPLED, tolerance=tolerance, window=window)
    identity = np.eye(n)
    restriction = np.zeros((rows.size, n))
    restriction[np.arange(rows.size), rows] = scale
    for index in order[:eigenpairs]:
        s, psi = float(values[index]), vectors[:, index]
        stacked = np.vstack([A11t + s * identity, restriction])
        rhs = np.concatenate([-(A21t @ psi), np.zeros(rows.size)])
        q1 = np.linalg.lstsq(stacked, rhs, rcond=None)[0]
        norm = grid.norm(np.concatenate([q1, psi]))
        q1, psi = q1 / norm, psi / norm
        q_residual = np.max(np.abs((A11t + s * identity) @ q1 + A21t @ psi)) / scale
        psi_residual = np.max(np.abs(A22t @ psi + s * psi)) / scale
        report.eigenvalues.append(s)
        report.eigen_residuals.append(float(max(q_residual, psi_residual)))
        report.window_values.append(float(np.max(np.abs(q1[rows])) if rows.size else 0.0))
    status(f"📊 coupled test: {len(report.eigenvalues)} pairs, verdict {report.verdict}", 2)
    return report


def fattorini_check(target, grid: Grid, mode: str = SINGLE, window=None, eigenpairs: int = None,
                    eigenvalue: float = None, tolerance: float = None) -> FattoriniReport:
    """
    Dispatch to the single-equation test (target is the potential a) or the
    coupled test (target is a ParabolicSystem; window defaults to its control window).
    """
    if mode == SINGLE:
        if window is None:
            raise EigenSolverError("the single-equation test needs a spatial window")
        return fattorini_single(target, grid, window, eigenpairs, eigenvalue, tolerance)
    if mode == COUPLED:
        if not isinstance(target, ParabolicSystem):
            raise EigenSolverError("the coupled test needs a ParabolicSystem")
        if window is not None:
            box = [window] if np.ndim(window) == 1 else window
            target = target.replace(control_window=Window(
                (0.0,) + tuple(lo for lo, _ in box), (target.horizon,) + tuple(hi for _, hi in box)))
        return fattorini_coupled(target, grid, eigenpairs, eigenvalue, tolerance)
    raise EigenSolverError(f"unknown Fattorini mode '{mode}'")
