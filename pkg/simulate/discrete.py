# simulate/discrete.py
"""
Finite-difference discretization of the coupled system

Second-order central differences in space (diffusion, drift, coupling) on
the interior nodes of a uniform grid with homogeneous Dirichlet conditions,
and the implicit theta-scheme in time:

    (I - theta dt A) y^{k+1} = (I + (1 - theta) dt A) y^k + dt B u^k

The transpose pair used by the adjoint solves reuses the same LU factors,
so the discrete duality holds to round-off.

Features:
- Sparse operator assembly (scipy.sparse diags/kron/bmat)
- Mollified control mask and one- or two-control actuation
- Forward solves with instability detection and trajectory export
- Manufactured forcing for convergence checks
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import splu

from config.config import SIMULATE_CONFIG, status
from solvability import ParabolicSystem, divergence_drift
from solvability.system import first_order_operator, parabolic_operator
from symbolic import Expression, Window, blend_values, evaluate_array
from .errors import DiscretizationError, InstabilityError
from .grid import Grid

ONE_CONTROL = 'one-control'
TWO_CONTROL = 'two-control'
CONTROL_MODES = (ONE_CONTROL, TWO_CONTROL)


def _second_difference(n: int, h: float) -> sparse.csr_matrix:
    return sparse.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format='csr') / h ** 2


def _first_difference(n: int, h: float) -> sparse.csr_matrix:
    return sparse.diags([-1.0, 1.0], [-1, 1], shape=(n, n), format='csr') / (2.0 * h)


def difference_operators(grid: Grid):
    """
    Central-difference matrices on the flattened interior nodes (x1 slowest).

    Returns:
        tuple: (first, second) where first[i] approximates d/dx_{i+1} and
               second[i][j] approximates d2/dx_{i+1}dx_{j+1}
    """
    h = grid.spacing
    n = grid.nodes
    d1 = [_first_difference(n[i], h[i]) for i in range(grid.dimension)]
    d2 = [_second_difference(n[i], h[i]) for i in range(grid.dimension)]
    if grid.dimension == 1:
        return [d1[0]], [[d2[0]]]
    ix, iy = sparse.identity(n[0], format='csr'), sparse.identity(n[1], format='csr')
    first = [sparse.kron(d1[0], iy, format='csr'), sparse.kron(ix, d1[1], format='csr')]
    cross = sparse.kron(d1[0], d1[1], format='csr')
    second = [[sparse.kron(d2[0], iy, format='csr'), cross],
              [cross, sparse.kron(ix, d2[1], format='csr')]]
    return first, second


def _nodal(expr: Expression, coords, label: str) -> np.ndarray:
    if 0 in expr.free_variables:
        raise DiscretizationError(f"coefficient {label} depends on t; only autonomous systems are stepped")
    values = evaluate_array(expr, coords)
    return np.broadcast_to(np.asarray(values, dtype=float), coords[0].shape).copy()


def _scaled(values: np.ndarray, matrix) -> sparse.csr_matrix:
    return sparse.diags(values, format='csr') @ matrix


def _equation_block(grid, coords, ops, d, g, a, label):
    first, second = ops
    b = divergence_drift(d, g)
    n = grid.dimension
    block = sparse.diags(_nodal(a, coords, f'a{label}'), format='csr')
    for i in range(n):
        block = block + _scaled(_nodal(b[i], coords, f'g{label}_{i + 1}'), first[i])
        for j in range(n):
            block = block + _scaled(_nodal(d[i][j], coords, f'd{label[0]}_{i + 1}{j + 1}'), second[i][j])
    return block


def _coupling_block(grid, coords, ops, g, a, label):
    first, _ = ops
    block = sparse.diags(_nodal(a, coords, f'a{label}'), format='csr')
    for i in range(grid.dimension):
        block = block + _scaled(_nodal(g[i], coords, f'g{label}_{i + 1}'), first[i])
    return block


def control_mask(grid: Grid, window: Window, cells: int = None) -> np.ndarray:
    """Smoothstep indicator of the spatial control window, ramping over `cells` cells at each face."""
    cells = SIMULATE_CONFIG['mask_transition_cells'] if cells is None else cells
    mesh = [m.ravel() for m in grid.mesh()]
    mask = np.ones(grid.size)
    for x, h, lo, hi in zip(mesh, grid.spacing, window.lower[1:], window.upper[1:]):
        mask *= blend_values(x, lo, lo + cells * h) * blend_values(x, hi, hi - cells * h)
    return mask


def time_mask(grid: Grid, window: Window) -> np.ndarray:
    """1 for steps whose midpoint lies in the time range of the window."""
    middle = 0.5 * (grid.times[1:] + grid.times[:-1])
    return ((middle > window.lower[0]) & (middle < window.upper[0])).astype(float)


@dataclass
class DiscreteSystem:
    """One-step map y -> S y + B u of the theta-scheme and its exact transpose."""

    grid: Grid
    theta: float
    A: sparse.csr_matrix
    controls: Dict[str, sparse.csr_matrix]
    mask: np.ndarray
    step_mask: np.ndarray
    mode: str = ONE_CONTROL
    name: str = ''
    _implicit: object = field(default=None, repr=False)
    _explicit: sparse.csr_matrix = field(default=None, repr=False)

    def __post_init__(self):
        identity = sparse.identity(self.A.shape[0], format='csc')
        dt = self.grid.dt
        self._implicit = splu((identity - self.theta * dt * self.A).tocsc())
        self._explicit = (identity + (1.0 - self.theta) * dt * self.A).tocsr()

    @property
    def state_size(self) -> int:
        return self.A.shape[0]

    def control_matrix(self, which: str = None) -> sparse.csr_matrix:
        which = which or self.mode
        if which not in self.controls:
            raise DiscretizationError(f"unknown control mode '{which}'")
        return self.controls[which]

    def control_size(self, which: str = None) -> int:
        return self.control_matrix(which).shape[1]

    def step(self, y: np.ndarray, u: np.ndarray = None, k: int = 0, source: np.ndarray = None,
             which: str = None) -> np.ndarray:
        rhs = self._explicit @ y
        if u is not None:
            rhs = rhs + self.grid.dt * self.step_mask[k] * (self.control_matrix(which) @ u)
        if source is not None:
            rhs = rhs + self.grid.dt * source
        return self._implicit.solve(rhs)

    def adjoint_step(self, q: np.ndarray, k: int = 0, which: str = None) -> Tuple[np.ndarray, np.ndarray]:
        """Return (S^T q, B_k^T q) for the step k -> k + 1."""
        w = self._implicit.solve(q, trans='T')
        control = self.grid.dt * self.step_mask[k] * (self.control_matrix(which).T @ w)
        return self._explicit.T @ w, control

    def terminal(self, y0: np.ndarray, controls: np.ndarray = None, which: str = None) -> np.ndarray:
        y = np.asarray(y0, dtype=float)
        for k in range(self.grid.steps):
            y = self.step(y, None if controls is None else controls[k], k, which=which)
        return y

    def adjoint_controls(self, phi: np.ndarray, which: str = None) -> np.ndarray:
        """Transpose of the control-to-terminal-state map, applied to phi."""
        out = np.empty((self.grid.steps, self.control_size(which)))
        q = np.asarray(phi, dtype=float)
        for k in reversed(range(self.grid.steps)):
            q, out[k] = self.adjoint_step(q, k, which)
        return out

    def step_eigenvalue(self, mu: float) -> float:
        """Eigenvalue of S belonging to the eigenvalue mu of A."""
        dt = self.grid.dt
        return (1.0 + (1.0 - self.theta) * dt * mu) / (1.0 - self.theta * dt * mu)

    def split(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = self.grid.size
        return y[..., :n], y[..., n:]

    def duality_residual(self, rng: np.random.Generator = None, pairs: int = 50, which: str = None) -> float:
        """Worst relative mismatch of <S y + B u, q> and <y, S^T q> + <u, B^T q>."""
        rng = rng or np.random.default_rng(0)
        worst = 0.0
        for _ in range(pairs):
            y = rng.normal(size=self.state_size)
            u = rng.normal(size=self.control_size(which))
            q = rng.normal(size=self.state_size)
            forward = self.step(y, u, 0, which=which)
            back_state, back_control = self.adjoint_step(q, 0, which)
            lhs = forward @ q
            rhs = y @ back_state + u @ back_control
            scale = (np.linalg.norm(forward) * np.linalg.norm(q)
                     + np.linalg.norm(y) * np.linalg.norm(back_state)
                     + np.linalg.norm(u) * np.linalg.norm(back_control))
            worst = max(worst, abs(lhs - rhs) / scale)
        return worst

    def diffusion_decay(self) -> float:
        """One-step amplification of the first Dirichlet mode by the diffusion part of equation 1."""
        n = self.grid.size
        mesh = [m.ravel() for m in self.grid.mesh()]
        mode = np.ones(n)
        for x, (lo, hi) in zip(mesh, self.grid.domain):
            mode *= np.sin(np.pi * (x - lo) / (hi - lo))
        block = self.A[:n, :n]
        identity = sparse.identity(n, format='csc')
        dt = self.grid.dt
        image = splu((identity - self.theta * dt * block).tocsc()).solve(
            (identity + (1.0 - self.theta) * dt * block) @ mode)
        return float(np.linalg.norm(image) / np.linalg.norm(mode))

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'theta': self.theta,
            'mode': self.mode,
            'state_size': self.state_size,
            'grid': self.grid.to_dict(),
            'mask_nodes': int(np.count_nonzero(self.mask)),
        }


def discretize(system: ParabolicSystem, grid: Grid, theta: float = None, mode: str = ONE_CONTROL,
               mask_cells: int = None) -> DiscreteSystem:
    """
    Assemble the theta-scheme of `system` on `grid`.

    Raises:
        DiscretizationError: grid/domain mismatch, time-dependent coefficients,
            unresolved control window or an unknown scheme
    """
    theta = SIMULATE_CONFIG['theta'] if theta is None else float(theta)
    if theta not in (0.5, 1.0):
        raise DiscretizationError(f"theta must be 1 (implicit Euler) or 1/2 (Crank-Nicolson), got {theta}")
    if mode not in CONTROL_MODES:
        raise DiscretizationError(f"unknown control mode '{mode}'")
    if system.dimension != grid.dimension:
        raise DiscretizationError("grid dimension differs from the system dimension")
    if not np.allclose(system.domain, grid.domain) or not np.isclose(system.horizon, grid.horizon):
        raise DiscretizationError("grid does not cover the system domain and horizon")
    inside = grid.nodes_inside(system.control_window)
    if min(inside) < SIMULATE_CONFIG['min_window_nodes']:
        raise DiscretizationError(f"control window resolved by {inside} nodes; need at least "
                                  f"{SIMULATE_CONFIG['min_window_nodes']} per axis")

    coords = grid.space_time_coords(0.0)
    ops = difference_operators(grid)
    a11 = _equation_block(grid, coords, ops, system.d1, system.g11, system.a11, '11')
    a22 = _equation_block(grid, coords, ops, system.d2, system.g22, system.a22, '22')
    c12 = _coupling_block(grid, coords, ops, system.g12, system.a12, '12')
    c21 = _coupling_block(grid, coords, ops, system.g21, system.a21, '21')
    A = sparse.bmat([[a11, c12], [c21, a22]], format='csr')

    mask = control_mask(grid, system.control_window, mask_cells)
    diagonal = sparse.diags(mask, format='csr')
    zero = sparse.csr_matrix((grid.size, grid.size))
    controls = {
        ONE_CONTROL: sparse.vstack([diagonal, zero], format='csr'),
        TWO_CONTROL: sparse.block_diag([diagonal, diagonal], format='csr'),
    }
    ds = DiscreteSystem(grid=grid, theta=theta, A=A, controls=controls, mask=mask,
                        step_mask=time_mask(grid, system.control_window), mode=mode,
                        name=system.name)
    status(f"🔍 Discretized {system.name or 'system'}: {ds.state_size} unknowns, "
           f"{grid.steps} steps, theta={theta}", 2)
    return ds


@dataclass
class Trajectory:
    grid: Grid
    states: np.ndarray
    controls: Optional[np.ndarray] = None
    which: str = ONE_CONTROL

    def component(self, index: int) -> np.ndarray:
        n = self.grid.size
        return self.states[:, index * n:(index + 1) * n]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def norms(self) -> np.ndarray:
        return np.array([self.grid.norm(y) for y in self.states])

    def to_frame(self) -> pd.DataFrame:
        """Plot-ready table over all nodes (boundary included), one row per (t, x)."""
        grid = self.grid
        padded = np.meshgrid(*grid.padded_axes(), indexing='ij')
        count = padded[0].size
        columns = {'t [time]': np.repeat(grid.times, count)}
        for i, axis in enumerate(padded):
            columns[f'x{i + 1} [length]'] = np.tile(axis.ravel(), grid.steps + 1)
        for index in range(2):
            columns[f'y{index + 1} [state]'] = np.concatenate(
                [grid.pad(y).ravel() for y in self.component(index)])
        controls = self.controls
        if controls is None:
            controls = np.zeros((grid.steps, grid.size))
        # u^k acts on (t_k, t_{k+1}); the last level carries no control
        levels = np.vstack([controls, np.zeros((1, controls.shape[1]))])
        n = grid.size
        for index in range(controls.shape[1] // n):
            label = 'u [control]' if controls.shape[1] == n else f'u{index + 1} [control]'
            columns[label] = np.concatenate([grid.pad(u[index * n:(index + 1) * n]).ravel() for u in levels])
        return pd.DataFrame(columns)


def _initial_state(ds: DiscreteSystem, y0) -> np.ndarray:
    if y0 is None:
        return np.zeros(ds.state_size)
    if isinstance(y0, (tuple, list)) and len(y0) == 2:
        y0 = np.concatenate([np.ravel(y0[0]), np.ravel(y0[1])])
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (ds.state_size,):
        raise DiscretizationError(f"initial state has shape {y0.shape}, expected ({ds.state_size},)")
    return y0


def solve_forward(ds: DiscreteSystem, y0=None, u: np.ndarray = None, forcing: np.ndarray = None,
                  which: str = None) -> Trajectory:
    """
    March the theta-scheme from y0 under the control u (shape (K, m)) and an
    optional nodal source (shape (K + 1, 2n), sampled at the time levels).

    Raises:
        InstabilityError: a non-finite value appeared
        DiscretizationError: shapes do not match the grid
    """
    grid = ds.grid
    which = which or ds.mode
    y = _initial_state(ds, y0)
    if u is not None:
        u = np.asarray(u, dtype=float)
        if u.shape != (grid.steps, ds.control_size(which)):
            raise DiscretizationError(f"control has shape {u.shape}, expected "
                                      f"({grid.steps}, {ds.control_size(which)})")
    if forcing is not None and forcing.shape != (grid.steps + 1, ds.state_size):
        raise DiscretizationError(f"forcing has shape {forcing.shape}, expected "
                                  f"({grid.steps + 1}, {ds.state_size})")
    states = np.empty((grid.steps + 1, ds.state_size))
    states[0] = y
    for k in range(grid.steps):
        source = None
        if forcing is not None:
            source = ds.theta * forcing[k + 1] + (1.0 - ds.theta) * forcing[k]
        y = ds.step(y, None if u is None else u[k], k, source, which)
        if not np.all(np.isfinite(y)):
            raise InstabilityError("non-finite state", step=k + 1)
        states[k + 1] = y
    return Trajectory(grid=grid, states=states, controls=u, which=which)


def sample_pair(grid: Grid, first: Expression, second: Expression) -> np.ndarray:
    """Nodal values of a field pair at every time level, shape (K + 1, 2n)."""
    coords = grid.trajectory_coords()
    parts = []
    for expr in (first, second):
        values = evaluate_array(expr, coords)
        parts.append(np.broadcast_to(np.asarray(values, dtype=float), coords[0].shape))
    return np.concatenate(parts, axis=1)


def sample_initial(grid: Grid, first: Expression, second: Expression) -> np.ndarray:
    coords = grid.space_time_coords(0.0)
    parts = [np.broadcast_to(np.asarray(evaluate_array(e, coords), dtype=float), coords[0].shape)
             for e in (first, second)]
    return np.concatenate(parts)


def manufactured_forcing(system: ParabolicSystem, first: Expression, second: Expression) -> Tuple[Expression, Expression]:
    """Sources (f1, f2) for which (first, second) solves the uncontrolled system exactly."""
    n = system.dimension
    p1 = parabolic_operator(n, system.d1, system.g11, system.a11)
    p2 = parabolic_operator(n, system.d2, system.g22, system.a22)
    c12 = first_order_operator(n, system.g12, system.a12)
    c21 = first_order_operator(n, system.g21, system.a21)
    f1 = p1.apply(first) - c12.apply(second)
    f2 = p2.apply(second) - c21.apply(first)
    return f1, f2


def space_time_error(grid: Grid, computed: np.ndarray, exact: np.ndarray) -> float:
    """Discrete L2(Q_T) norm of the difference of two trajectories."""
    return float(np.sqrt(grid.dt * grid.cell_volume * np.sum(np.square(computed - exact))))
