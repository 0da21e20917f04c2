# simulate/assembly.py
"""
Fictitious-control assembly on manufactured data

A pair y_hat built from compactly supported bumps solves the two-control
system with the controls u_hat it generates. With M from the algebraic
solver, (z, v) = M(u_hat) solves L(z, v) = u_hat and vanishes outside the
support of u_hat, so (y, u) = (y_hat - z, -v) solves the one-control system
and reaches zero at T whenever y_hat does. The discrete residual of that
pair under refinement checks the whole chain.

Features:
- Manufactured two-control solutions from bump products
- Node-wise support check of (z, v)
- Crank-Nicolson residual of the one-control system
- Parallel refinement study with observed convergence orders
"""

import concurrent.futures
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.config import PARALLEL_CONFIG, SIMULATE_CONFIG, status
from solvability import FullSolver, ParabolicSystem, Window
from symbolic import ZERO, Expression, bump, evaluate_array, mul, var
from .discrete import DiscreteSystem, discretize, manufactured_forcing
from .errors import ConvergenceOrderError, SupportViolationError
from .grid import Grid


@dataclass
class ManufacturedSolution:
    """y_hat and the two controls u_hat it needs; both vanish outside `support`."""

    y_hat: Tuple[Expression, Expression]
    u_hat: Tuple[Expression, Expression]
    support: Window


def manufactured_solution(system: ParabolicSystem, support: Window,
                          weights: Tuple[float, float] = (1.0, 0.5)) -> ManufacturedSolution:
    """y_hat = (c1 eta, c2 eta) with eta a product of bumps over `support`."""
    eta = bump([(axis, lo, hi) for axis, (lo, hi) in enumerate(support.bounds())])
    y_hat = (mul(weights[0], eta), mul(weights[1], eta))
    return ManufacturedSolution(y_hat=y_hat, u_hat=manufactured_forcing(system, *y_hat), support=support)


def zero_solution(system: ParabolicSystem, support: Window) -> ManufacturedSolution:
    return ManufacturedSolution(y_hat=(ZERO, ZERO), u_hat=(ZERO, ZERO), support=support)


def reference_assembly_case() -> Tuple[ParabolicSystem, ManufacturedSolution]:
    """One-dimensional system with a22 = -x1 on (0, 1), T = 1, and its manufactured pair."""
    window = Window((0.05, 0.05), (0.95, 0.95))
    system = ParabolicSystem.create(
        dimension=1, domain=[(0.0, 1.0)], control_window=window, horizon=1.0,
        a11=-1.0, a12=0.5, a22=mul(-1.0, var(1)), normal_form=True, name='assembly reference',
    )
    support = Window((0.1, 0.15), (0.9, 0.85))
    return system, manufactured_solution(system, support)


@dataclass
class AssemblyReport:
    spacing: float
    steps: int
    residual: float
    residual_max: float
    terminal_norm: float
    boundary_in_time: float
    leak: float
    support_ok: bool
    control_norm: float
    window: Window

    def to_dict(self) -> dict:
        return {
            'spacing': self.spacing,
            'steps': self.steps,
            'residual': self.residual,
            'residual_max': self.residual_max,
            'terminal_norm': self.terminal_norm,
            'boundary_in_time': self.boundary_in_time,
            'leak': self.leak,
            'support_ok': self.support_ok,
            'control_norm': self.control_norm,
            'window': self.window.to_dict(),
        }


def _inside(coords, window: Window, closed: bool = False) -> np.ndarray:
    mask = np.ones(coords[0].shape, dtype=bool)
    for c, lo, hi in zip(coords, window.lower, window.upper):
        mask &= (c >= lo) & (c <= hi) if closed else (c > lo) & (c < hi)
    return mask


def _evaluate_on(expr: Expression, coords, where: np.ndarray) -> np.ndarray:
    out = np.zeros(coords[0].shape)
    if np.any(where):
        out[where] = evaluate_array(expr, [c[where] for c in coords])
    return out


def one_control_residual(ds: DiscreteSystem, states: np.ndarray, control: np.ndarray) -> Tuple[float, float]:
    """
    Theta-scheme residual of the one-control system for nodal (y, u) at all levels.

    The control enters without the mask: u vanishes outside the window already.

    Returns:
        tuple: (discrete L2(Q_T) norm, max norm)
    """
    grid = ds.grid
    dt, theta = grid.dt, ds.theta
    images = (ds.A @ states.T).T
    actuation = np.hstack([control, np.zeros_like(control)])
    residual = ((states[1:] - states[:-1]) / dt
                - theta * images[1:] - (1.0 - theta) * images[:-1]
                - theta * actuation[1:] - (1.0 - theta) * actuation[:-1])
    l2 = float(np.sqrt(dt * grid.cell_volume * np.sum(residual ** 2)))
    return l2, float(np.max(np.abs(residual)))


def fictitious_assembly(system: ParabolicSystem, grid: Grid, manufactured: ManufacturedSolution,
                        solver: FullSolver, theta: float = None) -> AssemblyReport:
    """
    Compute (z, v) = M(u_hat), assemble (y, u) = (y_hat - z, -v) on the grid
    and measure the one-control residual.

    Raises:
        SupportViolationError: the data support is not inside the window of M,
            or (z, v) is nonzero outside the data support
    """
    theta = SIMULATE_CONFIG['assembly_theta'] if theta is None else theta
    if not solver.window.contains_window(manufactured.support):
        raise SupportViolationError(f"data support {manufactured.support.to_dict()} is not inside the "
                                    f"window {solver.window.to_dict()} where M is valid")
    ds = discretize(system, grid, theta)
    z1, z2, v = solver.apply(*manufactured.u_hat)

    coords = grid.trajectory_coords()
    inside = _inside(coords, solver.window)
    support = _inside(coords, manufactured.support, closed=True)
    z1_values = _evaluate_on(z1, coords, inside)
    z2_values = _evaluate_on(z2, coords, inside)
    v_values = _evaluate_on(v, coords, inside)

    scale = max(1.0, float(np.max(np.abs(np.concatenate([z1_values, z2_values, v_values], axis=None)))))
    outside = inside & ~support
    leak = 0.0
    if np.any(outside):
        leak = max(float(np.max(np.abs(values[outside]))) for values in (z1_values, z2_values, v_values))
    support_ok = leak <= SIMULATE_CONFIG['support_tolerance'] * scale
    if not support_ok:
        raise SupportViolationError(f"(z, v) reaches {leak:.3e} outside the support of the data")

    y_hat = np.hstack([_evaluate_on(e, coords, np.ones_like(inside)) for e in manufactured.y_hat])
    states = y_hat - np.hstack([z1_values, z2_values])
    control = -v_values
    residual, residual_max = one_control_residual(ds, states, control)
    boundary = float(max(np.max(np.abs(z1_values[[0, -1]])), np.max(np.abs(z2_values[[0, -1]]))))
    report = AssemblyReport(
        spacing=max(grid.spacing), steps=grid.steps, residual=residual, residual_max=residual_max,
        terminal_norm=grid.norm(states[-1]), boundary_in_time=boundary, leak=leak,
        support_ok=support_ok, control_norm=float(np.sqrt(grid.dt * grid.cell_volume * np.sum(control ** 2))),
        window=solver.window,
    )
    status(f"📊 h={report.spacing:.5f}: residual {residual:.3e}, |y(T)| {report.terminal_norm:.1e}", 2)
    return report


def compute_rates(h_list: Sequence[float], err_list: Sequence[float]) -> List[Optional[float]]:
    """Observed orders rate_k = log(e_{k-1}/e_k) / log(h_{k-1}/h_k); None for the first entry."""
    rates = [None]
    for k in range(1, len(h_list)):
        if err_list[k] > 0 and err_list[k - 1] > 0:
            rates.append(float(np.log(err_list[k - 1] / err_list[k]) / np.log(h_list[k - 1] / h_list[k])))
        else:
            rates.append(None)
    return rates


@dataclass
class AssemblyStudy:
    reports: List[AssemblyReport]
    rates: List[Optional[float]] = field(default_factory=list)

    @property
    def observed_order(self) -> Optional[float]:
        return self.rates[-1] if len(self.rates) > 1 else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'h [length]': [r.spacing for r in self.reports],
            'steps [1]': [r.steps for r in self.reports],
            'residual [1]': [r.residual for r in self.reports],
            'residual_max [1]': [r.residual_max for r in self.reports],
            'rate [1]': [np.nan if rate is None else rate for rate in self.rates],
            'terminal_norm [state]': [r.terminal_norm for r in self.reports],
        })

    def to_dict(self) -> dict:
        return {
            'reports': [r.to_dict() for r in self.reports],
            'rates': self.rates,
            'observed_order': self.observed_order,
        }


def refinement_study(system: ParabolicSystem, manufactured: ManufacturedSolution, solver: FullSolver,
                     spacings: Sequence[float] = None, theta: float = None, min_order: float = None,
                     max_workers: int = None) -> AssemblyStudy:
    """
    Run fictitious_assembly with dt = h on each spacing and compute observed orders.

    Raises:
        ConvergenceOrderError: the finest observed order is below min_order
    """
    spacings = list(spacings or SIMULATE_CONFIG['assembly_spacings'])
    min_order = SIMULATE_CONFIG['min_convergence_order'] if min_order is None else min_order
    max_workers = max_workers or PARALLEL_CONFIG['max_workers']
    status(f"🚀 Assembly refinement over h = {', '.join(f'{h:.5f}' for h in spacings)}", 1)

    def run(h):
        grid = Grid.uniform(system.domain, system.horizon, spacing=h, dt=h)
        return fictitious_assembly(system, grid, manufactured, solver, theta)

    reports = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_spacing = {executor.submit(run, h): h for h in spacings}
        for future in concurrent.futures.as_completed(future_to_spacing):
            h = future_to_spacing[future]
            reports[h] = future.result(timeout=PARALLEL_CONFIG['task_timeout'])

    ordered = [reports[h] for h in spacings]
    study = AssemblyStudy(reports=ordered,
                          rates=compute_rates(spacings, [r.residual for r in ordered]))
    order = study.observed_order
    if order is not None:
        status(f"📊 observed order {order:.3f}", 1)
        if order < min_order:
            raise ConvergenceOrderError(f"observed order {order:.3f} below {min_order}", study.rates)
    return study
