# simulate/hum.py
"""
Penalized HUM controls

Discretize-then-optimize: with y(T) = y_free + R u, the minimizer of
J(u) = 1/2 |u|^2 + 1/(2 eps) |y(T)|^2 is u = R^T phi / dt, where phi solves

    (R R^T / dt + eps) phi = -y_free

R^T is applied by the exact adjoint sweep of the discrete system, so the
operator is symmetric positive definite and plain conjugate gradients apply.

Features:
- Dual CG tracking the dual functional per iteration
- eps sweeps over a worker pool with log-log slope and plateau detection
"""

import concurrent.futures
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from config.config import PARALLEL_CONFIG, SIMULATE_CONFIG, status
from .discrete import CONTROL_MODES, DiscreteSystem, _initial_state
from .errors import DiscretizationError


@dataclass
class HUMResult:
    epsilon: float
    u: np.ndarray
    terminal_state: np.ndarray
    terminal_norm: float
    control_norm: float
    cost: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)

    def to_row(self) -> dict:
        return {
            'epsilon': self.epsilon,
            'terminal_norm': self.terminal_norm,
            'control_norm': self.control_norm,
            'cost': self.cost,
            'iterations': self.iterations,
            'converged': self.converged,
        }


def hum_control(ds: DiscreteSystem, y0, epsilon: float, which: str = None, cg_tol: float = None,
                max_iterations: int = None) -> HUMResult:
    """
    Minimize the penalized cost by CG on the dual problem.

    The returned iterate is the last one; `converged` is False when the
    relative residual did not drop below cg_tol within max_iterations.
    """
    if epsilon <= 0:
        raise DiscretizationError("the penalty epsilon must be positive")
    which = which or ds.mode
    if which not in CONTROL_MODES:
        raise DiscretizationError(f"unknown control mode '{which}'")
    cg_tol = SIMULATE_CONFIG['cg_tolerance'] if cg_tol is None else cg_tol
    max_iterations = max_iterations or SIMULATE_CONFIG['cg_max_iterations']
    grid = ds.grid
    dt = grid.dt

    y_free = ds.terminal(_initial_state(ds, y0), which=which)
    b = -y_free
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    norm = r @ r
    target = (cg_tol ** 2) * max(norm, np.finfo(float).tiny)
    history = [0.0]
    converged = norm <= target
    iterations = 0

    while not converged and iterations < max_iterations:
        pk_adj = ds.adjoint_controls(p, which)
        curvature = np.sum(pk_adj * pk_adj) / dt + epsilon * (p @ p)
        if curvature <= 0:
            break
        alpha = norm / curvature
        x = x + alpha * p
        r = r - alpha * (ds.terminal(np.zeros_like(p), pk_adj, which) / dt + epsilon * p)
        new_norm = r @ r
        # dual functional 1/2 <Lambda x, x> - <b, x> = -1/2 <b + r, x>
        history.append(-0.5 * (b + r) @ x)
        beta = new_norm / norm
        p = r + beta * p
        norm = new_norm
        iterations += 1
        converged = norm <= target

    u = ds.adjoint_controls(x, which) / dt
    terminal_state = ds.terminal(_initial_state(ds, y0), u, which)
    volume = grid.cell_volume
    control_norm = float(np.sqrt(dt * volume * np.sum(u * u)))
    terminal_norm = grid.norm(terminal_state)
    cost = 0.5 * control_norm ** 2 + terminal_norm ** 2 / (2.0 * epsilon)
    return HUMResult(epsilon=epsilon, u=u, terminal_state=terminal_state, terminal_norm=terminal_norm,
                     control_norm=control_norm, cost=cost, iterations=iterations,
                     converged=bool(converged), history=history)


@dataclass
class HUMSweep:
    results: List[HUMResult]
    slope: float
    plateau: bool
    failures: List[dict] = field(default_factory=list)

    def to_rows(self) -> List[dict]:
        return [r.to_row() for r in self.results]

    def monotone(self, slack: float = 1e-8) -> bool:
        """|y(T)| non-increasing and |u| non-decreasing as eps decreases."""
        ordered = sorted(self.results, key=lambda r: -r.epsilon)
        for before, after in zip(ordered, ordered[1:]):
            if after.terminal_norm > before.terminal_norm * (1 + slack) + slack:
                return False
            if after.control_norm < before.control_norm * (1 - slack) - slack:
                return False
        return True


def loglog_slope(epsilons: Sequence[float], norms: Sequence[float]) -> float:
    """Least-squares slope of log |y(T)| against log eps."""
    x = np.log(np.asarray(epsilons, dtype=float))
    y = np.log(np.maximum(np.asarray(norms, dtype=float), np.finfo(float).tiny))
    return float(np.polyfit(x, y, 1)[0])


def detect_plateau(epsilons: Sequence[float], norms: Sequence[float], ratio: float = 0.9) -> bool:
    """True when the last decade of eps reduces |y(T)| by less than the given ratio."""
    order = np.argsort(epsilons)[::-1]
    ordered = np.asarray(norms, dtype=float)[order]
    if len(ordered) < 2:
        return False
    return bool(ordered[-1] >= ratio * ordered[-2])


def hum_sweep(ds: DiscreteSystem, y0, epsilons: Sequence[float], which: str = None,
              cg_tol: float = None, max_workers: int = None) -> HUMSweep:
    """Run hum_control for every eps in parallel; results are sorted by decreasing eps."""
    max_workers = max_workers or PARALLEL_CONFIG['max_workers']
    status(f"🚀 HUM sweep over {len(epsilons)} penalties ({which or ds.mode}, {max_workers} workers)", 1)
    results, failures = [], []
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_epsilon = {
            executor.submit(hum_control, ds, y0, eps, which, cg_tol): eps
            for eps in epsilons
        }
        for future in concurrent.futures.as_completed(future_to_epsilon):
            eps = future_to_epsilon[future]
            try:
                result = future.result(timeout=PARALLEL_CONFIG['task_timeout'])
                results.append(result)
                flag = '✅' if result.converged else '⚠️'
                status(f"{flag} eps={eps:.1e}: |y(T)|={result.terminal_norm:.3e}, "
                       f"|u|={result.control_norm:.3e}, {result.iterations} CG iterations", 2)
            except concurrent.futures.TimeoutError:
                status(f"❌ eps={eps:.1e}: timed out", 2)
                failures.append({'epsilon': eps, 'success': False, 'error': 'timeout'})
            except Exception as e:
                status(f"❌ eps={eps:.1e}: {e}", 2)
                failures.append({'epsilon': eps, 'success': False, 'error': str(e)})
    results.sort(key=lambda r: -r.epsilon)
    slope, plateau = float('nan'), False
    if len(results) >= 2:
        eps = [r.epsilon for r in results]
        norms = [r.terminal_norm for r in results]
        slope = loglog_slope(eps, norms)
        plateau = detect_plateau(eps, norms)
    status(f"📊 log-log slope {slope:.3f}, plateau={plateau}", 1)
    return HUMSweep(results=results, slope=slope, plateau=plateau, failures=failures)
