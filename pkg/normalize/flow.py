# normalize/flow.py
"""
Characteristic-flow straightening of the first-order coupling

The flow of the (time independent) coupling field g21 started from an
axis-aligned base segment gives coordinates (s, z) in which g21.grad is the
derivative in s. The flow is integrated once per base point, tabulated on
an (s, z) grid and wrapped as quintic spline fields, so pulled-back
coefficients stay ordinary expressions.

Features:
- Base segment chosen on the window face where the field points inward
- Variational equations for the Jacobian determinant at every table node
- Extent shrinking on fold-over or exit from the window
- Newton inverse, CSV export and pull-back of arbitrary expressions
"""

import concurrent.futures
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from config.config import NORMALIZE_CONFIG, PARALLEL_CONFIG, status
from solvability import ParabolicSystem, Window, divergence_drift
from symbolic import (
    ONE, ZERO, Expression, add, compose, differentiate, div, evaluate_array, mul, neg, sub,
    tabulated_field,
)
from .errors import NormalizationError


@dataclass
class FlowMap:
    """
    Tabulated map Lambda(s, z) = Phi(s, F(z)) with F(z) = (x_gamma, z).

    `values[..., k]` holds the k-th space component on the (s, z) grid;
    time is not transformed.
    """

    dimension: int
    edge: str
    x_gamma: float
    epsilon: float
    s_grid: np.ndarray
    z_grid: Optional[np.ndarray]
    values: np.ndarray
    det_jacobian: np.ndarray
    components: Tuple[Expression, ...]
    time_range: Tuple[float, float]

    @property
    def new_domain(self) -> Tuple[Tuple[float, float], ...]:
        box = [(0.0, self.epsilon)]
        if self.dimension == 2:
            box.append((float(self.z_grid[0]), float(self.z_grid[-1])))
        return tuple(box)

    def substitutions(self) -> dict:
        return {k + 1: c for k, c in enumerate(self.components)}

    def pull_back(self, expr: Expression) -> Expression:
        """expr o Lambda, an expression in (t, s, z)."""
        return compose(expr, self.substitutions())

    def jacobian(self) -> List[List[Expression]]:
        """J[k][a] = d Lambda^k / d xi_a as expressions in (t, s, z)."""
        return [[differentiate(c, a + 1) for a in range(self.dimension)] for c in self.components]

    def forward(self, s, z=None) -> np.ndarray:
        coords = [np.zeros_like(np.asarray(s, dtype=float)), np.asarray(s, dtype=float)]
        if self.dimension == 2:
            coords.append(np.asarray(z, dtype=float))
        return np.stack([evaluate_array(c, coords) for c in self.components], axis=-1)

    def inverse(self, x: Sequence[float]) -> np.ndarray:
        """Newton iteration for (s, z) with Lambda(s, z) = x, started at the nearest table node."""
        x = np.asarray(x, dtype=float)
        flat = self.values.reshape(-1, self.dimension)
        nearest = int(np.argmin(np.sum((flat - x) ** 2, axis=1)))
        if self.dimension == 1:
            xi = np.array([self.s_grid[nearest]])
        else:
            i, j = np.unravel_index(nearest, self.values.shape[:2])
            xi = np.array([self.s_grid[i], self.z_grid[j]])
        jacobian = self.jacobian()
        lower = np.array([lo for lo, _ in self.new_domain])
        upper = np.array([hi for _, hi in self.new_domain])
        for _ in range(NORMALIZE_CONFIG['newton_iterations']):
            point = [np.array([0.0])] + [np.array([v]) for v in xi]
            image = np.array([evaluate_array(c, point)[0] for c in self.components])
            defect = image - x
            if np.max(np.abs(defect)) <= NORMALIZE_CONFIG['newton_tolerance']:
                return xi
            J = np.array([[evaluate_array(e, point)[0] for e in row] for row in jacobian])
            xi = np.clip(xi - np.linalg.solve(J, defect), lower, upper)
        raise NormalizationError(f"Newton inverse did not converge for x = {x.tolist()}")

    def to_frame(self) -> pd.DataFrame:
        """Table (t, s, z, Lambda, det J) at the start of the time range."""
        t0 = self.time_range[0]
        if self.dimension == 1:
            frame = pd.DataFrame({
                't [time]': t0,
                's [length]': self.s_grid,
                'Lambda_t [time]': t0,
                'Lambda_x1 [length]': self.values[:, 0],
                'det_J [1]': self.det_jacobian,
            })
        else:
            s, z = np.meshgrid(self.s_grid, self.z_grid, indexing='ij')
            frame = pd.DataFrame({
                't [time]': t0,
                's [length]': s.ravel(),
                'z [length]': z.ravel(),
                'Lambda_t [time]': t0,
                'Lambda_x1 [length]': self.values[..., 0].ravel(),
                'Lambda_x2 [length]': self.values[..., 1].ravel(),
                'det_J [1]': self.det_jacobian.ravel(),
            })
        return frame

    def to_dict(self) -> dict:
        return {
            'dimension': self.dimension,
            'edge': self.edge,
            'x_gamma': self.x_gamma,
            'epsilon': self.epsilon,
            'table_size': int(len(self.s_grid)),
            'min_det_jacobian': float(np.min(np.abs(self.det_jacobian))),
        }


def _field_function(g21: Sequence[Expression]):
    """Right-hand side for a batch of trajectories; the state stacks x then dx/dz."""
    dimension = len(g21)
    gradient = [[differentiate(g, b + 1) for b in range(dimension)] for g in g21]

    def velocity(x):
        point = [np.zeros_like(x[0])] + list(x)
        return np.stack([evaluate_array(g, point) for g in g21])

    def rhs(s, state):
        X = state.reshape(-1, state.size // (2 * dimension if dimension == 2 else 1))
        x = X[:dimension]
        moving = velocity(x)
        if dimension == 1:
            return moving.ravel()
        tangent = X[dimension:]
        point = [np.zeros_like(x[0])] + list(x)
        dg = [[evaluate_array(e, point) for e in row] for row in gradient]
        turning = np.stack([sum(dg[a][b] * tangent[b] for b in range(dimension)) for a in range(dimension)])
        return np.concatenate([moving, turning]).ravel()

    return rhs, velocity


def choose_base_edge(g21: Sequence[Expression], window: Window, samples: int = 16) -> str:
    """Face x1 = lower (field pointing in +x1) or x1 = upper (field pointing in -x1)."""
    points = window.cell_centers(samples)
    first = evaluate_array(g21[0], points)
    if np.all(first > 0):
        return 'lower'
    if np.all(first < 0):
        return 'upper'
    raise NormalizationError("the x1 component of g21 changes sign on the window; "
                             "restrict the window so the base segment is transversal")


def _trace(rhs, start, epsilon, s_grid, ode_tol):
    solution = solve_ivp(rhs, (0.0, epsilon), start, method='RK45', t_eval=s_grid,
                         rtol=ode_tol, atol=ode_tol)
    if not solution.success:
        raise NormalizationError(f"flow integration failed: {solution.message}")
    return solution.y


def tabulate_flow(g21: Sequence[Expression], window: Window, epsilon: float, edge: str,
                  table_size: int, ode_tol: float, z_range: Tuple[float, float] = None):
    """Integrate the flow from every base point; returns (s_grid, z_grid, values, det J)."""
    dimension = len(g21)
    x_gamma = window.lower[1] if edge == 'lower' else window.upper[1]
    s_grid = np.linspace(0.0, epsilon, table_size)
    rhs, velocity = _field_function(g21)
    if dimension == 1:
        path = _trace(rhs, np.array([x_gamma]), epsilon, s_grid, ode_tol)
        values = path.T
        det = velocity(path)[0]
        return s_grid, None, values, det

    z_grid = np.linspace(z_range[0], z_range[1], table_size)
    values = np.empty((table_size, table_size, 2))
    det = np.empty((table_size, table_size))
    chunks = np.array_split(np.arange(table_size), max(1, PARALLEL_CONFIG['max_workers']))
    with concurrent.futures.ThreadPoolExecutor(max_workers=PARALLEL_CONFIG['max_workers']) as executor:
        future_to_chunk = {}
        for chunk in chunks:
            if not len(chunk):
                continue
            k = len(chunk)
            start = np.concatenate([np.full(k, x_gamma), z_grid[chunk], np.zeros(k), np.ones(k)])
            future_to_chunk[executor.submit(_trace, rhs, start, epsilon, s_grid, ode_tol)] = chunk
        for future in concurrent.futures.as_completed(future_to_chunk):
            chunk = future_to_chunk[future]
            k = len(chunk)
            states = future.result(timeout=PARALLEL_CONFIG['task_timeout'])
            for i in range(table_size):
                X = states[:, i].reshape(4, k)
                moving = velocity(X[:2])
                values[i, chunk, 0] = X[0]
                values[i, chunk, 1] = X[1]
                det[i, chunk] = moving[0] * X[3] - moving[1] * X[2]
    return s_grid, z_grid, values, det


def build_flow_map(system: ParabolicSystem, edge: str = None, ode_tol: float = None,
                   table_size: int = None, epsilon: float = None) -> FlowMap:
    """
    Tabulate the straightening map on the control window, shrinking the
    extent until the map stays inside the window with det J bounded away from 0.
    """
    n = system.dimension
    if n not in (1, 2):
        raise NormalizationError("flow straightening is implemented for N = 1 and N = 2")
    g21 = system.g21
    if any(0 in g.free_variables for g in g21):
        raise NormalizationError("g21 must not depend on time")
    ode_tol = ode_tol or NORMALIZE_CONFIG['ode_tol']
    table_size = table_size or NORMALIZE_CONFIG['table_size']
    window = system.control_window
    space_window = Window((0.0,) + window.lower[1:], (1.0,) + window.upper[1:])
    edge = edge or choose_base_edge(g21, space_window)
    x_gamma = window.lower[1] if edge == 'lower' else window.upper[1]
    if n == 2:
        margin = 0.1 * (window.upper[2] - window.lower[2])
        z_range = (window.lower[2] + margin, window.upper[2] - margin)
    else:
        z_range = None

    base = evaluate_array(g21[0], space_window.cell_centers(16))
    speed = float(np.max(np.abs(base)))
    if speed == 0.0:
        raise NormalizationError("g21 vanishes on the window")
    extent = epsilon or NORMALIZE_CONFIG['epsilon_fraction'] * (window.upper[1] - window.lower[1]) / speed
    lower = np.array(window.lower[1:])
    upper = np.array(window.upper[1:])
    while extent >= NORMALIZE_CONFIG['epsilon_floor']:
        s_grid, z_grid, values, det = tabulate_flow(g21, window, extent, edge, table_size, ode_tol, z_range)
        inside = np.all((values >= lower - 1e-12) & (values <= upper + 1e-12))
        sign_ok = np.all(det > NORMALIZE_CONFIG['min_jacobian']) or np.all(det < -NORMALIZE_CONFIG['min_jacobian'])
        if inside and sign_ok:
            break
        status(f"⚠️ Flow left the window or folded at extent {extent:.3e}; shrinking", 2)
        extent *= NORMALIZE_CONFIG['epsilon_shrink']
    else:
        raise NormalizationError(f"flow extent fell below {NORMALIZE_CONFIG['epsilon_floor']:.1e} "
                                 "without a valid diffeomorphism")

    degree = NORMALIZE_CONFIG['spline_degree']
    if n == 1:
        components = (tabulated_field('Lambda1', (1,), (s_grid,), values[:, 0], degree),)
    else:
        components = tuple(tabulated_field(f'Lambda{k + 1}', (1, 2), (s_grid, z_grid), values[..., k], degree)
                           for k in range(2))
    flow = FlowMap(dimension=n, edge=edge, x_gamma=x_gamma, epsilon=extent, s_grid=s_grid, z_grid=z_grid,
                   values=values, det_jacobian=det, components=components,
                   time_range=(window.lower[0], window.upper[0]))
    status(f"✅ Flow tabulated from the {edge} face, extent {extent:.4g}, "
           f"min |det J| {np.min(np.abs(det)):.3e}", 2)
    return flow


def _inverse_jacobian(J):
    n = len(J)
    if n == 1:
        return [[div(ONE, J[0][0])]]
    det = sub(mul(J[0][0], J[1][1]), mul(J[0][1], J[1][0]))
    return [[div(J[1][1], det), div(neg(J[0][1]), det)],
            [div(neg(J[1][0]), det), div(J[0][0], det)]]


def _pull_back_operator(flow: FlowMap, P, d, g, a):
    """New (d, g, a) of the l-th equation in (s, z) coordinates."""
    n = flow.dimension
    pulled_d = [[flow.pull_back(d[i][j]) for j in range(n)] for i in range(n)]
    pulled_b = [flow.pull_back(b) for b in divergence_drift(d, g)]
    components = flow.components
    hessian = [[[differentiate(differentiate(components[k], b + 1), c + 1) for c in range(n)]
                for b in range(n)] for k in range(n)]
    new_d = [[add(*(mul(P[a_][i], pulled_d[i][j], P[b_][j]) for i in range(n) for j in range(n)))
              for b_ in range(n)] for a_ in range(n)]
    second = {}
    for a_ in range(n):
        for i in range(n):
            for j in range(n):
                second[a_, i, j] = neg(add(*(mul(P[a_][k], hessian[k][b][c], P[b][i], P[c][j])
                                             for k in range(n) for b in range(n) for c in range(n))))
    new_b = [add(*(mul(P[a_][i], pulled_b[i]) for i in range(n)),
                 *(mul(pulled_d[i][j], second[a_, i, j]) for i in range(n) for j in range(n)))
             for a_ in range(n)]
    new_g = [sub(new_b[a_], add(*(differentiate(new_d[b][a_], b + 1) for b in range(n)))) for a_ in range(n)]
    new_d = [[new_d[i][j] if i <= j else new_d[j][i] for j in range(n)] for i in range(n)]
    return tuple(tuple(row) for row in new_d), tuple(new_g), flow.pull_back(a)


def _pull_back_first_order(flow: FlowMap, P, g, a):
    n = flow.dimension
    pulled = [flow.pull_back(c) for c in g]
    return tuple(add(*(mul(P[a_][i], pulled[i]) for i in range(n))) for a_ in range(n)), flow.pull_back(a)


def coupling_residual(flow: FlowMap, g21: Sequence[Expression], samples: int = 24) -> float:
    """max |J^-1 g21(Lambda) - e1| on the (s, z) table range."""
    P = _inverse_jacobian(flow.jacobian())
    n = flow.dimension
    box = Window((flow.time_range[0],) + tuple(lo for lo, _ in flow.new_domain),
                 (flow.time_range[1],) + tuple(hi for _, hi in flow.new_domain))
    points = box.cell_centers(samples)
    worst = 0.0
    for a_ in range(n):
        transported = add(*(mul(P[a_][i], flow.pull_back(g21[i])) for i in range(n)))
        target = 1.0 if a_ == 0 else 0.0
        worst = max(worst, float(np.max(np.abs(evaluate_array(transported, points) - target))))
    return worst


def straighten_coupling(system: ParabolicSystem, edge: str = None, ode_tol: float = None,
                        table_size: int = None, epsilon: float = None):
    """
    Pull the system back through the straightening map.

    Returns:
        tuple: (transformed ParabolicSystem in (t, s, z), FlowMap, coupling residual)
    """
    flow = build_flow_map(system, edge, ode_tol, table_size, epsilon)
    n = system.dimension
    P = _inverse_jacobian(flow.jacobian())
    d1, g11, a11 = _pull_back_operator(flow, P, system.d1, system.g11, system.a11)
    d2, g22, a22 = _pull_back_operator(flow, P, system.d2, system.g22, system.a22)
    g12, a12 = _pull_back_first_order(flow, P, system.g12, system.a12)
    residual = coupling_residual(flow, system.g21)
    window = system.control_window
    new_domain = flow.new_domain
    new_window = Window((window.lower[0],) + tuple(lo for lo, _ in new_domain),
                        (window.upper[0],) + tuple(hi for _, hi in new_domain))
    transformed = ParabolicSystem(
        dimension=n, d1=d1, d2=d2, g11=g11, g12=g12,
        g21=tuple(ONE if i == 0 else ZERO for i in range(n)), g22=g22,
        a11=a11, a12=a12, a21=flow.pull_back(system.a21), a22=a22,
        domain=new_domain, control_window=new_window, horizon=system.horizon,
        d0=None, normal_form=False, name=f"{system.name} (straightened)".strip(),
    )
    status(f"📊 Coupling residual after straightening: {residual:.3e}", 2)
    return transformed, flow, residual
