# spectral/counterexample.py
"""
One-dimensional counterexample on (0, pi)

psi is sin(3x) blended to the constant sin(7 pi/5) on the control window
omega = (7 pi/15, 8 pi/15), plus nonnegative bumps theta1, theta2, theta3
away from omega. With

    phi(x) = alpha sin(3x) - int_0^x cos(3(x - y)) psi(y) dy
           = alpha sin(3x) - (1/3) int_0^x sin(3(x - y)) psi'(y) dy

and a = (-psi'' - 9 psi) / psi, the pair (phi, psi) solves
-phi'' - psi' = 9 phi, -psi'' - a psi = 9 psi with Dirichlet data. The
constants are chosen so that phi vanishes on omega and at pi, which makes the
one-control system uncontrollable from omega.

Features:
- Blend width derived from the collar tolerance
- Unit-mass bumps or the exponential profile for theta1
- C1 and alpha from the vanishing conditions on omega
- Two-case choice between C2 and C3 so that phi(pi) = 0
- Sampled invariant checks and refinement residuals of both equations
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from config.config import SPECTRAL_CONFIG, status
from simulate.assembly import compute_rates
from solvability import ParabolicSystem, Window
from symbolic import (
    Expression, add, blend, bump, cos, differentiate, div, evaluate_array, exp, integrate_adaptive,
    mul, neg, primitive, sin, sub, var,
)
from .errors import ConstructionError

PI = math.pi
S7 = math.sin(7 * PI / 5)
C7 = math.cos(7 * PI / 5)


def _x():
    return var(1)


def _sin3():
    return sin(mul(3.0, _x()))


def _cos3():
    return cos(mul(3.0, _x()))


def blend_width(epsilon: float, edge: float, collar: float) -> float:
    """Largest w <= collar with |sin(3x) - sin(7 pi/5)| <= epsilon on [edge - w, edge]."""
    def excess(w):
        return abs(math.sin(3 * (edge - w)) - S7) - epsilon

    if excess(collar) <= 0:
        return collar
    return brentq(excess, 1e-14, collar, xtol=1e-15)


def unit_bump(lo: float, hi: float, tol: float) -> Expression:
    """exp(-1/(1 - r^2)) profile on (lo, hi) scaled to unit mass."""
    profile = bump([(1, lo, hi)])
    mass = integrate_adaptive(profile, 1, lo, hi, tol)
    return mul(1.0 / mass, profile)


def exponential_profile(support: Tuple[float, float], plateau: Tuple[float, float]) -> Expression:
    """exp(x) on the plateau, cut off smoothly inside the support."""
    lo, hi = support
    plo, phi_ = plateau
    if not lo < plo < phi_ < hi:
        raise ConstructionError(f"plateau {plateau} must lie strictly inside {support}")
    return mul(exp(_x()), blend(1, lo, plo), blend(1, hi, phi_))


@dataclass
class CounterexampleData:
    psi: Expression
    base: Expression
    phi: Expression
    a: Expression
    c1: float
    c2: float
    c3: float
    alpha: float
    eigenvalue: float
    omega: Tuple[float, float]
    bumps: Tuple[Expression, Expression, Expression]
    supports: Tuple[Tuple[float, float], ...]
    profile: str
    blend_tolerance: float
    blend_width: float
    dichotomy: float
    checks: Dict[str, float] = field(default_factory=dict)

    @property
    def branch(self) -> str:
        return 'C2' if self.c2 > 0 else 'C3'

    @property
    def active_bump(self) -> Expression:
        return self.bumps[1] if self.branch == 'C2' else self.bumps[2]

    def sample(self, count: int = None) -> pd.DataFrame:
        count = count or SPECTRAL_CONFIG['sample_count']
        x = np.linspace(0.0, PI, count)
        coords = [np.zeros_like(x), x]
        return pd.DataFrame({
            'x [length]': x,
            'psi [1]': evaluate_array(self.psi, coords),
            'phi [1]': evaluate_array(self.phi, coords),
            'a [1/time]': evaluate_array(self.a, coords),
        })

    def to_dict(self) -> dict:
        return {
            'eigenvalue': self.eigenvalue,
            'omega': list(self.omega),
            'C1': self.c1,
            'C2': self.c2,
            'C3': self.c3,
            'alpha': self.alpha,
            'branch': self.branch,
            'theta1_profile': self.profile,
            'supports': [list(s) for s in self.supports],
            'blend_tolerance': self.blend_tolerance,
            'blend_width': self.blend_width,
            'dichotomy': self.dichotomy,
            'checks': self.checks,
        }


def _moment(expr: Expression, weight: Expression, lo: float, hi: float, tol: float) -> float:
    return integrate_adaptive(mul(weight, expr), 1, lo, hi, tol)


def _solve_branch(psi1: Expression, theta: Expression, support, tol: float, weight_sign: float) -> Tuple[float, Expression]:
    """Constant C >= 0 with int_0^pi cos(3y) (psi1 + C theta) = 0, retrying once on a narrower bump."""
    base = _moment(psi1, _cos3(), 0.0, PI, tol)
    for attempt in range(2):
        j = _moment(theta, _cos3(), support[0], support[1], tol)
        constant = -base / j if j != 0 else -1.0
        if constant >= 0 and np.sign(j) == weight_sign:
            return constant, theta
        if attempt == 0:
            lo, hi = support
            quarter = 0.25 * (hi - lo)
            support = (lo + quarter, hi - quarter)
            theta = unit_bump(support[0], support[1], tol)
            status(f"⚠️ Negative bump constant, retrying on {support}", 2)
    raise ConstructionError("the phi(pi) = 0 condition needs a negative bump constant")


def build_counterexample_1d(omega: Tuple[float, float] = None, supports: Sequence[Tuple[float, float]] = None,
                            blend_tolerance: float = None, quad_tol: float = None,
                            theta1_profile: str = 'bump', plateau: Tuple[float, float] = None,
                            check: bool = True) -> CounterexampleData:
    """
    Build (psi, phi, a) with eigenvalue 9 and phi = 0 on omega.

    Args:
        omega: control window, (7 pi/15, 8 pi/15) by default
        supports: supports of theta1, theta2, theta3
        blend_tolerance: bound on |psi - sin(3x)| over the collars next to omega
        quad_tol: absolute tolerance of every quadrature
        theta1_profile: 'bump' (unit mass) or 'exp' (exp(x) on the plateau)
        plateau: interval where theta1 = exp(x) for the 'exp' profile

    Raises:
        ConstructionError: a sign condition fails
    """
    omega = tuple(omega or SPECTRAL_CONFIG['omega'])
    supports = list(supports or (SPECTRAL_CONFIG['theta1_support'], SPECTRAL_CONFIG['theta2_support'],
                                 SPECTRAL_CONFIG['theta3_support']))
    eps = SPECTRAL_CONFIG['blend_tolerance'] if blend_tolerance is None else blend_tolerance
    tol = SPECTRAL_CONFIG['quad_tol'] if quad_tol is None else quad_tol
    plateau = tuple(plateau or SPECTRAL_CONFIG['exp_plateau'])
    x0, x1 = omega
    collar = x1 - x0
    if not (supports[0][1] < x0 - collar and supports[1][0] > x1 + collar):
        raise ConstructionError("bump supports must stay clear of omega and its collars")

    width = blend_width(eps, x0, collar)
    chi = mul(blend(1, x0 - width, x0), blend(1, x1 + width, x1))
    psi0 = add(_sin3(), mul(chi, sub(S7, _sin3())))

    if theta1_profile == 'exp':
        theta1 = exponential_profile(supports[0], plateau)
    elif theta1_profile == 'bump':
        theta1 = unit_bump(*supports[0], tol)
    else:
        raise ConstructionError(f"unknown theta1 profile '{theta1_profile}'")
    theta2 = unit_bump(*supports[1], tol)
    theta3 = unit_bump(*supports[2], tol)

    j1 = _moment(theta1, _cos3(), supports[0][0], supports[0][1], tol)
    if j1 <= 0:
        raise ConstructionError(f"int cos(3y) theta1 = {j1:.3e} must be positive")
    defect = S7 ** 2 / 3.0 - _moment(psi0, _cos3(), 0.0, x0, tol)
    if defect <= 0:
        raise ConstructionError(f"C1 target defect {defect:.3e} is not positive; lower the blend tolerance")
    c1 = defect / j1
    psi1 = add(psi0, mul(c1, theta1))
    alpha = _moment(psi1, _sin3(), 0.0, x0, tol) + S7 * C7 / 3.0

    dichotomy = (_moment(psi1, _cos3(), 0.0, 2 * PI / 3, tol)
                 + _moment(_sin3(), _cos3(), 2 * PI / 3, PI, tol)) / 3.0
    c2 = c3 = 0.0
    if dichotomy < 0:
        c2, theta2 = _solve_branch(psi1, theta2, supports[1], tol, 1.0)
    elif dichotomy > 0:
        c3, theta3 = _solve_branch(psi1, theta3, supports[2], tol, -1.0)
    psi = add(psi1, mul(c2, theta2), mul(c3, theta3))

    cos_part = primitive(mul(_cos3(), psi), 1, 0.0, tol)
    sin_part = primitive(mul(_sin3(), psi), 1, 0.0, tol)
    phi = sub(mul(alpha, _sin3()), add(mul(_cos3(), cos_part), mul(_sin3(), sin_part)))
    psi_second = differentiate(differentiate(psi, 1), 1)
    a = div(sub(neg(psi_second), mul(9.0, psi)), psi, guard=True)

    data = CounterexampleData(
        psi=psi, base=psi0, phi=phi, a=a, c1=c1, c2=c2, c3=c3, alpha=alpha, eigenvalue=9.0, omega=omega,
        bumps=(theta1, theta2, theta3), supports=tuple(tuple(s) for s in supports), profile=theta1_profile,
        blend_tolerance=eps, blend_width=width, dichotomy=dichotomy,
    )
    status(f"✅ Counterexample: C1={c1:.6g}, C2={c2:.6g}, C3={c3:.6g}, alpha={alpha:.6g}", 2)
    if check:
        data.checks = check_counterexample(data)
    return data


def check_counterexample(data: CounterexampleData, count: int = None, omega_points: int = 200) -> Dict[str, float]:
    """
    Sample the invariants of the construction.

    Raises:
        ConstructionError: a sampled invariant exceeds its tolerance
    """
    count = count or SPECTRAL_CONFIG['sample_count']
    phi_tol = SPECTRAL_CONFIG['phi_tolerance']
    x0, x1 = data.omega
    collar = x1 - x0

    def values(expr, x):
        return evaluate_array(expr, [np.zeros_like(x), x])

    ends = np.array([0.0, PI])
    closed_omega = np.linspace(x0, x1, omega_points)
    open_omega = np.linspace(x0, x1, omega_points + 2)[1:-1]
    collars = np.concatenate([np.linspace(x0 - collar, x0, count // 10), np.linspace(x1, x1 + collar, count // 10)])
    x = np.linspace(0.0, PI, count)

    checks = {
        'psi_boundary': float(np.max(np.abs(values(data.psi, ends)))),
        'phi_boundary': float(np.max(np.abs(values(data.phi, ends)))),
        'psi_constancy': float(np.max(np.abs(values(data.psi, closed_omega) - S7))),
        'collar_bound': float(np.max(np.abs(values(sub(data.psi, _sin3()), collars)))),
        'phi_on_omega': float(np.max(np.abs(values(data.phi, open_omega)))),
        'a_max': float(np.max(np.abs(values(data.a, x)))),
        'psi_min_on_omega': float(np.min(np.abs(values(data.psi, open_omega)))),
    }
    if checks['psi_boundary'] > 1e-12:
        raise ConstructionError(f"psi does not vanish at the boundary ({checks['psi_boundary']:.3e})")
    if checks['psi_constancy'] > 1e-12:
        raise ConstructionError(f"psi is not constant on omega ({checks['psi_constancy']:.3e})")
    if checks['collar_bound'] >= data.blend_tolerance:
        raise ConstructionError(f"collar bound {checks['collar_bound']:.3e} >= {data.blend_tolerance}")
    if checks['phi_on_omega'] > phi_tol:
        raise ConstructionError(f"phi does not vanish on omega ({checks['phi_on_omega']:.3e} > {phi_tol:.0e})")
    if checks['phi_boundary'] > phi_tol:
        raise ConstructionError(f"phi does not vanish at the boundary ({checks['phi_boundary']:.3e} > {phi_tol:.0e})")
    status(f"📊 max |phi| on omega {checks['phi_on_omega']:.3e}, |phi| at the ends "
           f"{checks['phi_boundary']:.3e}, max |a| {checks['a_max']:.3f}", 2)
    return checks


def closed_form_potential(data: CounterexampleData) -> Expression:
    """-10 C1 e^x / (sin 3x + C1 e^x), the potential on the exp plateau."""
    growth = mul(data.c1, exp(_x()))
    return div(mul(-10.0, growth), add(_sin3(), growth))


def counterexample_system(data: CounterexampleData, window: Tuple[float, float] = None, horizon: float = 1.0,
                          a: Expression = None, name: str = None) -> ParabolicSystem:
    """dt y1 = y1'' + 1_omega u, dt y2 = y2'' + a y2 + y1' on (0, pi) with the chosen control window."""
    lo, hi = window or data.omega
    return ParabolicSystem.create(
        dimension=1, domain=[(0.0, PI)], control_window=Window((0.0, lo), (float(horizon), hi)),
        horizon=horizon, a22=data.a if a is None else a, normal_form=True,
        name=name or f"counterexample on ({lo:.4f}, {hi:.4f})",
    )


def counterexample_residuals(data: CounterexampleData, spacings: Sequence[float] = None) -> pd.DataFrame:
    """
    Discrete residuals of -phi'' - psi' = 9 phi and -psi'' - a psi = 9 psi at the nodes,
    with observed orders under refinement.
    """
    spacings = list(spacings or SPECTRAL_CONFIG['residual_spacings'])
    rows = {'h [length]': [], 'phi_residual [1]': [], 'psi_residual [1]': []}
    s = data.eigenvalue
    for h in spacings:
        n = int(round(PI / h)) - 1
        x = np.linspace(0.0, PI, n + 2)
        h = x[1] - x[0]
        coords = [np.zeros_like(x), x]
        psi = evaluate_array(data.psi, coords)
        phi = evaluate_array(data.phi, coords)
        a = evaluate_array(data.a, coords)[1:-1]

        def second(v):
            return (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h ** 2

        dpsi = (psi[2:] - psi[:-2]) / (2.0 * h)
        phi_residual = -second(phi) - dpsi - s * phi[1:-1]
        psi_residual = -second(psi) - a * psi[1:-1] - s * psi[1:-1]
        rows['h [length]'].append(h)
        rows['phi_residual [1]'].append(float(np.sqrt(h * np.sum(phi_residual ** 2))))
        rows['psi_residual [1]'].append(float(np.sqrt(h * np.sum(psi_residual ** 2))))
    frame = pd.DataFrame(rows)
    frame['phi_rate [1]'] = [np.nan if r is None else r for r in compute_rates(rows['h [length]'], rows['phi_residual [1]'])]
    frame['psi_rate [1]'] = [np.nan if r is None else r for r in compute_rates(rows['h [length]'], rows['psi_residual [1]'])]
    return frame
