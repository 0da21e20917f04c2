# normalize/gauge.py
"""
Gauge removal of the zero-order coupling

With the coupling already equal to d/dx1 + a21, both unknowns are rescaled
by theta = exp(-Phi), Phi(x) = integral of a21 in x1 from the gauge origin.
Since d/dx1 Phi = a21 exactly, the new a21 is structurally zero.
"""

from dataclasses import dataclass

import numpy as np

from config.config import NORMALIZE_CONFIG, status
from solvability import ParabolicSystem, unit_vector
from symbolic import (
    ZERO, Expression, add, differentiate, evaluate_array, exp, mul, neg, primitive, sub, to_text,
)
from .errors import NormalizationError


@dataclass
class GaugeFunction:
    theta: Expression
    potential: Expression
    origin: float
    lower_bound: float
    identity_residual: float

    def to_dict(self) -> dict:
        return {
            'theta': to_text(self.theta),
            'origin': self.origin,
            'lower_bound': self.lower_bound,
            'identity_residual': self.identity_residual,
        }


def _gauge_equation(dimension, d, g, a, potential):
    """Coefficients of one equation after y = theta w, theta = exp(-potential)."""
    grad = [differentiate(potential, i + 1) for i in range(dimension)]
    # theta^-1 d_i theta = -d_i Phi ; theta^-1 d_ij theta = d_i Phi d_j Phi - d_ij Phi
    log_grad = [neg(p) for p in grad]
    new_g = tuple(add(g[i], *(mul(2.0, d[i][j], log_grad[j]) for j in range(dimension)))
                  for i in range(dimension))
    divergence = []
    for i in range(dimension):
        for j in range(dimension):
            divergence.append(mul(differentiate(d[i][j], i + 1), log_grad[j]))
            divergence.append(mul(d[i][j], sub(mul(grad[i], grad[j]), differentiate(grad[i], j + 1))))
    drift = [mul(g[i], log_grad[i]) for i in range(dimension)]
    new_a = add(a, *divergence, *drift, differentiate(potential, 0))
    return new_g, new_a


def _coupling_zero_order(dimension, g, a, potential):
    return add(a, *(mul(g[i], neg(differentiate(potential, i + 1))) for i in range(dimension)))


def gauge_transform(system: ParabolicSystem, origin: float = None, samples: int = None):
    """
    Remove a21 by the rescaling theta.

    Returns:
        tuple: (transformed ParabolicSystem in normal form, GaugeFunction)

    Raises:
        NormalizationError: g21 is not e1 on the control window
    """
    n = system.dimension
    samples = samples or NORMALIZE_CONFIG['gauge_samples']
    points = system.control_window.cell_centers(min(samples, 12) if n > 1 else samples)
    target = unit_vector(n)
    for g, e in zip(system.g21, target):
        if float(np.max(np.abs(evaluate_array(sub(g, e), points)))) > 1e-10:
            raise NormalizationError("gauge removal needs the coupling d/dx1 + a21; straighten it first")

    lo, hi = system.domain[0]
    origin = NORMALIZE_CONFIG['gauge_origin'] if origin is None else origin
    origin = min(max(origin, lo), hi)
    potential = primitive(system.a21, 1, origin)
    theta = exp(neg(potential))

    g11, a11 = _gauge_equation(n, system.d1, system.g11, system.a11, potential)
    g22, a22 = _gauge_equation(n, system.d2, system.g22, system.a22, potential)
    a12 = _coupling_zero_order(n, system.g12, system.a12, potential)
    a21 = _coupling_zero_order(n, system.g21, system.a21, potential)

    theta_values = evaluate_array(theta, points)
    lower_bound = float(np.min(np.abs(theta_values)))
    if lower_bound <= 0:
        raise NormalizationError("gauge function vanishes on the control window")
    identity = add(differentiate(theta, 1), mul(system.a21, theta))
    identity_residual = float(np.max(np.abs(evaluate_array(identity, points))))
    a21_residual = float(np.max(np.abs(evaluate_array(a21, points))))

    transformed = system.replace(g11=g11, g22=g22, a11=a11, a12=a12, a21=a21, a22=a22,
                                 normal_form=a21_residual <= 1e-10,
                                 name=f"{system.name} (gauged)".strip())
    gauge = GaugeFunction(theta=theta, potential=potential, origin=origin, lower_bound=lower_bound,
                          identity_residual=identity_residual)
    status(f"✅ Gauge theta = {to_text(theta)[:60]}, min |theta| {lower_bound:.3e}", 2)
    return transformed, gauge
