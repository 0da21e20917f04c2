# symbolic/calculus.py
"""
Adaptive quadrature of expressions along one variable.
"""

from typing import Sequence

import numpy as np
from scipy.integrate import quad

from config.config import SYMBOLIC_CONFIG
from .errors import QuadratureError
from .expression import Expression, as_expression, breakpoints, evaluate_array, variable_name


def _line_function(expr: Expression, variable: int, point: Sequence[float]):
    needed = max(max(expr.free_variables, default=0), variable) + 1
    base = [float(p) for p in point] if point is not None else []
    base = base + [0.0] * max(0, needed - len(base))

    def f(x):
        coords = list(base)
        coords[variable] = x
        return float(evaluate_array(expr, [np.array([c]) for c in coords])[0])

    return f


def integrate_adaptive(expr, variable: int, lo: float, hi: float, tol: float = None,
                       point: Sequence[float] = None) -> float:
    """
    Integrate `expr` in `variable` over [lo, hi] to absolute error `tol`.

    Other variables are bound to the coordinates in `point` (zero when
    omitted). Bump and blend edges inside the interval are passed to the
    Gauss-Kronrod integrator as breakpoints.

    Raises:
        QuadratureError: no convergence within the subdivision limit
        EvaluationError: the integrand cannot be evaluated inside the interval
    """
    expr = as_expression(expr)
    tol = SYMBOLIC_CONFIG['quad_tol'] if tol is None else tol
    if lo == hi:
        return 0.0
    if lo > hi:
        return -integrate_adaptive(expr, variable, hi, lo, tol, point)
    if variable not in expr.free_variables:
        f = _line_function(expr, variable, point)
        return f(0.5 * (lo + hi)) * (hi - lo)
    inner = [p for p in breakpoints(expr, variable) if lo < p < hi]
    f = _line_function(expr, variable, point)
    result = quad(f, lo, hi, epsabs=tol, epsrel=0.0, limit=SYMBOLIC_CONFIG['quad_limit'],
                  points=inner or None, full_output=1)
    value, error = result[0], result[1]
    if len(result) == 4 and error > tol:
        raise QuadratureError(
            f"quadrature in {variable_name(variable)} over [{lo}, {hi}] reached error "
            f"{error:.3e} > {tol:.3e}: {result[3]}")
    return float(value)
