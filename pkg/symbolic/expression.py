# symbolic/expression.py
"""
Expression trees for scalar functions of (t, x1, ..., xN)

Coefficients, eigenfunctions, cut-offs and manufactured solutions are all
stored as immutable expression trees. Variable index 0 is time, index i >= 1
is the space coordinate x_i.

Features:
- Structural simplification at construction (flatten, fold constants,
  collect like terms, merge equal factors into integer powers)
- Deterministic canonical ordering through cached blake2b digests
- Exact symbolic differentiation, including compactly supported bumps,
  smooth blends, running integrals, tabulated spline fields and compositions
- Vectorized numpy evaluation with explicit errors for vanishing
  denominators and non-finite values
"""

from __future__ import annotations

import hashlib
import math
from functools import lru_cache, singledispatch
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad_vec
from scipy.interpolate import RectBivariateSpline, make_interp_spline

from config.config import SYMBOLIC_CONFIG
from .errors import EvaluationError, ExpressionTooLargeError, QuadratureError


def variable_name(index: int) -> str:
    """Printable name of variable `index` (0 is t)."""
    return 't' if index == 0 else f'x{index}'


def _token(value):
    if isinstance(value, float):
        return value.hex()
    if isinstance(value, (tuple, list)):
        return tuple(_token(v) for v in value)
    return value


class Expression:
    """
    Base class of all expression nodes.

    Nodes are immutable after construction; digests, sizes, free variables
    and derivatives are cached on first use.
    """

    rank = 99

    def __init__(self):
        self._digest = None
        self._size = None
        self._free = None
        self._derivatives = {}

    # structure -------------------------------------------------------------
    def children(self) -> Tuple['Expression', ...]:
        return ()

    def params(self) -> tuple:
        return ()

    @property
    def digest(self) -> bytes:
        if self._digest is None:
            h = hashlib.blake2b(digest_size=16)
            h.update(type(self).__name__.encode())
            h.update(repr(_token(self.params())).encode())
            for child in self.children():
                h.update(child.digest)
            self._digest = h.digest()
        return self._digest

    def sort_key(self):
        return (self.rank, self.digest)

    @property
    def node_count(self) -> int:
        if self._size is None:
            self._size = 1 + sum(child.node_count for child in self.children())
        return self._size

    @property
    def free_variables(self) -> frozenset:
        if self._free is None:
            self._free = self._compute_free()
        return self._free

    def _compute_free(self) -> frozenset:
        free = frozenset()
        for child in self.children():
            free = free | child.free_variables
        return free

    def _evaluate(self, evaluator: '_Evaluator') -> np.ndarray:
        raise NotImplementedError

    # comparisons -----------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, Expression) and self.digest == other.digest

    def __hash__(self):
        return int.from_bytes(self.digest[:8], 'big')

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return power(self, int(exponent))

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"{type(self).__name__}({to_text(self)})"


class Const(Expression):
    rank = 0

    def __init__(self, value: float):
        super().__init__()
        self.value = float(value)

    def params(self):
        return (self.value,)

    def _compute_free(self):
        return frozenset()

    def _evaluate(self, evaluator):
        return np.full(evaluator.shape, self.value)


class Var(Expression):
    rank = 1

    def __init__(self, index: int):
        super().__init__()
        if index < 0:
            raise ValueError("variable index must be non-negative")
        self.index = int(index)

    def params(self):
        return (self.index,)

    def _compute_free(self):
        return frozenset({self.index})

    def _evaluate(self, evaluator):
        return evaluator.coords[self.index]


class Add(Expression):
    rank = 6

    def __init__(self, terms: Tuple[Expression, ...]):
        super().__init__()
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def _evaluate(self, evaluator):
        total = np.zeros(evaluator.shape)
        for term in self.terms:
            total = total + evaluator.value(term)
        return total


class Mul(Expression):
    rank = 5

    def __init__(self, factors: Tuple[Expression, ...]):
        super().__init__()
        self.factors = tuple(factors)

    def children(self):
        return self.factors

    def _evaluate(self, evaluator):
        product = np.ones(evaluator.shape)
        for factor in self.factors:
            product = product * evaluator.value(factor)
        return product


class Div(Expression):
    """Quotient; with `guard` set, 0/0 evaluates to 0 (removable zeros)."""

    rank = 4

    def __init__(self, num: Expression, den: Expression, guard: bool = False):
        super().__init__()
        self.num = num
        self.den = den
        self.guard = bool(guard)

    def children(self):
        return (self.num, self.den)

    def params(self):
        return (self.guard,)

    def _evaluate(self, evaluator):
        num = np.broadcast_to(evaluator.value(self.num), evaluator.shape)
        den = np.broadcast_to(evaluator.value(self.den), evaluator.shape)
        zero = den == 0.0
        if np.any(zero):
            bad = zero & (num != 0.0) if self.guard else zero
            if np.any(bad):
                raise EvaluationError("division by zero", evaluator.point_at(bad))
        out = np.zeros(evaluator.shape)
        np.divide(num, den, out=out, where=~zero)
        return out


class Pow(Expression):
    rank = 3

    def __init__(self, base: Expression, exponent: int):
        super().__init__()
        self.base = base
        self.exponent = int(exponent)

    def children(self):
        return (self.base,)

    def params(self):
        return (self.exponent,)

    def _evaluate(self, evaluator):
        return evaluator.value(self.base) ** self.exponent


class UnaryFunction(Expression):
    rank = 2
    name = ''
    ufunc = None

    def __init__(self, arg: Expression):
        super().__init__()
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _evaluate(self, evaluator):
        return type(self).ufunc(evaluator.value(self.arg))


class Sin(UnaryFunction):
    name = 'sin'
    ufunc = np.sin


class Cos(UnaryFunction):
    name = 'cos'
    ufunc = np.cos


class Exp(UnaryFunction):
    name = 'exp'
    ufunc = np.exp


class Bump(Expression):
    """
    Tensor product of exp(-1/(1 - r^2)) profiles, one per (variable, lo, hi)
    axis, with per-axis derivative orders. Zero outside the open box.
    """

    rank = 7

    def __init__(self, axes: Tuple[Tuple[int, float, float], ...], orders: Tuple[int, ...]):
        super().__init__()
        self.axes = tuple(axes)
        self.orders = tuple(int(k) for k in orders)

    def params(self):
        return (self.axes, self.orders)

    def _compute_free(self):
        return frozenset(v for v, _, _ in self.axes)

    def support(self, variable: int):
        for v, lo, hi in self.axes:
            if v == variable:
                return lo, hi
        return None

    def _evaluate(self, evaluator):
        out = np.ones(evaluator.shape)
        for (v, lo, hi), k in zip(self.axes, self.orders):
            out = out * bump_values(evaluator.coords[v], lo, hi, k)
        return out


class Blend(Expression):
    """
    Smooth step in one variable: 0 on the `a` side, 1 on the `b` side,
    transition exp(-1/tau)/(exp(-1/tau) + exp(-1/(1-tau))) with
    tau = (x - a)/(b - a). `order` is the derivative order in x.
    """

    rank = 8

    def __init__(self, variable: int, a: float, b: float, order: int = 0):
        super().__init__()
        self.variable = int(variable)
        self.a = float(a)
        self.b = float(b)
        self.order = int(order)

    def params(self):
        return (self.variable, self.a, self.b, self.order)

    def _compute_free(self):
        return frozenset({self.variable})

    def _evaluate(self, evaluator):
        return blend_values(evaluator.coords[self.variable], self.a, self.b, self.order)


class Primitive(Expression):
    """Running integral of `integrand` in `variable` from the constant `lower`."""

    rank = 9

    def __init__(self, integrand: Expression, variable: int, lower: float, tol: float = None):
        super().__init__()
        self.integrand = integrand
        self.variable = int(variable)
        self.lower = float(lower)
        self.tol = float(tol if tol is not None else SYMBOLIC_CONFIG['primitive_tol'])

    def children(self):
        return (self.integrand,)

    def params(self):
        return (self.variable, self.lower, self.tol)

    def _compute_free(self):
        return self.integrand.free_variables | {self.variable}

    def _evaluate(self, evaluator):
        coords = [np.ravel(c) for c in evaluator.coords]
        x = coords[self.variable]
        only_self = self.integrand.free_variables <= {self.variable}
        if only_self:
            upper, inverse = np.unique(x, return_inverse=True)
            base = [np.zeros_like(upper) for _ in coords]
        else:
            upper, inverse = x, None
            base = coords
        span = upper - self.lower

        def integrand(s):
            shifted = list(base)
            shifted[self.variable] = self.lower + s * span
            return span * evaluate_array(self.integrand, shifted)

        values, _, info = quad_vec(integrand, 0.0, 1.0, epsabs=self.tol, epsrel=0.0,
                                   norm='max', limit=SYMBOLIC_CONFIG['quad_limit'] * 50,
                                   full_output=True)
        if not info.success:
            raise QuadratureError(f"integral in {variable_name(self.variable)} did not converge: "
                                  f"{info.message}")
        values = np.asarray(values)
        if inverse is not None:
            values = values[np.ravel(inverse)]
        return values.reshape(evaluator.shape)


class FieldTable:
    """Tabulated values on a tensor grid, interpolated by a spline."""

    def __init__(self, name: str, variables: Sequence[int], grids: Sequence[np.ndarray],
                 values: np.ndarray, degree: int = 3):
        self.name = name
        self.variables = tuple(int(v) for v in variables)
        self.grids = tuple(np.asarray(g, dtype=float) for g in grids)
        self.values = np.asarray(values, dtype=float)
        self.degree = int(degree)
        if len(self.variables) == 1:
            self.spline = make_interp_spline(self.grids[0], self.values, k=self.degree)
        elif len(self.variables) == 2:
            self.spline = RectBivariateSpline(self.grids[0], self.grids[1], self.values,
                                              kx=self.degree, ky=self.degree, s=0)
        else:
            raise ValueError("tabulated fields support one or two variables")
        h = hashlib.blake2b(digest_size=16)
        for grid in self.grids:
            h.update(np.ascontiguousarray(grid).tobytes())
        h.update(np.ascontiguousarray(self.values).tobytes())
        h.update(str(self.degree).encode())
        self.token = h.hexdigest()

    def bounds(self):
        return [(float(g[0]), float(g[-1])) for g in self.grids]


class TabulatedField(Expression):
    rank = 10

    def __init__(self, table: FieldTable, orders: Tuple[int, ...] = None):
        super().__init__()
        self.table = table
        self.orders = tuple(orders) if orders is not None else (0,) * len(table.variables)

    @property
    def name(self):
        return self.table.name

    def params(self):
        return (self.table.name, self.table.token, self.orders)

    def _compute_free(self):
        return frozenset(self.table.variables)

    def _evaluate(self, evaluator):
        table = self.table
        if any(k > table.degree for k in self.orders):
            raise EvaluationError(f"field '{table.name}': derivative order {self.orders} "
                                  f"exceeds spline degree {table.degree}")
        points = []
        for v, (lo, hi) in zip(table.variables, table.bounds()):
            x = np.broadcast_to(evaluator.coords[v], evaluator.shape)
            slack = 1e-10 * (hi - lo)
            outside = (x < lo - slack) | (x > hi + slack)
            if np.any(outside):
                raise EvaluationError(f"field '{table.name}' evaluated outside its table",
                                      evaluator.point_at(outside))
            points.append(np.clip(x, lo, hi))
        if len(points) == 1:
            values = table.spline(np.ravel(points[0]), nu=self.orders[0])
        else:
            values = table.spline.ev(np.ravel(points[0]), np.ravel(points[1]),
                                     dx=self.orders[0], dy=self.orders[1])
        return np.asarray(values).reshape(evaluator.shape)


class Compose(Expression):
    """`inner` with some variables replaced by other expressions."""

    rank = 11

    def __init__(self, inner: Expression, substitutions: Tuple[Tuple[int, Expression], ...]):
        super().__init__()
        self.inner = inner
        self.substitutions = tuple(substitutions)

    def children(self):
        return (self.inner,) + tuple(e for _, e in self.substitutions)

    def params(self):
        return tuple(v for v, _ in self.substitutions)

    def _compute_free(self):
        replaced = {v for v, _ in self.substitutions}
        free = frozenset(self.inner.free_variables - replaced)
        for _, e in self.substitutions:
            free = free | e.free_variables
        return free

    def _evaluate(self, evaluator):
        coords = list(evaluator.coords)
        for v, e in self.substitutions:
            while len(coords) <= v:
                coords.append(np.zeros(evaluator.shape))
            coords[v] = np.broadcast_to(evaluator.value(e), evaluator.shape)
        return _Evaluator(coords).value(self.inner)


ZERO = Const(0.0)
ONE = Const(1.0)


# construction ----------------------------------------------------------------

def as_expression(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def const(value: float) -> Const:
    return Const(value)


def var(index: int) -> Var:
    return Var(index)


def is_zero(expr: Expression) -> bool:
    return isinstance(expr, Const) and expr.value == 0.0


def is_constant(expr: Expression) -> bool:
    return isinstance(expr, Const)


def _flatten(items: Iterable, cls) -> List[Expression]:
    flat = []
    for item in items:
        item = as_expression(item)
        if isinstance(item, cls):
            flat.extend(item.children())
        else:
            flat.append(item)
    return flat


def _split_coefficient(expr: Expression) -> Tuple[float, Expression]:
    if isinstance(expr, Const):
        return expr.value, ONE
    if isinstance(expr, Mul) and isinstance(expr.factors[0], Const):
        rest = expr.factors[1:]
        return expr.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return 1.0, expr


def _scaled(coefficient: float, expr: Expression) -> Expression:
    if coefficient == 1.0:
        return expr
    if isinstance(expr, Mul):
        return Mul((Const(coefficient),) + expr.factors)
    return Mul((Const(coefficient), expr))


def add(*terms) -> Expression:
    constant = 0.0
    collected: Dict[bytes, list] = {}
    for term in _flatten(terms, Add):
        if isinstance(term, Const):
            constant += term.value
            continue
        coefficient, rest = _split_coefficient(term)
        entry = collected.get(rest.digest)
        if entry is None:
            collected[rest.digest] = [coefficient, rest]
        else:
            entry[0] += coefficient
    parts = [_scaled(c, rest) for c, rest in collected.values() if c != 0.0]
    parts.sort(key=Expression.sort_key)
    if constant != 0.0:
        parts.insert(0, Const(constant))
    if not parts:
        return ZERO
    if len(parts) == 1:
        return parts[0]
    return Add(tuple(parts))


def mul(*factors) -> Expression:
    coefficient = 1.0
    powers: Dict[bytes, list] = {}
    for factor in _flatten(factors, Mul):
        if isinstance(factor, Const):
            coefficient *= factor.value
            continue
        base, exponent = (factor.base, factor.exponent) if isinstance(factor, Pow) else (factor, 1)
        entry = powers.get(base.digest)
        if entry is None:
            powers[base.digest] = [base, exponent]
        else:
            entry[1] += exponent
    if coefficient == 0.0:
        return ZERO
    parts = []
    for base, exponent in powers.values():
        term = power(base, exponent)
        if isinstance(term, Const):
            coefficient *= term.value
        elif isinstance(term, Mul):
            c, rest = _split_coefficient(term)
            coefficient *= c
            parts.extend(rest.factors if isinstance(rest, Mul) else [rest])
        else:
            parts.append(term)
    parts.sort(key=Expression.sort_key)
    if not parts:
        return Const(coefficient)
    if coefficient == 1.0 and len(parts) == 1:
        return parts[0]
    if coefficient != 1.0:
        parts.insert(0, Const(coefficient))
    return Mul(tuple(parts))


def neg(expr) -> Expression:
    return mul(Const(-1.0), expr)


def sub(a, b) -> Expression:
    return add(a, neg(b))


def power(base, exponent: int) -> Expression:
    base = as_expression(base)
    exponent = int(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0.0 and exponent < 0:
            raise EvaluationError("negative power of zero")
        return Const(base.value ** exponent)
    if exponent < 0:
        return div(ONE, power(base, -exponent))
    if isinstance(base, Pow):
        return power(base.base, base.exponent * exponent)
    if isinstance(base, Mul) and isinstance(base.factors[0], Const):
        c, rest = _split_coefficient(base)
        return mul(Const(c ** exponent), power(rest, exponent))
    return Pow(base, exponent)


def div(num, den, guard: bool = False) -> Expression:
    num = as_expression(num)
    den = as_expression(den)
    if isinstance(den, Const):
        if den.value == 0.0:
            raise EvaluationError("division by the constant zero")
        return mul(Const(1.0 / den.value), num)
    if is_zero(num):
        return ZERO
    if num == den:
        return ONE
    if isinstance(den, Div):
        return div(mul(num, den.den), den.num, guard or den.guard)
    if isinstance(num, Div):
        return div(num.num, mul(num.den, den), guard or num.guard)
    c_num, rest_num = _split_coefficient(num)
    c_den, rest_den = _split_coefficient(den)
    coefficient = c_num / c_den
    if rest_num == rest_den:
        return Const(coefficient)
    return _scaled(coefficient, Div(rest_num, rest_den, guard))


def sin(arg) -> Expression:
    arg = as_expression(arg)
    return Const(math.sin(arg.value)) if isinstance(arg, Const) else Sin(arg)


def cos(arg) -> Expression:
    arg = as_expression(arg)
    return Const(math.cos(arg.value)) if isinstance(arg, Const) else Cos(arg)


def exp(arg) -> Expression:
    arg = as_expression(arg)
    return Const(math.exp(arg.value)) if isinstance(arg, Const) else Exp(arg)


def bump(axes: Sequence[Tuple[int, float, float]], orders: Sequence[int] = None,
         amplitude: float = 1.0) -> Expression:
    """Smooth bump supported on the open box given by (variable, lo, hi) axes."""
    axes = [(int(v), float(lo), float(hi)) for v, lo, hi in axes]
    orders = list(orders) if orders is not None else [0] * len(axes)
    if len(orders) != len(axes):
        raise ValueError("one derivative order per bump axis is required")
    if len({v for v, _, _ in axes}) != len(axes):
        raise ValueError("bump axes must use distinct variables")
    for v, lo, hi in axes:
        if not lo < hi:
            raise ValueError(f"empty bump support ({lo}, {hi}) in {variable_name(v)}")
    paired = sorted(zip(axes, orders), key=lambda item: item[0][0])
    node = Bump(tuple(a for a, _ in paired), tuple(k for _, k in paired))
    return mul(Const(amplitude), node)


def blend(variable: int, a: float, b: float, order: int = 0) -> Expression:
    if a == b:
        raise ValueError("blend needs a non-empty transition")
    return Blend(variable, a, b, order)


def primitive(integrand, variable: int, lower: float, tol: float = None) -> Expression:
    integrand = as_expression(integrand)
    if is_zero(integrand):
        return ZERO
    return Primitive(integrand, variable, lower, tol)


def tabulated_field(name: str, variables: Sequence[int], grids: Sequence[np.ndarray],
                    values: np.ndarray, degree: int = 3) -> TabulatedField:
    return TabulatedField(FieldTable(name, variables, grids, values, degree))


def compose(inner, substitutions: Mapping[int, Expression]) -> Expression:
    inner = as_expression(inner)
    if isinstance(inner, Const):
        return inner
    relevant = {int(v): as_expression(e) for v, e in substitutions.items()
                if int(v) in inner.free_variables}
    if isinstance(inner, Var):
        return relevant.get(inner.index, inner)
    if not relevant:
        return inner
    return Compose(inner, tuple(sorted(relevant.items())))


def check_size(expr: Expression, limit: int = None):
    limit = limit or SYMBOLIC_CONFIG['node_limit']
    if expr.node_count > limit:
        raise ExpressionTooLargeError(f"expression has {expr.node_count} nodes (limit {limit})")


# differentiation ---------------------------------------------------------------

def differentiate(expr: Expression, variable: int) -> Expression:
    """Exact partial derivative of `expr` with respect to variable index `variable`."""
    expr = as_expression(expr)
    variable = int(variable)
    if variable not in expr.free_variables:
        return ZERO
    cached = expr._derivatives.get(variable)
    if cached is None:
        cached = _derivative(expr, variable)
        expr._derivatives[variable] = cached
    return cached


def differentiate_multi(expr: Expression, exponents: Sequence[int]) -> Expression:
    """Apply D^alpha for the multi-index `exponents` (one entry per variable)."""
    result = as_expression(expr)
    for variable, count in enumerate(exponents):
        for _ in range(int(count)):
            result = differentiate(result, variable)
            if is_zero(result):
                return ZERO
    return result


@singledispatch
def _derivative(node, variable):
    raise NotImplementedError(f"no derivative rule for {type(node).__name__}")


@_derivative.register
def _(node: Var, variable):
    return ONE if node.index == variable else ZERO


@_derivative.register
def _(node: Add, variable):
    return add(*(differentiate(term, variable) for term in node.terms))


@_derivative.register
def _(node: Mul, variable):
    terms = []
    factors = node.factors
    for i, factor in enumerate(factors):
        d = differentiate(factor, variable)
        if not is_zero(d):
            terms.append(mul(d, *factors[:i], *factors[i + 1:]))
    return add(*terms)


@_derivative.register
def _(node: Div, variable):
    d_num = differentiate(node.num, variable)
    d_den = differentiate(node.den, variable)
    terms = []
    if not is_zero(d_num):
        terms.append(div(d_num, node.den, node.guard))
    if not is_zero(d_den):
        terms.append(neg(div(mul(node.num, d_den), power(node.den, 2), node.guard)))
    return add(*terms)


@_derivative.register
def _(node: Pow, variable):
    return mul(Const(node.exponent), power(node.base, node.exponent - 1),
               differentiate(node.base, variable))


@_derivative.register
def _(node: Sin, variable):
    return mul(cos(node.arg), differentiate(node.arg, variable))


@_derivative.register
def _(node: Cos, variable):
    return mul(Const(-1.0), sin(node.arg), differentiate(node.arg, variable))


@_derivative.register
def _(node: Exp, variable):
    return mul(node, differentiate(node.arg, variable))


@_derivative.register
def _(node: Bump, variable):
    orders = tuple(k + 1 if v == variable else k for (v, _, _), k in zip(node.axes, node.orders))
    return Bump(node.axes, orders)


@_derivative.register
def _(node: Blend, variable):
    return Blend(node.variable, node.a, node.b, node.order + 1)


@_derivative.register
def _(node: Primitive, variable):
    if variable == node.variable:
        return node.integrand
    return primitive(differentiate(node.integrand, variable), node.variable, node.lower, node.tol)


@_derivative.register
def _(node: TabulatedField, variable):
    orders = tuple(k + 1 if v == variable else k
                   for v, k in zip(node.table.variables, node.orders))
    return TabulatedField(node.table, orders)


@_derivative.register
def _(node: Compose, variable):
    mapping = dict(node.substitutions)
    terms = []
    for v, e in node.substitutions:
        de = differentiate(e, variable)
        if not is_zero(de):
            terms.append(mul(compose(differentiate(node.inner, v), mapping), de))
    if variable not in mapping and variable in node.inner.free_variables:
        terms.append(compose(differentiate(node.inner, variable), mapping))
    return add(*terms)


# special functions -------------------------------------------------------------

@lru_cache(maxsize=None)
def _bump_polynomial(order: int) -> Polynomial:
    # d^k/dr^k exp(-1/q) = p_k(r) q^(-2k) exp(-1/q), q = 1 - r^2
    if order == 0:
        return Polynomial([1.0])
    p = _bump_polynomial(order - 1)
    r = Polynomial([0.0, 1.0])
    q = 1.0 - r ** 2
    return p.deriv() * q ** 2 + 4.0 * (order - 1) * r * q * p - 2.0 * r * p


def bump_values(x: np.ndarray, lo: float, hi: float, order: int = 0) -> np.ndarray:
    """k-th derivative of exp(-1/(1-r^2)) with r mapping (lo, hi) onto (-1, 1)."""
    x = np.asarray(x, dtype=float)
    rho = 0.5 * (hi - lo)
    r = (x - 0.5 * (lo + hi)) / rho
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    if np.any(inside):
        ri = r[inside]
        q = 1.0 - ri * ri
        with np.errstate(under='ignore'):
            out[inside] = _bump_polynomial(order)(ri) * np.exp(-1.0 / q - 2.0 * order * np.log(q))
    return out * rho ** (-order)


@lru_cache(maxsize=None)
def _edge_polynomial(order: int) -> Polynomial:
    # d^m/dtau^m exp(-1/tau) = q_m(u) exp(-u), u = 1/tau
    if order == 0:
        return Polynomial([1.0])
    q = _edge_polynomial(order - 1)
    return -Polynomial([0.0, 0.0, 1.0]) * (q.deriv() - q)


def _edge_values(tau: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros_like(tau)
    positive = tau > 0.0
    if np.any(positive):
        u = 1.0 / tau[positive]
        keep = u < SYMBOLIC_CONFIG['blend_cutoff']
        values = np.zeros_like(u)
        values[keep] = _edge_polynomial(order)(u[keep]) * np.exp(-u[keep])
        out[positive] = values
    return out


def blend_values(x: np.ndarray, a: float, b: float, order: int = 0) -> np.ndarray:
    """Smooth step from 0 (at a) to 1 (at b), or its derivative of the given order."""
    x = np.asarray(x, dtype=float)
    tau = (x - a) / (b - a)
    out = np.where(tau >= 1.0, 1.0 if order == 0 else 0.0, 0.0)
    middle = (tau > 0.0) & (tau < 1.0)
    if np.any(middle):
        tm = tau[middle]
        f = [_edge_values(tm, m) for m in range(order + 1)]
        total = [f[m] + (-1.0) ** m * _edge_values(1.0 - tm, m) for m in range(order + 1)]
        steps = []
        for m in range(order + 1):
            acc = f[m].copy()
            for j in range(m):
                acc -= math.comb(m, j) * steps[j] * total[m - j]
            steps.append(acc / total[0])
        out[middle] = steps[order] * (b - a) ** (-order)
    return out


# evaluation --------------------------------------------------------------------

class _Evaluator:
    """Evaluates a tree on broadcast coordinate arrays, memoizing shared nodes."""

    def __init__(self, coords: Sequence[np.ndarray]):
        self.coords = list(coords)
        self.shape = self.coords[0].shape if self.coords else ()
        self.memo = {}

    def value(self, node: Expression) -> np.ndarray:
        key = id(node)
        cached = self.memo.get(key)
        if cached is None:
            cached = node._evaluate(self)
            self.memo[key] = (cached, node)
            return cached
        return cached[0]

    def point_at(self, mask: np.ndarray):
        index = np.unravel_index(int(np.argmax(np.broadcast_to(mask, self.shape))), self.shape)
        return [float(np.broadcast_to(c, self.shape)[index]) for c in self.coords]


def evaluate_array(expr: Expression, coords: Sequence) -> np.ndarray:
    """
    Evaluate `expr` on arrays of coordinates.

    Args:
        expr: Expression to evaluate
        coords: sequence (t, x1, ..., xN) of broadcastable arrays

    Returns:
        np.ndarray: values with the broadcast shape of the coordinates
    """
    expr = as_expression(expr)
    arrays = [np.asarray(c, dtype=float) for c in coords]
    if not arrays:
        raise EvaluationError("no coordinates given")
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    arrays = [np.broadcast_to(a, shape) for a in arrays]
    needed = max(expr.free_variables, default=-1)
    if needed >= len(arrays):
        raise EvaluationError(f"expression uses {variable_name(needed)} but only "
                              f"{len(arrays)} coordinates were given")
    evaluator = _Evaluator(arrays)
    with np.errstate(all='ignore'):
        values = np.broadcast_to(evaluator.value(expr), shape)
    finite = np.isfinite(values)
    if not np.all(finite):
        raise EvaluationError("non-finite value", evaluator.point_at(~finite))
    return np.array(values, dtype=float)


def evaluate(expr: Expression, point: Sequence[float]) -> float:
    """Evaluate `expr` at a single point (t, x1, ..., xN)."""
    values = evaluate_array(expr, [np.array([float(p)]) for p in point])
    return float(values[0])


# printing ----------------------------------------------------------------------

_PRECEDENCE = {Add: 1, Mul: 2, Div: 2, Pow: 3}


def _number(value: float) -> str:
    text = repr(float(value))
    return f"({text})" if value < 0 else text


def _wrap(child: Expression, minimum: int) -> str:
    text = to_text(child)
    if isinstance(child, Const) and child.value < 0:
        return text
    if _PRECEDENCE.get(type(child), 9) < minimum:
        return f"({text})"
    return text


def _orders(orders: Sequence[int]) -> str:
    return '' if not any(orders) else '[' + ','.join(str(k) for k in orders) + ']'


def to_text(expr: Expression) -> str:
    """Canonical, re-parseable text of an expression."""
    if isinstance(expr, Const):
        return _number(expr.value)
    if isinstance(expr, Var):
        return variable_name(expr.index)
    if isinstance(expr, Add):
        return ' + '.join(_wrap(term, 1) for term in expr.terms)
    if isinstance(expr, Mul):
        return '*'.join(_wrap(f, 3) if isinstance(f, Div) else _wrap(f, 2) for f in expr.factors)
    if isinstance(expr, Div):
        if expr.guard:
            return f"safediv({to_text(expr.num)}, {to_text(expr.den)})"
        return f"{_wrap(expr.num, 3)}/{_wrap(expr.den, 3)}"
    if isinstance(expr, Pow):
        return f"{_wrap(expr.base, 4)}^{expr.exponent}"
    if isinstance(expr, UnaryFunction):
        return f"{expr.name}({to_text(expr.arg)})"
    if isinstance(expr, Bump):
        args = ', '.join(f"{variable_name(v)}, {_number(lo)}, {_number(hi)}" for v, lo, hi in expr.axes)
        return f"bump{_orders(expr.orders)}({args})"
    if isinstance(expr, Blend):
        return (f"blend{_orders((expr.order,))}({variable_name(expr.variable)}, "
                f"{_number(expr.a)}, {_number(expr.b)})")
    if isinstance(expr, Primitive):
        return (f"integral({to_text(expr.integrand)}, {variable_name(expr.variable)}, "
                f"{_number(expr.lower)})")
    if isinstance(expr, TabulatedField):
        return f"field{_orders(expr.orders)}({expr.name})"
    if isinstance(expr, Compose):
        pairs = ', '.join(f"{variable_name(v)}, {to_text(e)}" for v, e in expr.substitutions)
        return f"compose({to_text(expr.inner)}, {pairs})"
    raise TypeError(f"cannot print {type(expr).__name__}")


def breakpoints(expr: Expression, variable: int) -> List[float]:
    """Support edges of bumps and blends along `variable`, used to split quadratures."""
    points = set()
    stack = [expr]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Bump):
            edge = node.support(variable)
            if edge:
                points.update(edge)
        elif isinstance(node, Blend) and node.variable == variable:
            points.update((node.a, node.b))
        stack.extend(node.children())
    return sorted(points)
