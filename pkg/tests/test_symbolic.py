# tests/test_symbolic.py
import itertools
import math

import numpy as np
import pytest

from symbolic import (
    ONE, ZERO, ArityError, EvaluationError, ExpressionSyntaxError, ExpressionTooLargeError, LinDiffOp,
    MultiIndex, UnknownIdentifierError, Window, blend_values, bump, compose, differentiate, evaluate,
    evaluate_array, exp, integrate_adaptive, op_adjoint, op_apply, op_commutator, op_compose,
    parse_expression, primitive, random_test_functions, relative_residual, sin, tabulated_field, to_text,
    var,
)
from symbolic.expression import check_size


def values_1d(expr, x, t=0.0):
    x = np.asarray(x, dtype=float)
    return evaluate_array(expr, [np.full_like(x, t), x])


# parser ------------------------------------------------------------------------

def test_parse_precedence_and_unary_minus():
    assert evaluate(parse_expression("2 + 3*4", 1), [0, 0]) == 14.0
    assert evaluate(parse_expression("-2^2", 1), [0, 0]) == -4.0
    assert evaluate(parse_expression("2^-1", 1), [0, 0]) == 0.5
    assert evaluate(parse_expression("2**3 - 1", 1), [0, 0]) == 7.0


def test_parse_variables_and_pi():
    expr = parse_expression("x1^2 + 2*x1 + t", 1)
    assert evaluate(expr, [1.0, 3.0]) == pytest.approx(16.0)
    assert evaluate(parse_expression("sin(pi*x1)", 1), [0.0, 0.5]) == pytest.approx(1.0)


def test_parse_constants():
    expr = parse_expression("c*x1 + k", 1, {'c': 2.0, 'k': -1.0})
    assert evaluate(expr, [0.0, 4.0]) == pytest.approx(7.0)


def test_syntax_error_reports_offset():
    with pytest.raises(ExpressionSyntaxError) as excinfo:
        parse_expression("x1 + * 2", 1)
    assert excinfo.value.position == 5
    assert "offset 5" in str(excinfo.value)


def test_unknown_identifier_and_dimension_bound():
    with pytest.raises(UnknownIdentifierError) as excinfo:
        parse_expression("y + 1", 1)
    assert excinfo.value.position == 0
    with pytest.raises(UnknownIdentifierError):
        parse_expression("x1 + x3", 2)


def test_arity_error():
    with pytest.raises(ArityError):
        parse_expression("sin(x1, x2)", 2)


@pytest.mark.parametrize("text", ["x1^x2", "x1^1.5", "1/0", "bump(x1, 0, x1)", "blend(x1, 1, 1)", "(x1 + 1"])
def test_rejected_texts(text):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(text, 2)


def test_canonical_form_is_order_independent():
    assert parse_expression("x1 + x2", 2) == parse_expression("x2 + x1", 2)
    assert parse_expression("2*x1 + 3*x1", 1) == parse_expression("5*x1", 1)
    assert parse_expression("x1*x1*x1", 1) == parse_expression("x1^3", 1)
    assert parse_expression("x1/x1", 1) == ONE


def test_printed_text_reparses_to_same_values():
    expr = parse_expression("sin(pi*x1)*exp(-t) + bump(x1, 0.2, 0.8)/(2 + x1^2)", 1)
    again = parse_expression(to_text(expr), 1)
    x = np.linspace(0.0, 1.0, 17)
    np.testing.assert_allclose(values_1d(again, x, t=0.3), values_1d(expr, x, t=0.3), rtol=1e-14, atol=1e-15)


# evaluation --------------------------------------------------------------------

def test_division_by_zero_names_the_point():
    expr = parse_expression("1/(x1 - 1)", 1)
    with pytest.raises(EvaluationError) as excinfo:
        evaluate(expr, [0.0, 1.0])
    assert excinfo.value.point == [0.0, 1.0]


def test_safediv_removable_zero():
    expr = parse_expression("safediv(sin(x1), x1)", 1)
    assert evaluate(expr, [0.0, 0.0]) == 0.0
    assert evaluate(expr, [0.0, 0.5]) == pytest.approx(math.sin(0.5) / 0.5)


def test_bump_vanishes_outside_support():
    expr = bump([(1, 0.2, 0.6)])
    x = np.array([0.0, 0.2, 0.6, 0.9])
    assert np.all(values_1d(expr, x) == 0.0)
    assert values_1d(expr, [0.4])[0] == pytest.approx(math.exp(-1.0))


def test_blend_steps_from_zero_to_one():
    x = np.linspace(0.0, 1.0, 41)
    values = blend_values(x, 0.2, 0.8)
    assert np.all(values[x <= 0.2] == 0.0)
    assert np.all(values[x >= 0.8] == 1.0)
    assert np.all(np.diff(values) >= 0.0)
    assert blend_values(np.array([0.5]), 0.2, 0.8)[0] == pytest.approx(0.5)


def test_node_limit():
    expr = parse_expression("x1 + x1^2 + sin(x1) + exp(x1)", 1)
    check_size(expr, limit=100)
    with pytest.raises(ExpressionTooLargeError):
        check_size(expr, limit=3)


# differentiation ---------------------------------------------------------------

def central_difference(expr, x, h=1e-5):
    return (values_1d(expr, x + h) - values_1d(expr, x - h)) / (2 * h)


@pytest.mark.parametrize("text", [
    "sin(x1)*x1^2",
    "exp(-x1)/(1 + x1^2)",
    "bump(x1, 0.1, 0.9)",
    "blend(x1, 0.2, 0.7)*cos(3*x1)",
    "safediv(x1^2, 1 + x1)",
])
def test_derivative_matches_central_difference(text):
    expr = parse_expression(text, 1)
    x = np.linspace(0.25, 0.75, 11)
    np.testing.assert_allclose(values_1d(differentiate(expr, 1), x), central_difference(expr, x),
                               rtol=1e-6, atol=1e-7)


def test_derivative_of_running_integral_is_integrand():
    expr = parse_expression("integral(cos(x1)*x1, x1, 0)", 1)
    assert differentiate(expr, 1) == parse_expression("cos(x1)*x1", 1)
    assert evaluate(parse_expression("integral(cos(x1), x1, 0)", 1), [0.0, 1.0]) == pytest.approx(math.sin(1.0), abs=1e-10)


def test_derivative_of_composition():
    expr = compose(sin(var(1)), {1: 2 * var(1)})
    x = np.linspace(0.0, 1.0, 5)
    np.testing.assert_allclose(values_1d(differentiate(expr, 1), x), 2 * np.cos(2 * x), atol=1e-14)


def test_tabulated_field_interpolates_and_differentiates():
    grid = np.linspace(0.0, 1.0, 21)
    field = tabulated_field('f', [1], [grid], grid ** 2)
    assert evaluate(field, [0.0, 0.5]) == pytest.approx(0.25, abs=1e-12)
    assert evaluate(differentiate(field, 1), [0.0, 0.5]) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(EvaluationError):
        evaluate(field, [0.0, 1.5])


def test_time_derivative_ignores_space_only_terms():
    expr = parse_expression("t^2*x1 + sin(x1)", 1)
    assert differentiate(expr, 0) == parse_expression("2*t*x1", 1)


# quadrature --------------------------------------------------------------------

def test_integrate_adaptive_known_values():
    assert integrate_adaptive(parse_expression("sin(x1)", 1), 1, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)
    # integral of exp(-1/(1-r^2)) over (-1, 1), scaled by the half width
    value = integrate_adaptive(bump([(1, 0.0, 1.0)]), 1, -1.0, 2.0)
    assert value == pytest.approx(0.5 * 0.443993816168079, abs=1e-9)


def test_integrate_adaptive_binds_other_variables():
    expr = parse_expression("t*x1", 1)
    assert integrate_adaptive(expr, 1, 0.0, 1.0, point=[2.0, 0.0]) == pytest.approx(1.0)


def test_primitive_identity_includes_its_tolerance():
    integrand = exp(var(1))
    coarse = primitive(integrand, 1, 0.0, tol=1e-4)
    fine = primitive(integrand, 1, 0.0, tol=1e-12)
    assert coarse != fine
    assert coarse == primitive(integrand, 1, 0.0, tol=1e-4)
    assert fine - coarse != ZERO
    assert differentiate(fine, 0) == ZERO
    assert differentiate(primitive(integrand * var(0), 1, 0.0, tol=1e-12), 0).tol == 1e-12


# operators ---------------------------------------------------------------------

def test_commutator_of_derivative_and_position_is_identity():
    dx = LinDiffOp.partial(1, 1)
    x = LinDiffOp.multiplication(1, var(1))
    result = dx.commutator(x)
    assert result.order == 0
    assert result.coefficient(MultiIndex.zero(1)) == ONE
    assert len(result.terms) == 1


def test_composition_agrees_with_nested_application():
    rng = np.random.default_rng(0)
    A = LinDiffOp(1, {(0, 1): parse_expression("x1", 1), (1, 0): parse_expression("1 + t", 1)})
    B = LinDiffOp(1, {(0, 2): parse_expression("sin(x1)", 1), (0, 0): parse_expression("x1*t", 1)})
    f = parse_expression("exp(t)*x1^3 + cos(x1*t)", 1)
    points = [rng.uniform(0, 1, 20), rng.uniform(0, 1, 20)]
    nested = evaluate_array(A.apply(B.apply(f)), points)
    composed = evaluate_array(A.compose(B).apply(f), points)
    np.testing.assert_allclose(composed, nested, rtol=1e-12, atol=1e-12)
    assert A.compose(B).order == 3


def test_adjoint_integrates_coefficients_by_parts():
    rng = np.random.default_rng(1)
    a = parse_expression("1 + x1^2", 1)
    L = LinDiffOp(1, {(0, 2): a, (0, 1): parse_expression("sin(x1)", 1)})
    g = parse_expression("exp(x1)*cos(2*x1)", 1)
    expected = differentiate(differentiate(a * g, 1), 1) - differentiate(parse_expression("sin(x1)", 1) * g, 1)
    points = [np.zeros(15), rng.uniform(-1, 1, 15)]
    np.testing.assert_allclose(evaluate_array(L.adjoint().apply(g), points), evaluate_array(expected, points),
                               rtol=1e-12, atol=1e-12)


def test_adjoint_is_an_involution():
    rng = np.random.default_rng(2)
    L = LinDiffOp(2, {(1, 0, 0): ONE, (0, 1, 1): parse_expression("x1*x2", 2),
                      (0, 0, 0): parse_expression("t", 2)})
    f = random_test_functions(2, 1, rng)[0]
    points = [rng.uniform(0, 1, 10) for _ in range(3)]
    np.testing.assert_allclose(evaluate_array(L.adjoint().adjoint().apply(f), points),
                               evaluate_array(L.apply(f), points), rtol=1e-11, atol=1e-11)


def random_operator(dimension, rng, terms=2, max_order=2):
    indices = [alpha for alpha in itertools.product(range(max_order + 1), repeat=dimension + 1)
               if sum(alpha) <= max_order]
    picks = rng.choice(len(indices), size=terms, replace=False)
    coefficients = random_test_functions(dimension, terms, rng)
    return LinDiffOp(dimension, {indices[k]: c for k, c in zip(picks, coefficients)})


def law_sides(law, dimension, rng):
    """Both sides of an operator identity, as operators."""
    # nested commutators grow fast; first-order operators keep them small
    max_order = 1 if law == 'jacobi' else 2
    A, B, C = (random_operator(dimension, rng, max_order=max_order) for _ in range(3))
    if law == 'associativity':
        return op_compose(op_compose(A, B), C), op_compose(A, op_compose(B, C))
    if law == 'bilinearity':
        a, b = rng.uniform(-2.0, 2.0, size=2)
        lhs = op_commutator(A.scale(a) + B.scale(b), C)
        return lhs, op_commutator(A, C).scale(a) - op_commutator(C, B).scale(b)
    if law == 'jacobi':
        pair = op_commutator(A, op_commutator(B, C)) + op_commutator(B, op_commutator(C, A))
        return pair, -op_commutator(C, op_commutator(A, B))
    if law == 'adjoint-reverses-composition':
        return op_adjoint(op_compose(A, B)), op_compose(op_adjoint(B), op_adjoint(A))
    raise ValueError(law)


OPERATOR_LAWS = ['associativity', 'bilinearity', 'jacobi', 'adjoint-reverses-composition']


@pytest.mark.parametrize('seed', range(50))
@pytest.mark.parametrize('law', OPERATOR_LAWS)
def test_operator_laws_on_random_operators(law, seed):
    rng = np.random.default_rng(1000 * OPERATOR_LAWS.index(law) + seed)
    dimension = 1 + seed % 2
    lhs, rhs = law_sides(law, dimension, rng)
    u = random_test_functions(dimension, 1, rng)[0]
    points = Window((0.0,) * (dimension + 1), (1.0,) * (dimension + 1)).random_points(rng, 8)
    left = evaluate_array(op_apply(lhs, u), points)
    right = evaluate_array(op_apply(rhs, u), points)
    reference = np.concatenate([np.abs(left), np.abs(right)])
    assert relative_residual(left - right, reference) <= 1e-10


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        LinDiffOp(1, {(0, 1, 0): ONE})
    with pytest.raises(ValueError):
        LinDiffOp.identity(1).compose(LinDiffOp.identity(2))


# windows -----------------------------------------------------------------------

def test_window_shrink_and_contains():
    window = Window((0.0, 0.0), (1.0, 2.0))
    inner = window.shrink(0.5)
    assert inner.lower == (0.25, 0.5) and inner.upper == (0.75, 1.5)
    assert window.contains_window(inner)
    assert window.contains((0.5, 1.0)) and not window.contains((1.0, 1.0))
    with pytest.raises(ValueError):
        Window((0.0, 1.0), (1.0, 1.0))


def test_random_test_functions_are_smooth_and_finite():
    rng = np.random.default_rng(3)
    functions = random_test_functions(2, 4, rng)
    assert len(functions) == 4
    points = Window((0, 0, 0), (1, 1, 1)).random_points(rng, 30)
    for f in functions:
        assert np.all(np.isfinite(evaluate_array(differentiate(f, 1), points)))
