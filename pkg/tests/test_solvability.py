# tests/test_solvability.py
import numpy as np
import pytest

from solvability import (
    FAILS, HOLDS, INCONCLUSIVE, EllipticityError, NonSolvableError, NormalFormError, ParabolicSystem, Window,
    algebraic_solver, assemble_full_solver, build_system_operators, check_condition, eliminate,
    nonvanishing_box, verify_identity,
)
from symbolic import ONE, ZERO, MultiIndex, evaluate_array, parse_expression


def system_1d(a22="x1", **coefficients):
    parsed = {key: parse_expression(text, 1) for key, text in coefficients.items()}
    return ParabolicSystem.create(
        dimension=1, domain=[(0.0, 1.0)], control_window=Window((0.0, 0.2), (1.0, 0.8)), horizon=1.0,
        a22=parse_expression(a22, 1), normal_form=True, name='test-1d', **parsed)


def system_2d(a22="x1*x2"):
    return ParabolicSystem.create(
        dimension=2, domain=[(0.0, 1.0), (0.0, 1.0)],
        control_window=Window((0.0, 0.2, 0.2), (1.0, 0.8, 0.8)), horizon=1.0,
        a11=-1.0, a12=parse_expression("1 + 0.5*x2", 2), a22=parse_expression(a22, 2),
        normal_form=True, name='test-2d')


# system --------------------------------------------------------------------------

def test_validate_accepts_identity_diffusion():
    assert system_1d().validate() == pytest.approx(1.0)


def test_validate_rejects_degenerate_diffusion():
    system = ParabolicSystem.create(
        dimension=1, domain=[(0.0, 1.0)], control_window=Window((0.0, 0.2), (1.0, 0.8)), horizon=1.0,
        d1=[[parse_expression("x1 - 0.5", 1)]])
    with pytest.raises(EllipticityError):
        system.validate()


def test_validate_rejects_asymmetric_diffusion():
    system = ParabolicSystem.create(
        dimension=2, domain=[(0.0, 1.0), (0.0, 1.0)], control_window=Window((0.0, 0.2, 0.2), (1.0, 0.8, 0.8)),
        horizon=1.0, d2=[[ONE, parse_expression("x1", 2)], [ZERO, ONE]])
    with pytest.raises(EllipticityError):
        system.validate()


def test_validate_rejects_window_outside_the_domain():
    system = ParabolicSystem.create(dimension=1, domain=[(0.0, 1.0)], control_window=Window((0.0, 0.5), (1.0, 1.5)),
                                    horizon=1.0)
    with pytest.raises(ValueError):
        system.validate()


def test_normal_form_must_be_declared_and_hold():
    with pytest.raises(NormalFormError):
        system_1d().replace(normal_form=False).check_normal_form()
    with pytest.raises(NormalFormError):
        system_1d().replace(g21=(parse_expression("2", 1),)).check_normal_form()
    assert system_1d().check_normal_form() == 0.0


# operators -----------------------------------------------------------------------

def test_l1_is_the_x1_derivative_and_l3_has_no_x1_derivatives():
    operators = build_system_operators(system_2d())
    assert set(operators.L1.terms) == {MultiIndex.unit(2, 1)}
    assert operators.L1.coefficient((0, 1, 0)) == ONE
    assert all(alpha.exponents[1] == 0 for alpha in operators.L3.terms)
    assert operators.a_tilde == parse_expression("-x1*x2", 2)


def test_l3_equals_l2_minus_k_after_l1():
    rng = np.random.default_rng(0)
    operators = build_system_operators(system_2d())
    f = parse_expression("sin(x1 + 2*x2)*exp(t) + x1^3*x2", 2)
    points = [rng.uniform(0, 1, 12) for _ in range(3)]
    lhs = evaluate_array(operators.L3.apply(f), points)
    rhs = evaluate_array(operators.L2.apply(f), points) - evaluate_array(operators.K.apply(operators.L1.apply(f)), points)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


# elimination ---------------------------------------------------------------------

def test_nonvanishing_box_picks_a_dyadic_block():
    window = Window((0.0, 0.0), (1.0, 1.0))
    box = nonvanishing_box(parse_expression("x1", 1), window, delta=0.3)
    assert box.lower[1] == pytest.approx(0.5) and box.upper[1] == pytest.approx(1.0)
    assert box.upper[0] - box.lower[0] == pytest.approx(0.5)
    assert nonvanishing_box(ZERO, window) is None


def test_elimination_one_dimensional():
    operators = build_system_operators(system_1d("x1"))
    result = eliminate(operators.L1, operators.L3, Window((0.0, 0.2), (1.0, 0.8)), rng=np.random.default_rng(0))
    assert result.step_count == 1
    assert result.order == 1
    assert result.multiplier == ONE
    assert result.residual < 1e-10
    assert result.steps[0].multi_index.exponents == (1, 0)


def test_elimination_fails_for_constant_potential():
    operators = build_system_operators(system_1d("2"))
    with pytest.raises(NonSolvableError):
        eliminate(operators.L1, operators.L3, Window((0.0, 0.2), (1.0, 0.8)))


def test_elimination_rejects_x1_derivatives_in_l2():
    operators = build_system_operators(system_1d("x1"))
    with pytest.raises(NormalFormError):
        eliminate(operators.L1, operators.L2, Window((0.0, 0.2), (1.0, 0.8)))


def test_full_solver_is_a_right_inverse_1d():
    system = system_1d("x1*(1 + t)")
    solver = algebraic_solver(system, rng=np.random.default_rng(1))
    assert solver.residual < 1e-8
    operators = build_system_operators(system)
    again = verify_identity(operators.L, solver.M, solver.window, trials=4, rng=np.random.default_rng(2))
    assert again < 1e-8
    assert solver.M.shape == (3, 2)


@pytest.mark.slow
def test_full_solver_is_a_right_inverse_2d():
    system = system_2d()
    operators = build_system_operators(system)
    rng = np.random.default_rng(3)
    elimination = eliminate(operators.L1, operators.L3, system.control_window, rng=rng)
    assert elimination.step_count == 1
    assert elimination.order <= system.dimension ** 2
    solver = assemble_full_solver(system, elimination, operators, rng=rng)
    assert solver.residual < 1e-8


# condition -----------------------------------------------------------------------

def test_condition_holds_for_x1_dependent_potential():
    report = check_condition(system_2d("x1*x2"))
    assert report.verdict == HOLDS
    assert report.witness_window is not None
    assert report.max_residual > 1e-3


def test_condition_fails_inside_the_module():
    report = check_condition(system_2d("x2 + t"))
    assert report.verdict == FAILS
    assert report.witness_window is None
    assert report.max_residual <= 1e-8


def test_condition_inconclusive_when_coefficient_vanishes():
    report = check_condition(system_1d("0"))
    assert report.verdict == INCONCLUSIVE
    assert all(record['degenerate'] for record in report.slices)


MEMBERSHIP_CORPUS = [
    (1, "x1", HOLDS),
    (1, "x1*(1 + t)", HOLDS),
    (1, "t + x1^3", HOLDS),
    (1, "exp(x1) - t", HOLDS),
    (2, "x1*x2", HOLDS),
    (1, "2", FAILS),
    (1, "t", FAILS),
    (1, "1 + t^2", FAILS),
    (1, "exp(-t)", FAILS),
    (2, "x2 + t", FAILS),
]


@pytest.mark.parametrize('dimension, a22, verdict', MEMBERSHIP_CORPUS)
def test_condition_verdict_agrees_with_elimination(dimension, a22, verdict):
    system = system_1d(a22) if dimension == 1 else system_2d(a22)
    assert check_condition(system).verdict == verdict
    operators = build_system_operators(system)
    rng = np.random.default_rng(0)
    if verdict == HOLDS:
        result = eliminate(operators.L1, operators.L3, system.control_window, rng=rng)
        assert result.step_count >= 1
        assert result.residual < 1e-8
    else:
        with pytest.raises(NonSolvableError):
            eliminate(operators.L1, operators.L3, system.control_window, rng=rng)


def test_condition_window_must_lie_in_control_window():
    with pytest.raises(ValueError):
        check_condition(system_1d(), Window((0.0, 0.0), (1.0, 1.0)))


def test_condition_report_lists_generators():
    report = check_condition(system_2d(), slices_per_axis=2, points_per_slice=16)
    assert report.generators[0] == '1'
    assert len(report.generators) == 3
    assert len(report.slices) == 4
    assert report.to_dict()['verdict'] == report.verdict
