# tests/test_normalize.py
import numpy as np
import pytest

from config.config import NORMALIZE_CONFIG
from normalize import (
    NormalizationError, build_flow_map, coupling_residual, gauge_transform, normalize_system,
)
from normalize.flow import choose_base_edge
from solvability import ParabolicSystem, Window
from symbolic import ZERO, evaluate_array, parse_expression


def coupled_1d(g21="1", a21="0", a22="x1"):
    return ParabolicSystem.create(
        dimension=1, domain=[(0.0, 1.0)], control_window=Window((0.0, 0.2), (1.0, 0.8)), horizon=1.0,
        g21=[parse_expression(g21, 1)], a21=parse_expression(a21, 1), a22=parse_expression(a22, 1),
        name='coupled')


# gauge ---------------------------------------------------------------------------

def test_gauge_removes_zero_order_coupling():
    gauged, gauge = gauge_transform(coupled_1d(a21="x1"))
    assert gauged.a21 == ZERO
    assert gauged.normal_form
    assert gauge.identity_residual < 1e-12
    x = np.linspace(0.2, 0.8, 7)
    theta = evaluate_array(gauge.theta, [np.zeros_like(x), x])
    np.testing.assert_allclose(theta, np.exp(-x ** 2 / 2), rtol=1e-10)
    assert gauge.lower_bound == pytest.approx(float(np.min(theta)), rel=0.05)


def test_gauge_requires_straight_coupling():
    with pytest.raises(NormalizationError):
        gauge_transform(coupled_1d(g21="2"))


def test_normalize_skips_straightening_when_coupling_is_d_dx1():
    result = normalize_system(coupled_1d(a21="0.5"))
    assert result.flow is None
    assert result.coupling_residual == 0.0
    assert result.system.check_normal_form() == 0.0
    assert result.to_dict()['flow'] is None


# flow ----------------------------------------------------------------------------

def test_base_edge_follows_field_direction():
    window = Window((0.0, 0.2), (1.0, 0.8))
    assert choose_base_edge([parse_expression("1 + x1", 1)], window) == 'lower'
    assert choose_base_edge([parse_expression("-2", 1)], window) == 'upper'
    with pytest.raises(NormalizationError):
        choose_base_edge([parse_expression("x1 - 0.5", 1)], window)


def test_flow_rejects_time_dependent_field():
    with pytest.raises(NormalizationError):
        build_flow_map(coupled_1d(g21="1 + t"))


def test_flow_map_matches_closed_form_1d():
    system = coupled_1d(g21="1 + 0.5*x1")
    flow = build_flow_map(system)
    assert flow.edge == 'lower'
    expected = (0.2 + 2.0) * np.exp(0.5 * flow.s_grid) - 2.0
    np.testing.assert_allclose(flow.values[:, 0], expected, atol=1e-7)
    assert np.all(flow.det_jacobian > 0)
    assert np.all(flow.values[:, 0] <= 0.8)
    assert coupling_residual(flow, system.g21) < 1e-6


def test_flow_inverse_recovers_parameters():
    flow = build_flow_map(coupled_1d(g21="1 + 0.5*x1"))
    s = 0.4 * flow.epsilon
    x = flow.forward(np.array([s]))[0]
    assert flow.inverse(x)[0] == pytest.approx(s, abs=1e-9)


def test_flow_table_has_unit_headers():
    frame = build_flow_map(coupled_1d(g21="1 + 0.5*x1"), table_size=16).to_frame()
    assert list(frame.columns) == ['t [time]', 's [length]', 'Lambda_t [time]', 'Lambda_x1 [length]', 'det_J [1]']
    assert len(frame) == 16


def test_normalize_straightens_then_gauges_1d():
    result = normalize_system(coupled_1d(g21="1 + 0.5*x1", a21="x1"), table_size=32)
    assert result.flow is not None
    assert result.system.normal_form
    assert result.system.check_normal_form() == 0.0
    assert result.coupling_residual < 1e-6
    assert result.system.domain[0][1] == pytest.approx(result.flow.epsilon)


@pytest.mark.slow
def test_normalize_curved_coupling_2d():
    system = ParabolicSystem.create(
        dimension=2, domain=[(0.0, 1.0), (0.0, 1.0)], control_window=Window((0.0, 0.2, 0.2), (1.0, 0.8, 0.8)),
        horizon=1.0, g21=[parse_expression("1", 2), parse_expression("0.3*x1", 2)],
        a21=parse_expression("0.2*x2", 2), a12=parse_expression("1", 2), a22=parse_expression("x1", 2),
        name='curved')
    result = normalize_system(system, ode_tol=1e-11)
    assert result.flow.dimension == 2
    assert result.system.normal_form
    assert result.coupling_residual < 1e-6

    window = result.system.control_window
    assert window.upper[1] == pytest.approx(result.flow.epsilon)
    points = window.cell_centers(12)
    assert np.max(np.abs(evaluate_array(result.system.a21, points))) <= 1e-8
    for g, target in zip(result.system.g21, (1.0, 0.0)):
        np.testing.assert_allclose(evaluate_array(g, points), target, atol=1e-12)

    frame = result.flow.to_frame()
    size = NORMALIZE_CONFIG['table_size']
    assert 'Lambda_x2 [length]' in frame.columns
    assert len(frame) == size * size
