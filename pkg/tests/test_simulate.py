# tests/test_simulate.py
import numpy as np
import pytest

from config.config import SIMULATE_CONFIG
from simulate import (
    ONE_CONTROL, TWO_CONTROL, DiscretizationError, Grid, SupportViolationError, compute_rates, control_mask,
    discretize, fictitious_assembly, hum_control, hum_sweep, manufactured_forcing, reference_assembly_case,
    refinement_study, sample_initial, sample_pair, solve_forward, space_time_error,
)
from simulate.hum import detect_plateau, loglog_slope
from solvability import ParabolicSystem, Window, algebraic_solver
from symbolic import evaluate_array, parse_expression


def system_1d(horizon=1.0, **coefficients):
    parsed = {key: (parse_expression(value, 1) if isinstance(value, str) else value)
              for key, value in coefficients.items()}
    return ParabolicSystem.create(
        dimension=1, domain=[(0.0, 1.0)], control_window=Window((0.0, 0.2), (horizon, 0.8)),
        horizon=horizon, name='simulate-1d', **parsed)


def heat_only(horizon=1.0):
    return system_1d(horizon, g21=[0.0])


# grid ----------------------------------------------------------------------------

def test_uniform_grid_from_spacing():
    grid = Grid.uniform([(0.0, 1.0)], 0.5, spacing=0.1, dt=0.01)
    assert grid.nodes == (9,)
    assert grid.spacing[0] == pytest.approx(0.1)
    assert grid.steps == 50
    assert grid.dt == pytest.approx(0.01)
    np.testing.assert_allclose(grid.axes()[0], np.linspace(0.1, 0.9, 9))
    assert grid.pad(np.ones(9)).shape == (11,)


def test_grid_rejects_too_few_nodes():
    with pytest.raises(DiscretizationError):
        Grid(domain=((0.0, 1.0),), nodes=(2,), horizon=1.0, steps=10)
    with pytest.raises(DiscretizationError):
        Grid.uniform([(0.0, 1.0)], 1.0, nodes=[15])


def test_grid_norm_of_constant():
    grid = Grid.uniform([(0.0, 1.0), (0.0, 2.0)], 1.0, nodes=[9, 19], steps=4)
    assert grid.norm(np.ones(grid.size)) == pytest.approx(np.sqrt(grid.cell_volume * grid.size))


# discretization ------------------------------------------------------------------

def test_discretize_rejects_bad_input():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[31], steps=20)
    with pytest.raises(DiscretizationError):
        discretize(system_1d(), grid, theta=0.7)
    with pytest.raises(DiscretizationError):
        discretize(system_1d(a22="x1*t"), grid)
    with pytest.raises(DiscretizationError):
        discretize(system_1d(), Grid.uniform([(0.0, 1.0)], 1.0, nodes=[7], steps=20))
    with pytest.raises(DiscretizationError):
        discretize(system_1d(), grid, mode='three-control')


@pytest.mark.parametrize("which", [ONE_CONTROL, TWO_CONTROL])
def test_adjoint_step_is_the_exact_transpose(which):
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[31], steps=20)
    ds = discretize(system_1d(a12="1", a22="x1"), grid, theta=0.5)
    assert ds.duality_residual(np.random.default_rng(0), pairs=20, which=which) < 1e-12
    assert ds.control_size(which) == (31 if which == ONE_CONTROL else 62)


def test_control_mask_is_a_smooth_indicator():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[63], steps=10)
    window = Window((0.0, 0.25), (1.0, 0.75))
    mask = control_mask(grid, window, cells=2)
    x = grid.axes()[0]
    assert np.all((mask >= 0.0) & (mask <= 1.0))
    assert np.all(mask[(x <= 0.25) | (x >= 0.75)] == 0.0)
    assert np.all(mask[(x >= 0.3) & (x <= 0.7)] == 1.0)


def test_diffusion_decay_matches_discrete_eigenvalue():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[31], steps=20)
    ds = discretize(heat_only(), grid)
    h = grid.spacing[0]
    mu = -4.0 / h ** 2 * np.sin(np.pi * h / 2) ** 2
    assert ds.diffusion_decay() == pytest.approx(ds.step_eigenvalue(mu), rel=1e-10)
    assert 0.0 < ds.step_eigenvalue(mu) < 1.0


# forward solves ------------------------------------------------------------------

def test_forward_solve_decays_the_first_mode():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[31], steps=20)
    ds = discretize(heat_only(), grid)
    y0 = sample_initial(grid, parse_expression("sin(pi*x1)", 1), parse_expression("0", 1))
    trajectory = solve_forward(ds, y0)
    h = grid.spacing[0]
    factor = ds.step_eigenvalue(-4.0 / h ** 2 * np.sin(np.pi * h / 2) ** 2)
    expected = grid.norm(y0) * factor ** np.arange(grid.steps + 1)
    np.testing.assert_allclose(trajectory.norms(), expected, rtol=1e-10)
    assert np.all(trajectory.component(1) == 0.0)


def test_forward_solve_checks_shapes():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[31], steps=20)
    ds = discretize(system_1d(), grid)
    with pytest.raises(DiscretizationError):
        solve_forward(ds, np.zeros(5))
    with pytest.raises(DiscretizationError):
        solve_forward(ds, None, u=np.zeros((20, 62)))
    with pytest.raises(DiscretizationError):
        solve_forward(ds, None, forcing=np.zeros((20, 62)))


def test_trajectory_table_includes_boundary_nodes():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[15], steps=4)
    ds = discretize(system_1d(a12="1"), grid)
    u = np.ones((4, 15))
    frame = solve_forward(ds, np.ones(30), u=u).to_frame()
    assert list(frame.columns) == ['t [time]', 'x1 [length]', 'y1 [state]', 'y2 [state]', 'u [control]']
    assert len(frame) == 5 * 17
    boundary = frame[(frame['x1 [length]'] == 0.0) | (frame['x1 [length]'] == 1.0)]
    assert np.all(boundary['y1 [state]'] == 0.0)
    assert np.all(frame[frame['t [time]'] == 1.0]['u [control]'] == 0.0)


def test_manufactured_forcing_vanishes_for_exact_heat_solution():
    system = heat_only()
    f1, f2 = manufactured_forcing(system, parse_expression("exp(-pi^2*t)*sin(pi*x1)", 1), parse_expression("0", 1))
    rng = np.random.default_rng(0)
    points = [rng.uniform(0, 1, 20), rng.uniform(0, 1, 20)]
    np.testing.assert_allclose(np.broadcast_to(evaluate_array(f1, points), (20,)), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.broadcast_to(evaluate_array(f2, points), (20,)), 0.0, atol=1e-12)


def test_crank_nicolson_converges_at_second_order():
    system = system_1d(horizon=0.5, a12="1", a21="x1", a22="-1")
    y1 = parse_expression("sin(pi*x1)*exp(-t)", 1)
    y2 = parse_expression("sin(2*pi*x1)*(1 + t)", 1)
    f1, f2 = manufactured_forcing(system, y1, y2)
    errors = []
    for nodes in (15, 31):
        h = 1.0 / (nodes + 1)
        grid = Grid.uniform(system.domain, system.horizon, nodes=[nodes], dt=h)
        ds = discretize(system, grid, theta=0.5)
        trajectory = solve_forward(ds, sample_initial(grid, y1, y2), forcing=sample_pair(grid, f1, f2))
        errors.append(space_time_error(grid, trajectory.states, sample_pair(grid, y1, y2)))
    assert errors[1] < errors[0] / 3.0


# HUM -----------------------------------------------------------------------------

def hum_case(mode, second="sin(2*pi*x1)", **coefficients):
    system = system_1d(horizon=0.5, **coefficients)
    grid = Grid.uniform(system.domain, system.horizon, nodes=[15], steps=20)
    ds = discretize(system, grid, mode=mode)
    y0 = sample_initial(grid, parse_expression("sin(pi*x1)", 1), parse_expression(second, 1))
    return ds, y0


def test_hum_control_rejects_nonpositive_penalty():
    ds, y0 = hum_case(TWO_CONTROL)
    with pytest.raises(DiscretizationError):
        hum_control(ds, y0, 0.0)


def test_hum_control_reduces_the_terminal_state():
    ds, y0 = hum_case(TWO_CONTROL)
    result = hum_control(ds, y0, 1e-3)
    free = ds.grid.norm(ds.terminal(y0))
    assert result.converged
    assert result.terminal_norm < free
    assert result.history[-1] <= 0.0
    assert result.cost == pytest.approx(0.5 * result.control_norm ** 2 + result.terminal_norm ** 2 / 2e-3)


def test_hum_sweep_is_monotone_in_epsilon():
    ds, y0 = hum_case(TWO_CONTROL)
    sweep = hum_sweep(ds, y0, [1e-3, 1e-1, 1e-2], max_workers=1)
    assert [r.epsilon for r in sweep.results] == [1e-1, 1e-2, 1e-3]
    assert not sweep.failures
    assert sweep.monotone()
    assert sweep.slope > 0.0
    assert len(sweep.to_rows()) == 3


def test_uncoupled_second_component_plateaus():
    # without coupling into y2 a single control cannot steer it
    ds, y0 = hum_case(ONE_CONTROL, second="sin(pi*x1)", g21=[0.0], a12="1")
    sweep = hum_sweep(ds, y0, [1e-2, 1e-3, 1e-4], max_workers=1)
    assert sweep.plateau


def test_slope_and_plateau_helpers():
    eps = [1e-1, 1e-2, 1e-3]
    assert loglog_slope(eps, eps) == pytest.approx(1.0)
    assert loglog_slope(eps, [2.0, 2.0, 2.0]) == pytest.approx(0.0, abs=1e-12)
    assert detect_plateau(eps, [1.0, 0.5, 0.49])
    assert not detect_plateau(eps, [1.0, 0.1, 0.01])
    assert not detect_plateau([1e-1], [1.0])


# assembly ------------------------------------------------------------------------

def test_compute_rates():
    rates = compute_rates([0.1, 0.05, 0.025], [1e-2, 2.5e-3, 0.0])
    assert rates[0] is None
    assert rates[1] == pytest.approx(2.0)
    assert rates[2] is None


def test_assembly_rejects_support_outside_the_solver_window():
    system, manufactured = reference_assembly_case()
    solver = algebraic_solver(system, rng=np.random.default_rng(0))
    manufactured.support = Window((0.0, 0.0), (1.0, 1.0))
    grid = Grid.uniform(system.domain, system.horizon, spacing=1 / 32, dt=1 / 32)
    with pytest.raises(SupportViolationError):
        fictitious_assembly(system, grid, manufactured, solver)


@pytest.mark.slow
def test_reference_assembly_reaches_zero_and_refines():
    system, manufactured = reference_assembly_case()
    solver = algebraic_solver(system, rng=np.random.default_rng(0))
    grid = Grid.uniform(system.domain, system.horizon, spacing=1 / 32, dt=1 / 32)
    report = fictitious_assembly(system, grid, manufactured, solver)
    assert report.support_ok
    assert report.terminal_norm == 0.0
    assert report.control_norm > 0.0

    study = refinement_study(system, manufactured, solver, [1 / 16, 1 / 32], min_order=0.0, max_workers=2)
    assert study.reports[1].residual < study.reports[0].residual
    assert study.observed_order is not None
    assert list(study.to_frame().columns)[0] == 'h [length]'


@pytest.mark.slow
def test_reference_assembly_is_second_order_on_three_grids():
    system, manufactured = reference_assembly_case()
    solver = algebraic_solver(system, rng=np.random.default_rng(0))
    spacings = SIMULATE_CONFIG['assembly_spacings']
    assert len(spacings) == 3
    study = refinement_study(system, manufactured, solver, spacings, theta=0.5, min_order=1.9, max_workers=1)
    assert all(rate >= 1.9 for rate in study.rates[1:])
    for report in study.reports:
        assert report.support_ok
        assert report.terminal_norm == 0.0

    # M(u_hat) vanishes at every node of the window outside the data support
    z1, z2, v = solver.apply(*manufactured.u_hat)
    grid = Grid.uniform(system.domain, system.horizon, spacing=spacings[0], dt=spacings[0])
    t, x = (c.ravel() for c in grid.trajectory_coords())
    inside = solver.window.contains
    lo, hi = manufactured.support.lower, manufactured.support.upper
    outside = np.array([inside((ti, xi)) and not (lo[0] <= ti <= hi[0] and lo[1] <= xi <= hi[1])
                        for ti, xi in zip(t, x)])
    assert np.any(outside)
    for component in (z1, z2, v):
        np.testing.assert_allclose(evaluate_array(component, [t[outside], x[outside]]), 0.0, atol=1e-14)
