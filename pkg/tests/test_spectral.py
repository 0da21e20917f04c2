# tests/test_spectral.py
import dataclasses
import math

import numpy as np
import pytest

from config.config import SPECTRAL_CONFIG
from simulate import Grid, discretize
from spectral import (
    COUPLED, SINGLE, S7, ConstructionError, EigenSolverError, blend_width, build_blended_potential_nd,
    build_counterexample_1d, calibrate_blended_potential, check_counterexample, closed_form_potential,
    counterexample_residuals, counterexample_system, cutoff, discrete_counterexample, exponential_profile,
    fattorini_check, fattorini_single, find_witness, invariant_functional_test, pure_stencil,
    stencil_interior, unit_bump,
)
from symbolic import add, blend, bump, differentiate, evaluate_array, integrate_adaptive, mul

PI = math.pi


def values(expr, x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(evaluate_array(expr, [np.zeros_like(x), x]), x.shape)


@pytest.fixture(scope='module')
def counterexample():
    return build_counterexample_1d()


# counterexample ------------------------------------------------------------------

def test_blend_width_meets_the_collar_tolerance():
    x0, collar = 7 * PI / 15, PI / 15
    assert blend_width(10.0, x0, collar) == collar
    w = blend_width(0.01, x0, collar)
    assert 0.0 < w < collar
    assert abs(math.sin(3 * (x0 - w)) - S7) == pytest.approx(0.01, abs=1e-10)


def test_default_blend_tolerance_is_resolved_on_the_refinement_grids():
    x0, collar = SPECTRAL_CONFIG['omega'][0], PI / 15
    coarsest = max(SPECTRAL_CONFIG['witness_spacing'], *SPECTRAL_CONFIG['residual_spacings'])
    finest = min(SPECTRAL_CONFIG['residual_spacings'])
    assert SPECTRAL_CONFIG['blend_tolerance'] == 0.1
    assert blend_width(0.1, x0, collar) >= 3 * coarsest
    assert blend_width(1e-3, x0, collar) < finest


def test_unit_bump_has_unit_mass():
    theta = unit_bump(0.2, 0.5, 1e-12)
    assert integrate_adaptive(theta, 1, 0.2, 0.5, 1e-12) == pytest.approx(1.0, abs=1e-10)
    assert np.all(values(theta, [0.1, 0.2, 0.5, 0.6]) == 0.0)


def test_exponential_profile_needs_an_inner_plateau():
    profile = exponential_profile((0.2, 0.6), (0.3, 0.5))
    x = np.linspace(0.3, 0.5, 5)
    np.testing.assert_allclose(values(profile, x), np.exp(x), rtol=1e-14)
    with pytest.raises(ConstructionError):
        exponential_profile((0.2, 0.6), (0.1, 0.5))


def test_counterexample_invariants(counterexample):
    data = counterexample
    assert data.c1 > 0
    assert (data.c2 > 0) != (data.c3 > 0) or data.dichotomy == 0
    assert data.branch in ('C2', 'C3')
    assert data.checks['psi_boundary'] <= 1e-12
    assert data.checks['psi_constancy'] <= 1e-12
    assert data.checks['collar_bound'] < data.blend_tolerance
    assert data.checks['phi_on_omega'] < 1e-8
    assert data.checks['phi_boundary'] < 1e-8
    assert data.to_dict()['eigenvalue'] == 9.0


def test_counterexample_table_has_unit_headers(counterexample):
    frame = counterexample.sample(51)
    assert list(frame.columns) == ['x [length]', 'psi [1]', 'phi [1]', 'a [1/time]']
    assert len(frame) == 51


def test_counterexample_residuals_converge_at_second_order(counterexample):
    frame = counterexample_residuals(counterexample, [PI / 200, PI / 400])
    assert frame['psi_residual [1]'].iloc[1] < frame['psi_residual [1]'].iloc[0]
    assert frame['phi_residual [1]'].iloc[1] < frame['phi_residual [1]'].iloc[0]
    assert np.isnan(frame['psi_rate [1]'].iloc[0])
    assert frame['psi_rate [1]'].iloc[1] >= 1.9
    assert frame['phi_rate [1]'].iloc[1] >= 1.9


def test_check_counterexample_rejects_phi_leaking_onto_omega(counterexample):
    x0, x1 = counterexample.omega
    leak = bump([(1, x0, x1)], amplitude=1e-6)
    broken = dataclasses.replace(counterexample, phi=add(counterexample.phi, leak))
    with pytest.raises(ConstructionError, match='on omega'):
        check_counterexample(broken)


def test_check_counterexample_rejects_phi_at_the_ends(counterexample):
    edge = mul(1e-6, blend(1, 0.2, 0.1))
    broken = dataclasses.replace(counterexample, phi=add(counterexample.phi, edge))
    with pytest.raises(ConstructionError, match='at the boundary'):
        check_counterexample(broken)


def test_counterexample_rejects_supports_inside_the_collars():
    with pytest.raises(ConstructionError):
        build_counterexample_1d(supports=[(1.2, 1.4), SPECTRAL_CONFIG['theta2_support'],
                                          SPECTRAL_CONFIG['theta3_support']], check=False)
    with pytest.raises(ConstructionError):
        build_counterexample_1d(theta1_profile='gauss', check=False)


def test_counterexample_system_uses_the_window(counterexample):
    system = counterexample_system(counterexample, (0.32, 0.46), horizon=0.5)
    assert system.control_window.lower == (0.0, 0.32)
    assert system.control_window.upper == (0.5, 0.46)
    assert system.normal_form
    assert system.domain == ((0.0, PI),)


def test_exponential_profile_matches_closed_form_potential():
    data = build_counterexample_1d(theta1_profile='exp')
    lo, hi = SPECTRAL_CONFIG['exp_plateau']
    x = np.linspace(lo, hi, 11)[1:-1]
    np.testing.assert_allclose(values(data.a, x), values(closed_form_potential(data), x), rtol=1e-10, atol=1e-10)


@pytest.mark.slow
def test_calibrated_counterexample_has_an_exact_witness(counterexample):
    grid = Grid.uniform([SPECTRAL_CONFIG['domain']], SPECTRAL_CONFIG['witness_horizon'],
                        spacing=SPECTRAL_CONFIG['witness_spacing'], steps=SPECTRAL_CONFIG['witness_steps'])
    calibrated = discrete_counterexample(counterexample, grid)
    assert calibrated.residual < 1e-8
    assert calibrated.c1 >= 0 and calibrated.c_other >= 0
    assert np.linalg.norm(calibrated.witness) == pytest.approx(1.0)
    assert calibrated.to_dict()["max_q_on_window"] < 1e-8

    ds = discretize(calibrated.system(counterexample), grid)
    witness = find_witness(ds)
    assert witness.control_residual <= SPECTRAL_CONFIG['witness_tolerance']
    assert witness.mu == pytest.approx(-calibrated.eigenvalue, rel=1e-8)
    report = invariant_functional_test(ds, witness, rng=np.random.default_rng(0))
    assert len(report.drifts) == SPECTRAL_CONFIG['random_controls'] + 1
    assert report.max_drift < 1e-8


def test_calibration_needs_the_counterexample_interval(counterexample):
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[31], steps=4)
    with pytest.raises(ConstructionError):
        discrete_counterexample(counterexample, grid)


# blended potential ---------------------------------------------------------------

def blended_1d():
    return build_blended_potential_nd((0.0, 1.0), (0.45, 0.55), (0.4, 0.6), (0.3, 0.7))


def test_cutoff_is_one_inside_and_zero_outside():
    chi = cutoff(((0.4, 0.6),), ((0.3, 0.7),))
    assert np.all(values(chi, [0.4, 0.5, 0.6]) == 1.0)
    assert np.all(values(chi, [0.1, 0.3, 0.7, 0.9]) == 0.0)


def test_blended_potential_is_constant_on_omega1():
    potential = blended_1d()
    assert potential.eigenvalue == pytest.approx(PI ** 2)
    x = np.linspace(0.41, 0.59, 7)
    np.testing.assert_allclose(values(potential.a, x), -PI ** 2, rtol=1e-12)
    assert np.all(values(differentiate(potential.phi, 1), x) == 0.0)
    assert potential.min_phi > potential.delta


def test_blended_potential_solves_the_eigen_equation():
    potential = blended_1d()
    x = np.linspace(0.05, 0.95, 19)
    phi = values(potential.phi, x)
    second = values(differentiate(differentiate(potential.phi, 1), 1), x)
    np.testing.assert_allclose(-second - values(potential.a, x) * phi, potential.eigenvalue * phi, atol=1e-9)


def test_blended_potential_rejects_bad_nesting():
    with pytest.raises(ConstructionError):
        build_blended_potential_nd((0.0, 1.0), (0.35, 0.55), (0.4, 0.6), (0.3, 0.7))
    with pytest.raises(ConstructionError):
        build_blended_potential_nd((0.0, 1.0), (0.45, 0.55), (0.4, 0.6), (0.3, 0.7), delta=0.95)


def test_pure_stencil_marks_untouched_nodes():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[9], steps=1)
    perturbation = np.zeros(9)
    perturbation[4] = 1.0
    np.testing.assert_array_equal(pure_stencil(grid, perturbation),
                                  [True, True, True, False, False, False, True, True, True])


# Fattorini-Hautus tests ----------------------------------------------------------

def test_stencil_interior_drops_window_edges():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[63], steps=1)
    nodes = stencil_interior(grid, (0.45, 0.55))
    x = grid.axes()[0][nodes]
    assert len(x) == 5
    assert np.all((x > 0.46) & (x < 0.54))


def test_calibrated_blended_potential_is_obstructed():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[63], steps=1)
    calibrated = calibrate_blended_potential(blended_1d(), grid)
    report = fattorini_single(calibrated.a_nodes, grid, (0.45, 0.55), eigenpairs=3)
    assert report.eigenvalues[0] == pytest.approx(calibrated.eigenvalue, rel=1e-9)
    assert 0 in report.obstructed_indices
    assert report.verdict == 'obstructed'
    assert list(report.to_frame().columns) == ['eigenvalue [1/time]', 'eigen_residual [1]', 'window_value [1]']


def test_heat_operator_is_not_obstructed():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[63], steps=1)
    report = fattorini_check(np.zeros(63), grid, SINGLE, window=(0.45, 0.55), eigenpairs=4)
    assert not report.obstructed
    assert report.eigenvalues[0] == pytest.approx(4 * 64 ** 2 * math.sin(PI / 128) ** 2)


def test_fattorini_check_validates_its_arguments():
    grid = Grid.uniform([(0.0, 1.0)], 1.0, nodes=[15], steps=1)
    with pytest.raises(EigenSolverError):
        fattorini_check(np.zeros(15), grid, SINGLE)
    with pytest.raises(EigenSolverError):
        fattorini_check(np.zeros(15), grid, COUPLED)
    with pytest.raises(EigenSolverError):
        fattorini_check(np.zeros(15), grid, 'double', window=(0.2, 0.8))
    with pytest.raises(EigenSolverError):
        fattorini_single(np.zeros(14), grid, (0.2, 0.8))


def test_coupled_test_on_the_calibrated_counterexample(counterexample):
    grid = Grid.uniform([SPECTRAL_CONFIG['domain']], SPECTRAL_CONFIG['witness_horizon'],
                        spacing=SPECTRAL_CONFIG['witness_spacing'], steps=SPECTRAL_CONFIG['witness_steps'])
    calibrated = discrete_counterexample(counterexample, grid)
    report = fattorini_check(calibrated.system(counterexample), grid, COUPLED, eigenvalue=calibrated.eigenvalue,
                             eigenpairs=1)
    assert report.eigenvalues[0] == pytest.approx(calibrated.eigenvalue, rel=1e-8)
    assert report.obstructed
