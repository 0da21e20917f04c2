# experiments/spectral_runs.py
"""
Spectral experiments: the one-dimensional counterexample with its discrete
witness, and Fattorini-Hautus tests of potentials and coupled systems.
"""

import numpy as np

from config.config import SPECTRAL_CONFIG, status
from simulate import Grid, discretize
from spectral import (
    COUPLED, SINGLE, blended_potential_system, build_blended_potential_nd, calibrate_blended_potential,
    closed_form_potential, counterexample_residuals, counterexample_system, discrete_counterexample,
    fattorini_check, find_witness, invariant_functional_test,
)
from symbolic import evaluate_array
from .base import Experiment, blended_boxes
from .errors import ConfigError

class CounterexampleExperiment(Experiment):
    """
    Builds (psi, phi, a), checks it, measures the discrete eigen-residuals
    and calibrates the discrete witness; writes psi.csv, phi.csv, a.csv and
    witness.json.
    """

    command = 'counterexample'

    def closed_form_gap(self, data) -> float:
        """max |a - closed form| on the plateau where theta1 = exp(x)."""
        lo, hi = SPECTRAL_CONFIG['exp_plateau']
        x = np.linspace(lo, hi, 202)[1:-1]
        coords = [np.zeros_like(x), x]
        return float(np.max(np.abs(evaluate_array(data.a, coords)
                                   - evaluate_array(closed_form_potential(data), coords))))

    def execute(self) -> str:
        with self.stage('construction'):
            data = self.counterexample_data(self.numeric['theta1_profile'])
            checks = data.checks
            residuals = counterexample_residuals(data, self.numeric['residual_spacings'])
        with self.stage('calibration'):
            spacing = self.numeric['witness_spacing'] or SPECTRAL_CONFIG['witness_spacing']
            grid = Grid.uniform([SPECTRAL_CONFIG['domain']], SPECTRAL_CONFIG['witness_horizon'],
                                spacing=spacing, steps=SPECTRAL_CONFIG['witness_steps'])
            calibrated = discrete_counterexample(data, grid)
            ds = discretize(calibrated.system(data), grid)
            witness = find_witness(ds)
            invariant = invariant_functional_test(ds, witness, rng=self.rng)
        with self.stage('artifacts'):
            table = data.sample(self.numeric['sample_count'])
            for column, filename in (('psi [1]', 'psi.csv'), ('phi [1]', 'phi.csv'), ('a [1/time]', 'a.csv')):
                self.write_frame(table[['x [length]', column]], filename)
            report = {
                'construction': data.to_dict(),
                'residuals': residuals.to_dict(orient='list'),
                'calibration': calibrated.to_dict(),
                'witness': witness.to_dict(),
                'invariant': invariant.to_dict(),
            }
            if data.profile == 'exp':
                report['closed_form_gap'] = self.closed_form_gap(data)
            self.write_json(report, 'witness.json')

        rates = residuals[['phi_rate [1]', 'psi_rate [1]']].iloc[-1]
        self.metrics.update(checks)
        self.metrics.update(C1=data.c1, C2=data.c2, C3=data.c3, alpha=data.alpha,
                            phi_rate=rates['phi_rate [1]'], psi_rate=rates['psi_rate [1]'],
                            calibration_residual=calibrated.residual, witness_mu=witness.mu,
                            witness_control_residual=witness.control_residual,
                            invariant_drift=invariant.max_drift)
        if 'closed_form_gap' in report:
            self.metrics['closed_form_gap'] = report['closed_form_gap']
        return (f"max|phi| on omega {checks['phi_on_omega']:.2e}, branch {data.branch}, "
                f"residual orders {rates['phi_rate [1]']:.2f}/{rates['psi_rate [1]']:.2f}, "
                f"witness drift {invariant.max_drift:.1e}")


class FattoriniExperiment(Experiment):
    """Single-equation or coupled eigen-test; writes fattorini.json and fattorini_pairs.csv."""

    command = 'fattorini'

    def dimension(self) -> int:
        nodes = self.numeric['nodes']
        return len(nodes) if nodes else 1

    def potential(self, grid: Grid):
        """(a, default window box, coupled system) of the named potential or expression text."""
        name = self.numeric['potential']
        if name in ('blended', 'blended-calibrated'):
            boxes = blended_boxes(grid.dimension)
            built = build_blended_potential_nd(boxes['domain'], boxes['omega'], boxes['omega1'], boxes['omega2'])
            a = built.a
            if name == 'blended-calibrated':
                a = calibrate_blended_potential(built, grid).a
            return a, built.omega1, blended_potential_system(built, grid.horizon, a=a)
        if name in ('counterexample', 'counterexample-calibrated'):
            if grid.dimension != 1:
                raise ConfigError(["numeric.nodes: the counterexample potential is one-dimensional"])
            data = self.counterexample_data()
            if name == 'counterexample-calibrated':
                calibrated = discrete_counterexample(data, grid)
                return calibrated.a, [data.omega], calibrated.system(data)
            return data.a, [data.omega], counterexample_system(data, horizon=grid.horizon)
        return self.expression(name, grid.dimension), None, None

    def execute(self) -> str:
        mode = self.numeric['mode']
        name = self.numeric['potential']
        window = self.numeric['window']
        with self.stage('setup'):
            if self.config.system is not None and mode == COUPLED:
                system = self.resolve_system()
                grid = self.grid_for(system)
                a, box = None, None
            else:
                domain = [SPECTRAL_CONFIG['domain']] * self.dimension()
                grid = self.make_grid(domain, 1.0)
                a, box, system = self.potential(grid)
            if window is not None:
                box = [tuple(window)] + list(grid.domain[1:])
            if mode == SINGLE and box is None:
                raise ConfigError(["numeric.window: required for the single-equation test of an expression"])
            if mode == COUPLED and system is None:
                raise ConfigError(["system: the coupled test of an expression potential needs a system block"])
        with self.stage('eigen'):
            target = a if mode == SINGLE else system
            report = fattorini_check(target, grid, mode, box if (mode == SINGLE or window is not None) else None,
                                     self.numeric['eigenpairs'], self.numeric['eigenvalue'],
                                     self.numeric['tolerance'])
        with self.stage('artifacts'):
            self.write_json({'potential': name if self.config.system is None or mode == SINGLE else 'system',
                             'grid': grid.to_dict(), 'report': report.to_dict()}, 'fattorini.json')
            self.write_frame(report.to_frame(), 'fattorini_pairs.csv')

        smallest = min(report.window_values) if report.window_values else float('nan')
        self.metrics.update(obstructed=float(report.obstructed), smallest_window_value=smallest,
                            pairs=len(report.eigenvalues), max_eigen_residual=max(report.eigen_residuals))
        status(f"📊 eigenvalues {', '.join(f'{s:.6g}' for s in report.eigenvalues)}", 1)
        return f"{report.verdict} ({mode}), smallest window value {smallest:.2e}"
