# experiments/numerical.py
"""
Finite-difference experiments: forward simulation, penalized HUM sweeps
with witness diagnostics, and the fictitious-control assembly study.
"""

import numpy as np

from config.config import SPECTRAL_CONFIG
from simulate import (
    ONE_CONTROL, TWO_CONTROL, discretize, hum_sweep, manufactured_solution, reference_assembly_case,
    refinement_study, sample_pair, solve_forward,
)
from solvability import Window, algebraic_solver
from spectral import WitnessNotFoundError, find_witness, invariant_functional_test
from symbolic import DomainError
from .base import Experiment, with_window
from .errors import ConfigError

CONTROL_NAMES = {ONE_CONTROL: ('u',), TWO_CONTROL: ('u1', 'u2')}


class SimulateExperiment(Experiment):
    """Forward theta-scheme solve; writes trajectory.csv."""

    command = 'simulate'

    def controls(self, ds, mode: str):
        texts = self.numeric['control']
        if texts is None:
            return None
        names = CONTROL_NAMES[mode]
        unknown = sorted(set(texts) - set(names))
        if unknown:
            raise ConfigError([f"numeric.control: unknown names {unknown} for mode {mode} "
                               f"(expected {', '.join(names)})"])
        n = ds.grid.dimension
        parts = [self.expression(texts.get(name), n) for name in names]
        if len(parts) == 1:
            parts.append(self.expression(None, n))
        # u^k acts on (t_k, t_{k+1}) and is sampled at t_k
        samples = sample_pair(ds.grid, *parts)[:-1]
        return samples[:, :ds.control_size(mode)]

    def execute(self) -> str:
        mode = self.numeric['mode']
        with self.stage('discretize'):
            system = with_window(self.resolve_system(), self.numeric['window'])
            grid = self.grid_for(system)
            ds = discretize(system, grid, self.numeric['theta'], mode)
            y0 = self.initial_state(ds, self.numeric['initial'])
            u = self.controls(ds, mode)
        with self.stage('solve'):
            trajectory = solve_forward(ds, y0, u, which=mode)
            duality = ds.duality_residual(self.rng, which=mode)
        with self.stage('artifacts'):
            self.write_frame(trajectory.to_frame(), 'trajectory.csv')
            self.write_json({'discretization': ds.to_dict(), 'norms': trajectory.norms()}, 'simulation.json')

        norms = trajectory.norms()
        self.metrics.update(initial_norm=norms[0], terminal_norm=norms[-1], duality_residual=duality,
                            diffusion_decay=ds.diffusion_decay(), state_size=ds.state_size)
        return f"|y(T)| = {norms[-1]:.3e} from |y(0)| = {norms[0]:.3e}, duality residual {duality:.1e}"


class HUMSweepExperiment(Experiment):
    """Penalized HUM over a list of epsilons; writes hum_sweep.csv and hum_sweep.json."""

    command = 'hum-sweep'

    def witness_diagnostics(self, ds, y0, mode: str) -> dict:
        """Invariant functional and plateau bound of the discrete witness, when one exists."""
        witness = self.witness
        if witness is None:
            try:
                witness = find_witness(ds, mode)
            except WitnessNotFoundError as e:
                print(f"    🔍 No witness: {e}")
                return {'witness_found': False}
        invariant = invariant_functional_test(ds, witness, y0=y0, rng=self.rng, which=mode)
        grid = ds.grid
        w = witness.vector
        component = abs(grid.cell_volume * (y0 @ w)) / grid.norm(w)
        decay = abs(witness.eigenvalue) ** grid.steps
        return {
            'witness_found': True,
            'witness': witness.to_dict(),
            'invariant': invariant.to_dict(),
            'witness_component': component,
            'plateau_bound': decay * component,
        }

    def execute(self) -> str:
        mode = self.numeric['mode']
        initial = self.numeric['initial']
        if initial is None and self.preset == 'counterexample-calibrated':
            initial = 'witness'
        with self.stage('discretize'):
            system = with_window(self.resolve_system(), self.numeric['window'])
            grid = self.grid_for(system)
            ds = discretize(system, grid, self.numeric['theta'], mode)
            y0 = self.initial_state(ds, initial)
        epsilons = self.numeric['epsilons'] or SPECTRAL_CONFIG['hum_epsilons']
        with self.stage('sweep'):
            sweep = hum_sweep(ds, y0, epsilons, mode, self.numeric['cg_tol'], max_workers=self.config.threads)
        if not sweep.results:
            raise DomainError(f"every HUM solve failed: {sweep.failures}")
        diagnostics = {'witness_found': False}
        if initial == 'witness' and mode == ONE_CONTROL:
            with self.stage('witness'):
                diagnostics = self.witness_diagnostics(ds, y0, mode)
        with self.stage('artifacts'):
            self.write_records(sweep.to_rows(), 'hum_sweep.csv',
                               {'terminal_norm': 'state', 'control_norm': 'control', 'cost': 'control^2'})
            self.write_json({
                'discretization': ds.to_dict(),
                'initial_norm': grid.norm(y0),
                'slope': sweep.slope,
                'plateau': sweep.plateau,
                'monotone': sweep.monotone(),
                'failures': sweep.failures,
                'diagnostics': diagnostics,
                'history': {f"{r.epsilon:.1e}": r.history for r in sweep.results},
            }, 'hum_sweep.json')

        last = sweep.results[-1]
        initial_norm = grid.norm(y0)
        # a plateau only counts when it sits above the floor relative to |y0|
        floor = SPECTRAL_CONFIG['plateau_floor'] * initial_norm
        self.metrics.update(slope=sweep.slope, plateau=float(sweep.plateau), monotone=float(sweep.monotone()),
                            smallest_epsilon=last.epsilon, smallest_terminal_norm=last.terminal_norm,
                            initial_norm=initial_norm, failures=len(sweep.failures),
                            plateau_above_floor=float(sweep.plateau and last.terminal_norm > floor))
        summary = (f"slope {sweep.slope:.3f}, plateau {sweep.plateau}, "
                   f"|y(T)| = {last.terminal_norm:.3e} at eps = {last.epsilon:.0e}")
        if diagnostics['witness_found']:
            bound = diagnostics['plateau_bound']
            drift = diagnostics['invariant']['max_drift']
            self.metrics.update(plateau_bound=bound, invariant_drift=drift,
                                witness_component=diagnostics['witness_component'],
                                plateau_holds=float(last.terminal_norm >= bound * (1.0 - 1e-6)))
            summary += f", witness bound {bound:.3e}, invariant drift {drift:.1e}"
        return summary


class AssemblyExperiment(Experiment):
    """Fictitious-control assembly refinement; writes assembly.json and assembly_refinement.csv."""

    command = 'assembly'

    def case(self):
        """System, M and the manufactured pair; the default support is inside the window of M."""
        manufactured = None
        if self.config.system is None or self.preset == 'assembly-reference':
            system, manufactured = reference_assembly_case()
            if self.config.system is not None:
                system = with_window(system, self.config.system.get('window'))
        else:
            system = self.normal_form_system()
        solver = algebraic_solver(system, rng=self.rng)
        support = self.numeric['support']
        weights = self.numeric['weights']
        if manufactured is not None and support is None and weights is None:
            return system, solver, manufactured
        if weights is not None and len(weights) != 2:
            raise ConfigError(["numeric.weights: two entries expected"])
        if support is not None:
            support = Window(tuple(support['lower']), tuple(support['upper']))
        else:
            support = manufactured.support if manufactured is not None else solver.window.shrink(0.8)
        return system, solver, manufactured_solution(system, support, tuple(weights or (1.0, 0.5)))

    def execute(self) -> str:
        with self.stage('solver'):
            system, solver, manufactured = self.case()
        with self.stage('refinement'):
            study = refinement_study(system, manufactured, solver, self.numeric['spacings'],
                                     self.numeric['theta'], self.numeric['min_order'],
                                     max_workers=self.config.threads)
        with self.stage('artifacts'):
            self.write_frame(study.to_frame(), 'assembly_refinement.csv')
            self.write_json({'solver': solver.to_dict(), 'study': study.to_dict(),
                             'support': manufactured.support.to_dict()}, 'assembly.json')

        finest = study.reports[-1]
        order = study.observed_order
        self.metrics.update(observed_order=np.nan if order is None else order, finest_residual=finest.residual,
                            terminal_norm=finest.terminal_norm, leak=max(r.leak for r in study.reports),
                            solver_order=solver.operator_order)
        order_text = 'n/a' if order is None else f"{order:.3f}"
        return (f"observed order {order_text}, finest residual {finest.residual:.3e}, "
                f"|y(T)| = {finest.terminal_norm:.1e}, support ok")
