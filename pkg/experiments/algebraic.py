# experiments/algebraic.py
"""
Algebraic experiments: commutator elimination, the module-membership
condition and coupling normalization.
"""

from normalize import normalize_system
from solvability import (
    HOLDS, NormalFormError, Window, assemble_full_solver, build_system_operators, check_condition, eliminate,
)
from .base import Experiment


def _window(box) -> Window:
    return None if box is None else Window(tuple(box['lower']), tuple(box['upper']))


class EliminateExperiment(Experiment):
    """Builds M with L o M = Id; writes elimination.json."""

    command = 'eliminate'

    def execute(self) -> str:
        with self.stage('system'):
            system = self.normal_form_system()
            operators = build_system_operators(system)
        window = _window(self.numeric['window']) or system.control_window
        with self.stage('eliminate'):
            elimination = eliminate(operators.L1, operators.L3, window, delta=self.numeric['delta'],
                                    rng=self.rng, verify=self.numeric['verify'])
            solver = assemble_full_solver(system, elimination, operators, verify=True, rng=self.rng)
        with self.stage('artifacts'):
            self.write_json({
                'system': system.to_dict(),
                'operators': operators.to_dict(),
                'elimination': elimination.to_dict(),
                'solver': solver.to_dict(),
            }, 'elimination.json')

        n = system.dimension
        self.metrics.update(
            steps=elimination.step_count, elimination_order=elimination.order,
            derivative_budget=elimination.derivative_budget, operator_order=solver.operator_order,
            order_bound=n * n, identity_residual=solver.residual,
        )
        return (f"M of order {solver.operator_order} after {elimination.step_count} steps "
                f"(elimination order {elimination.order}, N^2 = {n * n}), identity residual {solver.residual:.2e}")


class ConditionExperiment(Experiment):
    """Module-membership test of a~22; writes condition.json and condition_slices.csv."""

    command = 'check-condition'

    def execute(self) -> str:
        with self.stage('system'):
            system = self.normal_form_system()
        with self.stage('condition'):
            report = check_condition(system, _window(self.numeric['window']), self.numeric['tolerance'],
                                     self.numeric['slices_per_axis'], self.numeric['points_per_slice'])
        with self.stage('artifacts'):
            self.write_json(report.to_dict(), 'condition.json')
            rows = []
            for index, record in enumerate(report.slices):
                row = {'slice': index}
                row.update(record['slice'])
                row['residual'] = record['residual']
                row['degenerate'] = record['degenerate']
                rows.append(row)
            axes = report.slices[0]['slice'] if report.slices else {}
            units = {axis: ('time' if axis == 't' else 'length') for axis in axes}
            self.write_records(rows, 'condition_slices.csv', units)

        self.metrics.update(max_residual=report.max_residual, slices=len(report.slices),
                            holds=float(report.verdict == HOLDS))
        return report.summary()


class NormalizeExperiment(Experiment):
    """Straightening plus gauge; writes flowmap.csv and normalized_system.json."""

    command = 'normalize'

    def execute(self) -> str:
        with self.stage('system'):
            system = self.resolve_system()
        with self.stage('normalize'):
            result = normalize_system(system, self.numeric['edge'], self.numeric['ode_tol'],
                                      self.numeric['table_size'], self.numeric['epsilon'])
            try:
                normal_form_residual = result.system.check_normal_form(tolerance=1e-6)
            except NormalFormError as e:
                normal_form_residual = float('nan')
                print(f"    ⚠️ {e}")
        with self.stage('artifacts'):
            if result.flow is not None:
                self.write_frame(result.flow.to_frame(), 'flowmap.csv')
            self.write_json(result.to_dict(), 'normalized_system.json')

        self.metrics.update(coupling_residual=result.coupling_residual,
                            normal_form_residual=normal_form_residual,
                            straightened=float(result.flow is not None))
        straightened = 'straightened and gauged' if result.flow is not None else 'gauged (coupling already d/dx1)'
        return (f"{straightened}, coupling residual {result.coupling_residual:.2e}, "
                f"normal-form residual {normal_form_residual:.2e}")
