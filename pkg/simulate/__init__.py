# simulate/__init__.py
"""
Finite-difference simulation: theta-scheme discretization, forward solves,
penalized HUM controls and the fictitious-control assembly check.
"""

from .assembly import (
    AssemblyReport, AssemblyStudy, ManufacturedSolution, compute_rates, fictitious_assembly,
    manufactured_solution, one_control_residual, reference_assembly_case, refinement_study, zero_solution,
)
from .discrete import (
    CONTROL_MODES, ONE_CONTROL, TWO_CONTROL, DiscreteSystem, Trajectory, control_mask, discretize,
    manufactured_forcing, sample_initial, sample_pair, solve_forward, space_time_error,
)
from .errors import ConvergenceOrderError, DiscretizationError, InstabilityError, SupportViolationError
from .grid import Grid
from .hum import HUMResult, HUMSweep, detect_plateau, hum_control, hum_sweep, loglog_slope

__all__ = [
    'Grid', 'DiscreteSystem', 'Trajectory', 'discretize', 'solve_forward', 'control_mask',
    'sample_pair', 'sample_initial', 'manufactured_forcing', 'space_time_error',
    'ONE_CONTROL', 'TWO_CONTROL', 'CONTROL_MODES',
    'HUMResult', 'HUMSweep', 'hum_control', 'hum_sweep', 'loglog_slope', 'detect_plateau',
    'ManufacturedSolution', 'AssemblyReport', 'AssemblyStudy', 'manufactured_solution', 'zero_solution',
    'reference_assembly_case', 'fictitious_assembly', 'one_control_residual', 'refinement_study',
    'compute_rates',
    'DiscretizationError', 'InstabilityError', 'SupportViolationError', 'ConvergenceOrderError',
]
