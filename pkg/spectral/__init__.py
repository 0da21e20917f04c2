# spectral/__init__.py
"""
Spectral layer: the one-dimensional counterexample, blended potentials,
Fattorini-Hautus tests and discrete uncontrollability witnesses.
"""

from .blended import (
    BlendedPotential, CalibratedPotential, blended_potential_system, build_blended_potential_nd,
    calibrate_blended_potential, cutoff, discrete_dirichlet_eigenvalue, first_eigenfunction, pure_stencil,
)
from .calibration import DiscreteCounterexample, discrete_counterexample
from .counterexample import (
    C7, S7, CounterexampleData, blend_width, build_counterexample_1d, check_counterexample,
    closed_form_potential, counterexample_residuals, counterexample_system, exponential_profile, unit_bump,
)
from .errors import ConstructionError, EigenSolverError, WitnessNotFoundError
from .fattorini import (
    COUPLED, SINGLE, FattoriniReport, fattorini_check, fattorini_coupled, fattorini_single, stencil_interior,
)
from .witness import InvariantReport, Witness, find_witness, invariant_functional_test, witness_initial_state

__all__ = [
    'ConstructionError', 'EigenSolverError', 'WitnessNotFoundError',
    'CounterexampleData', 'build_counterexample_1d', 'check_counterexample', 'counterexample_system',
    'counterexample_residuals', 'closed_form_potential', 'blend_width', 'unit_bump', 'exponential_profile',
    'S7', 'C7',
    'BlendedPotential', 'CalibratedPotential', 'build_blended_potential_nd', 'calibrate_blended_potential',
    'blended_potential_system', 'cutoff', 'first_eigenfunction', 'discrete_dirichlet_eigenvalue', 'pure_stencil',
    'DiscreteCounterexample', 'discrete_counterexample',
    'FattoriniReport', 'fattorini_check', 'fattorini_single', 'fattorini_coupled', 'stencil_interior',
    'SINGLE', 'COUPLED',
    'Witness', 'InvariantReport', 'find_witness', 'invariant_functional_test', 'witness_initial_state',
]
