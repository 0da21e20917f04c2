# config/config.py
"""
Configuration module for the Fictitious Control Framework.

Defines numeric defaults for every stage of the pipeline (symbolic algebra,
solvability checks, coupling normalization, finite-difference simulation,
spectral witnesses), worker-pool limits, output formatting and the run
database settings.

Features:
- Per-module numeric defaults as plain dictionaries
- Environment overrides loaded through python-dotenv
- Parallel sweep configuration
- Database configuration for run persistence
- Console status helper honouring the verbose flag
"""

import math
import os

from dotenv import load_dotenv

load_dotenv()


# Expression algebra and quadrature
SYMBOLIC_CONFIG = {
    'quad_tol': 1e-10,           # absolute tolerance for adaptive quadrature
    'quad_limit': 200,           # maximum number of subintervals (depth limit)
    'primitive_tol': 1e-12,      # tolerance for integral(...) nodes at evaluation time
    'node_limit': 1_000_000,     # expression blow-up guard per coefficient
    'fd_step': 1e-5,             # central finite-difference step for derivative checks
    'blend_cutoff': 1e3,         # 1/tau beyond which exp(-1/tau) is treated as 0
}

# Operator construction, elimination and identity checks
SOLVABILITY_CONFIG = {
    'samples_per_axis': 32,      # sub-grid used to locate non-vanishing boxes
    'dyadic_depth': 4,           # refinement depth of the box search
    'relative_delta': 1e-6,      # delta = relative_delta * max |coefficient|
    'zero_tolerance': 1e-12,     # numerical zero, scaled by window diameter
    'min_volume_fraction': 1e-9, # smallest allowed window volume relative to the start
    'verify_steps': True,        # check N = A o L1 + B o L2 after every step
    'step_trials': 10,           # random test functions per step check
    'identity_trials': 20,       # random test functions for verify_identity
    'identity_points': 24,       # random evaluation points per test function
    'identity_tolerance': 1e-8,
    'ellipticity_directions': 16,
    'ellipticity_samples': 6,    # samples per axis for the ellipticity check
    'max_steps': 64,
}

# Module-membership test over slices
CONDITION_CONFIG = {
    'slices_per_axis': 5,        # slices along t and x2..xN
    'points_per_slice': 48,      # x1 samples per slice
    'tolerance': 1e-8,
    'holds_factor': 10.0,        # "holds" needs a residual >= holds_factor * tolerance
    'degenerate_scale': 1e-13,
}

# Flow straightening and gauge removal
NORMALIZE_CONFIG = {
    'ode_tol': 1e-9,
    'table_size': 64,            # nodes per tabulated axis
    'spline_degree': 5,
    'epsilon_fraction': 0.5,     # initial extent as a fraction of the window width
    'epsilon_shrink': 0.5,
    'epsilon_floor': 1e-6,
    'min_jacobian': 1e-8,
    'newton_iterations': 30,
    'newton_tolerance': 1e-12,
    'gauge_origin': 0.0,
    'gauge_samples': 24,
}

# Finite-difference simulation and penalized HUM
SIMULATE_CONFIG = {
    'theta': 1.0,                # implicit Euler by default, 0.5 for Crank-Nicolson
    'mask_transition_cells': 2,
    'min_window_nodes': 8,
    'default_nodes': {1: 127, 2: 31},  # interior nodes per axis when neither spacing nor nodes is given
    'default_steps': 50,
    'cg_tolerance': 1e-10,
    'cg_max_iterations': 2000,
    'assembly_theta': 0.5,       # Crank-Nicolson for the refinement study
    'assembly_spacings': (1 / 64, 1 / 128, 1 / 256),
    'min_convergence_order': 1.8,
    'support_tolerance': 1e-14,  # relative size of (z, v) tolerated outside the data support
}

# Counterexample construction and eigen-tests
SPECTRAL_CONFIG = {
    'domain': (0.0, math.pi),
    'omega': (7 * math.pi / 15, 8 * math.pi / 15),
    'theta1_support': (math.pi / 12, math.pi / 6),
    'theta2_support': (9 * math.pi / 12, 5 * math.pi / 6),
    'theta3_support': (5 * math.pi / 6, 11 * math.pi / 12),
    'exp_plateau': (0.32, 0.46),       # theta1 = exp(x) here; also the controllable window
    'blend_tolerance': 0.1,            # |psi - sin(3x)| bound on the collars
    'eigenvalue': 9.0,
    'quad_tol': 1e-11,
    'sample_count': 1000,
    'eigenpairs': 6,
    'fattorini_tolerance': 1e-8,
    'witness_tolerance': 1e-9,
    'phi_tolerance': 1e-8,             # |phi| on omega and at the ends
    'cluster_tolerance': 1e-6,
    'delta': 1e-3,
    'blended_omega': (0.45 * math.pi, 0.55 * math.pi),
    'blended_omega1': (2 * math.pi / 5, 3 * math.pi / 5),
    'blended_omega2': (math.pi / 5, 4 * math.pi / 5),
    'residual_spacings': (math.pi / 200, math.pi / 400),
    'witness_spacing': math.pi / 150,
    'witness_horizon': 0.05,
    'witness_steps': 20,
    'hum_epsilons': (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
    'random_controls': 10,
    'plateau_floor': 1e-4,             # HUM plateaus below this fraction of |y0| are ignored
}

# Parallel processing configuration
PARALLEL_CONFIG = {
    'max_workers': int(os.getenv('FCF_MAX_WORKERS', '4')),
    'task_timeout': 600,         # seconds per sweep task
}

# Output configuration
OUTPUT_CONFIG = {
    'directory': os.getenv('FCF_OUTPUT_DIR', 'runs'),
    'float_format': '%.17g',
    'verbose': os.getenv('FCF_VERBOSE', 'true').lower() == 'true',
    'export_prefix': 'experiment_runs',
}

# Database configuration
DATABASE_NAME = os.getenv('FCF_DATABASE_PATH', 'experiment_runs.db')
DATABASE_PRAGMAS = [
    'PRAGMA journal_mode=WAL;',
    'PRAGMA synchronous=NORMAL;',
    'PRAGMA cache_size=10000;',
    'PRAGMA temp_store=memory;'
]

# Experiment commands understood by run_experiments.py
COMMANDS = [
    'eliminate',
    'check-condition',
    'normalize',
    'simulate',
    'hum-sweep',
    'counterexample',
    'fattorini',
    'assembly',
]


def status(message: str, indent: int = 0):
    """Print a progress line when verbose output is enabled."""
    if OUTPUT_CONFIG['verbose']:
        print(f"{'  ' * indent}{message}")
