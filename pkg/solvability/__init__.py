# solvability/__init__.py
"""
Algebraic solvability: operators of the fictitious-control reduction,
module-membership condition, commutator elimination and full solver assembly.
"""

from .assembly import FullSolver, algebraic_solver, assemble_full_solver, verify_identity
from .condition import FAILS, HOLDS, INCONCLUSIVE, ConditionReport, check_condition
from .elimination import EliminationResult, EliminationStep, eliminate, nonvanishing_box
from .errors import (
    EllipticityError, IdentityCheckError, NonSolvableError, NormalFormError, WindowTooSmallError,
)
from .system import (
    ParabolicSystem, SystemOperators, build_system_operators, divergence_drift, identity_matrix,
    unit_vector, zero_vector,
)
from symbolic.sampling import Window

__all__ = [
    'ParabolicSystem', 'SystemOperators', 'Window', 'build_system_operators', 'divergence_drift',
    'identity_matrix', 'unit_vector', 'zero_vector',
    'ConditionReport', 'check_condition', 'HOLDS', 'FAILS', 'INCONCLUSIVE',
    'EliminationResult', 'EliminationStep', 'eliminate', 'nonvanishing_box',
    'FullSolver', 'algebraic_solver', 'assemble_full_solver', 'verify_identity',
    'NormalFormError', 'EllipticityError', 'NonSolvableError', 'WindowTooSmallError', 'IdentityCheckError',
]
