# solvability/assembly.py
"""
Full solver assembly and sampled identity checks

From M1 o L1 + M2 o L3 = Id and L3 = L2 - K o L1 follows
(M1 - M2 o K) o L1 + M2 o L2 = Id, i.e. M0* o L0* = Id. Taking formal
adjoints gives L0 o M0 = Id; the control v is then read off the first row
of L.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from config.config import SOLVABILITY_CONFIG, status
from symbolic import LinDiffOp, OperatorMatrix, Window, evaluate_array, random_test_functions, relative_residual
from .elimination import EliminationResult, eliminate
from .system import ParabolicSystem, SystemOperators, build_system_operators

Operator = Union[LinDiffOp, OperatorMatrix]


@dataclass
class FullSolver:
    """M with L o M = Id on `window`; M maps (f1, f2) to (z1, z2, v)."""

    M: OperatorMatrix
    M0: OperatorMatrix
    window: Window
    order: int
    operator_order: int
    residual: float = None

    def apply(self, f1, f2):
        return self.M.apply((f1, f2))

    def to_dict(self) -> dict:
        return {
            'order': self.order,
            'operator_order': self.operator_order,
            'window': self.window.to_dict(),
            'residual': self.residual,
            'M0': self.M0.to_dict(),
        }


def assemble_full_solver(system: ParabolicSystem, elimination: EliminationResult,
                         operators: SystemOperators = None, verify: bool = True,
                         rng: np.random.Generator = None) -> FullSolver:
    """
    Lift the scalar identity of `elimination` to the two-row operator L.

    Returns:
        FullSolver: M (3 x 2 operator matrix) and its residual on the final window
    """
    operators = operators or build_system_operators(system)
    n = system.dimension
    M1 = elimination.M1 - elimination.M2.compose(operators.K)
    M2 = elimination.M2
    M1_adj = M1.adjoint()
    M2_adj = M2.adjoint()
    M0 = OperatorMatrix([[M1_adj], [M2_adj]])
    p1, q12 = operators.first_row
    zero = LinDiffOp.zero(n)
    v_from_f2 = p1.compose(M1_adj) + q12.compose(M2_adj)
    M = OperatorMatrix([[zero, M1_adj], [zero, M2_adj], [-LinDiffOp.identity(n), v_from_f2]])
    solver = FullSolver(M=M, M0=M0, window=elimination.window, order=elimination.order,
                        operator_order=M.order)
    if verify:
        solver.residual = verify_identity(operators.L, M, elimination.window, rng=rng)
        status(f"📊 L o M = Id residual {solver.residual:.3e} (order {solver.order})", 1)
    return solver


def verify_identity(L: Operator, M: Operator, window: Window, trials: int = None,
                    rng: np.random.Generator = None, points: int = None) -> float:
    """
    Max relative residual of L(M f) - f over random smooth test functions.

    Works for scalar operators and for operator matrices (f is then a vector
    with one random function per column of M).
    """
    trials = trials or SOLVABILITY_CONFIG['identity_trials']
    points = points or SOLVABILITY_CONFIG['identity_points']
    rng = rng or np.random.default_rng(0)
    width = M.cols if isinstance(M, OperatorMatrix) else 1
    worst = 0.0
    for _ in range(trials):
        functions = random_test_functions(window.dimension, width, rng)
        sample = window.random_points(rng, points)
        if isinstance(M, OperatorMatrix):
            images = L.apply(M.apply(functions))
        else:
            images = (L.apply(M.apply(functions[0])),)
        for image, f in zip(images, functions):
            expected = evaluate_array(f, sample)
            worst = max(worst, relative_residual(evaluate_array(image, sample) - expected, expected))
    return worst


def algebraic_solver(system: ParabolicSystem, window: Window = None, rng: np.random.Generator = None,
                     verify: bool = True) -> FullSolver:
    """Operators, elimination on `window` (the control window by default) and assembly in one call."""
    operators = build_system_operators(system)
    elimination = eliminate(operators.L1, operators.L3, window or system.control_window, rng=rng)
    return assemble_full_solver(system, elimination, operators, verify=verify, rng=rng)
