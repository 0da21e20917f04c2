# solvability/condition.py
"""
Numerical module-membership test for the zero-order coefficient

The coefficient a~22 of L2 is compared, slice by slice, with the module
spanned over functions of (t, x2, ..., xN) by the generators

    1, g~22^i (i >= 2), d2^{ij} (2 <= i <= j).

On a slice (t, x2, ..., xN fixed) the generators are functions of x1 and the
module coefficients are constants, so membership reduces to a linear least
squares problem in x1 samples.
"""

import itertools
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.linalg import lstsq

from config.config import CONDITION_CONFIG, status
from symbolic import Expression, Window, evaluate_array, to_text
from .system import ParabolicSystem, build_system_operators

HOLDS = 'holds'
FAILS = 'fails'
INCONCLUSIVE = 'inconclusive'


@dataclass
class ConditionReport:
    verdict: str
    tolerance: float
    window: Window
    witness_window: Optional[Window]
    slices: List[dict] = field(default_factory=list)
    generators: List[str] = field(default_factory=list)
    coefficient: str = ''

    @property
    def max_residual(self) -> float:
        values = [s['residual'] for s in self.slices if s['residual'] is not None]
        return max(values) if values else 0.0

    def summary(self) -> str:
        if self.verdict == FAILS:
            return f"fails (membership), max residual {self.max_residual:.3e}"
        if self.verdict == HOLDS:
            return f"holds, max residual {self.max_residual:.3e}"
        return f"inconclusive, max residual {self.max_residual:.3e}"

    def to_dict(self) -> dict:
        return {
            'verdict': self.verdict,
            'tolerance': self.tolerance,
            'window': self.window.to_dict(),
            'witness_window': self.witness_window.to_dict() if self.witness_window else None,
            'coefficient': self.coefficient,
            'generators': self.generators,
            'max_residual': self.max_residual,
            'slices': self.slices,
        }


def condition_generators(system: ParabolicSystem, g_tilde) -> List[Expression]:
    n = system.dimension
    generators = [g_tilde[i] for i in range(1, n)]
    for i in range(1, n):
        for j in range(i, n):
            generators.append(system.d2[i][j])
    return generators


def check_condition(system: ParabolicSystem, window: Window = None, tolerance: float = None,
                    slices_per_axis: int = None, points_per_slice: int = None) -> ConditionReport:
    """
    Decide whether a~22 is outside the generator module on `window`.

    Verdicts:
        holds: some slice residual is at least holds_factor * tolerance
        fails: every slice residual is at most tolerance
        inconclusive: anything else, including slices where a~22 vanishes
    """
    tolerance = CONDITION_CONFIG['tolerance'] if tolerance is None else tolerance
    slices_per_axis = slices_per_axis or CONDITION_CONFIG['slices_per_axis']
    points_per_slice = points_per_slice or CONDITION_CONFIG['points_per_slice']
    window = window or system.control_window
    if not system.control_window.contains_window(window):
        raise ValueError("condition window must lie inside the control window")

    operators = build_system_operators(system)
    a_tilde = operators.a_tilde
    generators = condition_generators(system, operators.g_tilde)
    n = system.dimension

    x1_lo, x1_hi = window.lower[1], window.upper[1]
    x1 = x1_lo + (np.arange(points_per_slice) + 0.5) * (x1_hi - x1_lo) / points_per_slice
    slice_axes = [0] + list(range(2, n + 1))
    centers = {}
    for axis in slice_axes:
        lo, hi = window.lower[axis], window.upper[axis]
        centers[axis] = lo + (np.arange(slices_per_axis) + 0.5) * (hi - lo) / slices_per_axis

    status(f"🔍 Checking module membership of a~22 = {to_text(a_tilde)[:80]}", 1)
    records = []
    best = (-1.0, None)
    for combo in itertools.product(*(centers[axis] for axis in slice_axes)):
        coords = [None] * (n + 1)
        coords[1] = x1
        for axis, value in zip(slice_axes, combo):
            coords[axis] = np.full_like(x1, value)
        target = evaluate_array(a_tilde, coords)
        columns = [np.ones_like(x1)] + [evaluate_array(g, coords) for g in generators]
        matrix = np.column_stack(columns)
        norm = float(np.linalg.norm(target))
        record = {'slice': {('t' if axis == 0 else f'x{axis}'): float(v) for axis, v in zip(slice_axes, combo)}}
        if norm <= CONDITION_CONFIG['degenerate_scale'] * np.sqrt(points_per_slice):
            record.update(residual=None, degenerate=True, coefficients=None)
            records.append(record)
            continue
        scale = np.linalg.norm(matrix, axis=0)
        scale[scale == 0.0] = 1.0
        solution, _, _, _ = lstsq(matrix / scale, target)
        residual = float(np.linalg.norm(target - (matrix / scale) @ solution)) / norm
        record.update(residual=residual, degenerate=False, coefficients=list(map(float, solution / scale)))
        records.append(record)
        if residual > best[0]:
            best = (residual, combo)

    residuals = [r['residual'] for r in records if not r['degenerate']]
    any_degenerate = any(r['degenerate'] for r in records)
    witness = None
    if residuals and max(residuals) >= CONDITION_CONFIG['holds_factor'] * tolerance:
        verdict = HOLDS
        lower = list(window.lower)
        upper = list(window.upper)
        for axis, value in zip(slice_axes, best[1]):
            half = 0.5 * (window.upper[axis] - window.lower[axis]) / slices_per_axis
            lower[axis], upper[axis] = value - half, value + half
        witness = Window(tuple(lower), tuple(upper))
    elif residuals and not any_degenerate and max(residuals) <= tolerance:
        verdict = FAILS
    else:
        verdict = INCONCLUSIVE

    report = ConditionReport(verdict=verdict, tolerance=tolerance, window=window, witness_window=witness,
                             slices=records, generators=['1'] + [to_text(g) for g in generators],
                             coefficient=to_text(a_tilde))
    glyph = {HOLDS: '✅', FAILS: '❌', INCONCLUSIVE: '⚠️'}[verdict]
    status(f"{glyph} Condition {report.summary()}", 1)
    return report
