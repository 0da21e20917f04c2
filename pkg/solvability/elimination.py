# solvability/elimination.py
"""
Commutator elimination

Given L1 = d/dx1 and an operator L2 without x1 derivatives, repeatedly
divides the current operator N by its first non-vanishing derivative
coefficient and commutes with L1. Each step removes that derivative term
while keeping the decomposition

    N = A o L1 + B o L2

valid on a shrinking window. When only a non-vanishing zero-order
coefficient c remains, M1 = c^-1 A and M2 = c^-1 B satisfy
M1 o L1 + M2 o L2 = Id.

Features:
- Dyadic search for boxes where a coefficient stays away from zero
- Numerical pruning of coefficients that vanish on the window
- Per-step verification of the decomposition on random test functions
- Order bookkeeping for the N^2 bound
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from config.config import SOLVABILITY_CONFIG, SYMBOLIC_CONFIG, status
from symbolic import (
    ONE, Expression, LinDiffOp, MultiIndex, Window, div, evaluate_array, random_test_functions,
    relative_residual, to_text,
)
from symbolic.errors import ExpressionTooLargeError
from .errors import IdentityCheckError, NonSolvableError, NormalFormError, WindowTooSmallError


@dataclass
class EliminationStep:
    index: int
    multi_index: MultiIndex
    coefficient: str
    window: Window
    remaining_terms: int
    residual: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            'step': self.index,
            'eliminated': list(self.multi_index.exponents),
            'derivative': self.multi_index.label(),
            'coefficient': self.coefficient,
            'window': self.window.to_dict(),
            'remaining_terms': self.remaining_terms,
            'residual': self.residual,
        }


@dataclass
class EliminationResult:
    M1: LinDiffOp
    M2: LinDiffOp
    window: Window
    multiplier: Expression
    steps: List[EliminationStep] = field(default_factory=list)
    elimination_order: int = 0
    derivative_budget: int = 0
    residual: Optional[float] = None

    @property
    def step_count(self) -> int:
        return len(self.steps)

    @property
    def order(self) -> int:
        """Orders of the eliminated derivatives, summed (the count behind the N^2 bound)."""
        return self.elimination_order

    @property
    def operator_order(self) -> int:
        return max(self.M1.order, self.M2.order)

    def to_dict(self) -> dict:
        return {
            'steps': [s.to_dict() for s in self.steps],
            'step_count': self.step_count,
            'window': self.window.to_dict(),
            'multiplier': to_text(self.multiplier),
            'order': self.order,
            'derivative_budget': self.derivative_budget,
            'operator_order': self.operator_order,
            'residual': self.residual,
            'M1': self.M1.to_dict(),
            'M2': self.M2.to_dict(),
        }


def sample_abs(expr: Expression, window: Window, samples: int) -> np.ndarray:
    return np.abs(evaluate_array(expr, window.cell_centers(samples)))


def nonvanishing_box(expr: Expression, window: Window, delta: float = None, samples: int = None,
                     depth: int = None, relative_delta: float = None) -> Optional[Window]:
    """
    Largest dyadic sub-box of `window` on which |expr| > delta at every sample.

    Levels are tried from the whole window down to `depth` halvings per axis;
    within a level the block with the largest minimum wins. Returns None when
    no block qualifies.
    """
    samples = samples or SOLVABILITY_CONFIG['samples_per_axis']
    depth = SOLVABILITY_CONFIG['dyadic_depth'] if depth is None else depth
    relative_delta = relative_delta or SOLVABILITY_CONFIG['relative_delta']
    values = sample_abs(expr, window, samples)
    if delta is None:
        delta = relative_delta * float(np.max(values))
    if float(np.max(values)) <= delta:
        return None
    d = values.ndim
    for level in range(depth + 1):
        k = 2 ** level
        if samples % k:
            break
        b = samples // k
        shape = []
        for _ in range(d):
            shape += [k, b]
        blocks = values.reshape(shape).min(axis=tuple(range(1, 2 * d, 2)))
        if np.max(blocks) <= delta:
            continue
        if level == 0:
            return window
        index = np.unravel_index(int(np.argmax(blocks)), blocks.shape)
        widths = window.widths / k
        lower = tuple(lo + i * w for lo, i, w in zip(window.lower, index, widths))
        upper = tuple(lo + (i + 1) * w for lo, i, w in zip(window.lower, index, widths))
        return Window(lower, upper)
    return None


def prune(operator: LinDiffOp, window: Window, samples: int = None, zero_tolerance: float = None) -> LinDiffOp:
    """Drop coefficients whose sampled magnitude is numerically zero on `window`."""
    samples = samples or SOLVABILITY_CONFIG['samples_per_axis']
    zero_tolerance = SOLVABILITY_CONFIG['zero_tolerance'] if zero_tolerance is None else zero_tolerance
    threshold = zero_tolerance * max(1.0, window.diameter)
    points = window.cell_centers(samples)
    kept = {alpha: c for alpha, c in operator.terms.items()
            if float(np.max(np.abs(evaluate_array(c, points)))) > threshold}
    return LinDiffOp(operator.dimension, kept)


def decomposition_residual(target: LinDiffOp, A: LinDiffOp, B: LinDiffOp, L1: LinDiffOp, L2: LinDiffOp,
                           window: Window, trials: int, rng: np.random.Generator,
                           points: int = None) -> float:
    """Max relative residual of target(f) - A(L1 f) - B(L2 f) over random f."""
    points = points or SOLVABILITY_CONFIG['identity_points']
    worst = 0.0
    for f in random_test_functions(target.dimension, trials, rng):
        sample = window.random_points(rng, points)
        lhs = evaluate_array(target.apply(f), sample)
        rhs = evaluate_array(A.apply(L1.apply(f)), sample) + evaluate_array(B.apply(L2.apply(f)), sample)
        worst = max(worst, relative_residual(lhs - rhs, lhs))
    return worst


def _check_size(*operators: LinDiffOp):
    limit = SYMBOLIC_CONFIG['node_limit']
    for op in operators:
        for c in op.terms.values():
            if c.node_count > limit:
                raise ExpressionTooLargeError(f"coefficient with {c.node_count} nodes exceeds the limit {limit}")


def eliminate(L1: LinDiffOp, L2: LinDiffOp, window: Window, delta: float = None,
              rng: np.random.Generator = None, verify: bool = None) -> EliminationResult:
    """
    Find M1, M2 with M1 o L1 + M2 o L2 = Id on a sub-window of `window`.

    Args:
        L1: the x1 derivative
        L2: operator without x1 derivatives (L3 of build_system_operators)
        window: starting window in (t, x1, ..., xN)
        delta: non-vanishing threshold; relative to the sampled maximum when None
        rng: generator for the random test functions
        verify: check N = A o L1 + B o L2 after every step

    Raises:
        NonSolvableError: all coefficients vanish on the window
        WindowTooSmallError: the window shrank below the minimum volume
        ExpressionTooLargeError: a coefficient exceeded the node limit
        IdentityCheckError: a sampled identity failed
    """
    n = L2.dimension
    rng = rng or np.random.default_rng(0)
    verify = SOLVABILITY_CONFIG['verify_steps'] if verify is None else verify
    e1 = MultiIndex.unit(n, 1)
    if set(L1.terms) != {e1} or not (L1.terms[e1] == ONE):
        raise NormalFormError("L1 must be the x1 derivative")
    if any(alpha.exponents[1] for alpha in L2.terms):
        raise NormalFormError("L2 still carries x1 derivatives; eliminate them through L1 first")

    zero_index = MultiIndex.zero(n)
    minimum_volume = SOLVABILITY_CONFIG['min_volume_fraction'] * window.volume
    derivative_budget = sum(alpha.order for alpha in L2.terms if alpha.order > 0)
    A = LinDiffOp.zero(n)
    B = LinDiffOp.identity(n)
    N = L2
    current = window
    steps: List[EliminationStep] = []
    eliminated_order = 0

    for index in range(SOLVABILITY_CONFIG['max_steps']):
        N = prune(N, current)
        derivative_terms = [(alpha, c) for alpha, c in N.derivative_terms() if alpha.order > 0]
        if not derivative_terms:
            c = N.coefficient(zero_index)
            if N.is_zero():
                raise NonSolvableError(
                    f"every coefficient vanishes on {current.to_dict()} after {len(steps)} step(s): "
                    f"the operator is not solvable on this window")
            box = nonvanishing_box(c, current, delta)
            if box is None:
                raise WindowTooSmallError(f"no dyadic box where {to_text(c)[:60]} stays away from zero")
            current = _shrink_to(box, current, minimum_volume)
            inverse = div(ONE, c)
            M1 = A.scale(inverse)
            M2 = B.scale(inverse)
            residual = decomposition_residual(LinDiffOp.identity(n), M1, M2, L1, L2, current,
                                              SOLVABILITY_CONFIG['identity_trials'], rng)
            if residual > SOLVABILITY_CONFIG['identity_tolerance']:
                raise IdentityCheckError("M1 o L1 + M2 o L2 = Id failed on the final window", residual)
            status(f"✅ Elimination finished in {len(steps)} step(s), multiplier {to_text(c)[:60]}", 1)
            return EliminationResult(M1=M1, M2=M2, window=current, multiplier=c, steps=steps,
                                     elimination_order=eliminated_order, derivative_budget=derivative_budget,
                                     residual=residual)

        alpha, a = derivative_terms[0]
        box = nonvanishing_box(a, current, delta)
        if box is None:
            raise WindowTooSmallError(f"no dyadic box where {to_text(a)[:60]} stays away from zero")
        current = _shrink_to(box, current, minimum_volume)
        inverse = div(ONE, a)
        scaled_N = N.scale(inverse)
        scaled_A = A.scale(inverse)
        scaled_B = B.scale(inverse)
        N_next = L1.compose(scaled_N) - scaled_N.compose(L1)
        A_next = L1.compose(scaled_A) - scaled_N
        B_next = L1.compose(scaled_B)
        _check_size(N_next, A_next, B_next)

        if alpha in N_next.terms:
            raise IdentityCheckError(f"term {alpha.label()} survived its own elimination", 1.0)
        residual = None
        if verify:
            residual = decomposition_residual(N_next, A_next, B_next, L1, L2, current,
                                              SOLVABILITY_CONFIG['step_trials'], rng)
            if residual > SOLVABILITY_CONFIG['identity_tolerance']:
                raise IdentityCheckError(f"decomposition broken after eliminating {alpha.label()}", residual)
        eliminated_order += alpha.order
        steps.append(EliminationStep(index=index + 1, multi_index=alpha, coefficient=to_text(a),
                                     window=current, remaining_terms=len(N_next.terms), residual=residual))
        status(f"🔍 Step {index + 1}: eliminated {alpha.label()} ({len(N_next.terms)} term(s) left)", 2)
        A, B, N = A_next, B_next, N_next

    raise NonSolvableError(f"elimination did not terminate within {SOLVABILITY_CONFIG['max_steps']} steps")


def _shrink_to(box: Window, current: Window, minimum_volume: float) -> Window:
    if box.volume < minimum_volume:
        raise WindowTooSmallError(f"window volume {box.volume:.3e} below the minimum {minimum_volume:.3e}")
    return box
