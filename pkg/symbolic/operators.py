# symbolic/operators.py
"""
Linear partial differential operators with expression coefficients

An operator of order m over (t, x1, ..., xN) is the finite sum
sum_alpha c_alpha D^alpha, with multi-indices alpha in N^(N+1) (component 0
is the time derivative).

Features:
- Application to expressions, composition by the multi-index Leibniz rule
- Commutators and formal adjoints (the L2 adjoint ignoring boundary terms)
- Matrices of operators acting on vectors of expressions
- JSON-ready summaries for run artifacts
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .expression import (
    ONE, ZERO, Expression, add, as_expression, differentiate_multi, is_zero, mul, neg,
    to_text,
)


@dataclass(frozen=True)
class MultiIndex:
    """Derivative exponents (d/dt, d/dx1, ..., d/dxN)."""

    exponents: Tuple[int, ...]

    @classmethod
    def zero(cls, dimension: int) -> 'MultiIndex':
        return cls((0,) * (dimension + 1))

    @classmethod
    def unit(cls, dimension: int, variable: int) -> 'MultiIndex':
        exponents = [0] * (dimension + 1)
        exponents[variable] = 1
        return cls(tuple(exponents))

    @property
    def order(self) -> int:
        return sum(self.exponents)

    def key(self):
        """Graded lexicographic sort key."""
        return (self.order, self.exponents)

    def __add__(self, other: 'MultiIndex') -> 'MultiIndex':
        return MultiIndex(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __sub__(self, other: 'MultiIndex') -> 'MultiIndex':
        if not other.divides(self):
            raise ValueError(f"{other.exponents} is not below {self.exponents}")
        return MultiIndex(tuple(a - b for a, b in zip(self.exponents, other.exponents)))

    def divides(self, other: 'MultiIndex') -> bool:
        return all(a <= b for a, b in zip(self.exponents, other.exponents))

    def below(self) -> Iterable['MultiIndex']:
        """Every gamma <= self, componentwise."""
        for exponents in itertools.product(*(range(a + 1) for a in self.exponents)):
            yield MultiIndex(tuple(exponents))

    def binomial(self, gamma: 'MultiIndex') -> int:
        return math.prod(math.comb(a, g) for a, g in zip(self.exponents, gamma.exponents))

    def label(self) -> str:
        if self.order == 0:
            return 'Id'
        names = ['t'] + [f'x{i}' for i in range(1, len(self.exponents))]
        parts = []
        for name, k in zip(names, self.exponents):
            if k:
                parts.append(f"d{name}" if k == 1 else f"d{name}^{k}")
        return ' '.join(parts)


def _as_index(alpha) -> MultiIndex:
    return alpha if isinstance(alpha, MultiIndex) else MultiIndex(tuple(int(a) for a in alpha))


class LinDiffOp:
    """Linear differential operator sum_alpha c_alpha D^alpha."""

    def __init__(self, dimension: int, terms: Mapping = None):
        self.dimension = int(dimension)
        pending: Dict[MultiIndex, List[Expression]] = {}
        for alpha, coefficient in (terms or {}).items():
            alpha = _as_index(alpha)
            if len(alpha.exponents) != self.dimension + 1:
                raise ValueError(f"multi-index {alpha.exponents} does not match dimension {self.dimension}")
            pending.setdefault(alpha, []).append(as_expression(coefficient))
        self.terms: Dict[MultiIndex, Expression] = {}
        for alpha, parts in pending.items():
            coefficient = parts[0] if len(parts) == 1 else add(*parts)
            if not is_zero(coefficient):
                self.terms[alpha] = coefficient

    @classmethod
    def _collect(cls, dimension: int, pairs: Iterable[Tuple[MultiIndex, Expression]]) -> 'LinDiffOp':
        grouped: Dict[MultiIndex, List[Expression]] = {}
        for alpha, coefficient in pairs:
            if not is_zero(coefficient):
                grouped.setdefault(alpha, []).append(coefficient)
        return cls(dimension, {alpha: add(*parts) for alpha, parts in grouped.items()})

    # constructors ------------------------------------------------------------
    @classmethod
    def zero(cls, dimension: int) -> 'LinDiffOp':
        return cls(dimension)

    @classmethod
    def identity(cls, dimension: int) -> 'LinDiffOp':
        return cls(dimension, {MultiIndex.zero(dimension): ONE})

    @classmethod
    def multiplication(cls, dimension: int, coefficient) -> 'LinDiffOp':
        return cls(dimension, {MultiIndex.zero(dimension): coefficient})

    @classmethod
    def partial(cls, dimension: int, variable: int, coefficient=ONE) -> 'LinDiffOp':
        return cls(dimension, {MultiIndex.unit(dimension, variable): coefficient})

    # inspection --------------------------------------------------------------
    @property
    def order(self) -> int:
        return max((alpha.order for alpha in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, alpha) -> Expression:
        return self.terms.get(_as_index(alpha), ZERO)

    def derivative_terms(self) -> List[Tuple[MultiIndex, Expression]]:
        """(alpha, coefficient) pairs in graded lexicographic order."""
        return sorted(self.terms.items(), key=lambda item: item[0].key())

    @property
    def node_count(self) -> int:
        return sum(c.node_count for c in self.terms.values())

    def to_dict(self) -> dict:
        return {
            'order': self.order,
            'terms': [{'multi_index': list(alpha.exponents), 'derivative': alpha.label(),
                       'coefficient': to_text(c)}
                      for alpha, c in self.derivative_terms()],
        }

    def __repr__(self):
        if not self.terms:
            return 'LinDiffOp(0)'
        return 'LinDiffOp(' + ' + '.join(f"[{to_text(c)}] {a.label()}"
                                         for a, c in self.derivative_terms()) + ')'

    # algebra -----------------------------------------------------------------
    def apply(self, function) -> Expression:
        function = as_expression(function)
        return add(*(mul(c, differentiate_multi(function, alpha.exponents))
                     for alpha, c in self.terms.items()))

    def compose(self, other: 'LinDiffOp') -> 'LinDiffOp':
        """self o other, expanded by the Leibniz rule."""
        self._check(other)
        pairs = []
        for alpha, c in self.terms.items():
            for beta, b in other.terms.items():
                for gamma in alpha.below():
                    derivative = differentiate_multi(b, (alpha - gamma).exponents)
                    if is_zero(derivative):
                        continue
                    pairs.append((gamma + beta, mul(alpha.binomial(gamma), c, derivative)))
        return LinDiffOp._collect(self.dimension, pairs)

    def commutator(self, other: 'LinDiffOp') -> 'LinDiffOp':
        return self.compose(other) - other.compose(self)

    def adjoint(self) -> 'LinDiffOp':
        """Formal adjoint: sum_alpha (-1)^|alpha| D^alpha (c_alpha .)"""
        pairs = []
        for alpha, c in self.terms.items():
            sign = -1.0 if alpha.order % 2 else 1.0
            for gamma in alpha.below():
                derivative = differentiate_multi(c, (alpha - gamma).exponents)
                if is_zero(derivative):
                    continue
                pairs.append((gamma, mul(sign * alpha.binomial(gamma), derivative)))
        return LinDiffOp._collect(self.dimension, pairs)

    def scale(self, coefficient) -> 'LinDiffOp':
        """Left multiplication by a function."""
        coefficient = as_expression(coefficient)
        return LinDiffOp(self.dimension, {alpha: mul(coefficient, c) for alpha, c in self.terms.items()})

    def map_coefficients(self, transform) -> 'LinDiffOp':
        return LinDiffOp(self.dimension, {alpha: transform(c) for alpha, c in self.terms.items()})

    def without(self, alpha) -> 'LinDiffOp':
        alpha = _as_index(alpha)
        return LinDiffOp(self.dimension, {a: c for a, c in self.terms.items() if a != alpha})

    def _check(self, other: 'LinDiffOp'):
        if other.dimension != self.dimension:
            raise ValueError("operators act on different dimensions")

    def __add__(self, other: 'LinDiffOp') -> 'LinDiffOp':
        self._check(other)
        return LinDiffOp._collect(self.dimension, list(self.terms.items()) + list(other.terms.items()))

    def __neg__(self) -> 'LinDiffOp':
        return LinDiffOp(self.dimension, {alpha: neg(c) for alpha, c in self.terms.items()})

    def __sub__(self, other: 'LinDiffOp') -> 'LinDiffOp':
        return self + (-other)


class OperatorMatrix:
    """Rectangular matrix of LinDiffOp acting on vectors of expressions."""

    def __init__(self, entries: Sequence[Sequence[LinDiffOp]]):
        self.entries = tuple(tuple(row) for row in entries)
        if not self.entries or not self.entries[0]:
            raise ValueError("operator matrix needs at least one entry")
        self.rows = len(self.entries)
        self.cols = len(self.entries[0])
        if any(len(row) != self.cols for row in self.entries):
            raise ValueError("ragged operator matrix")
        self.dimension = self.entries[0][0].dimension

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, index: Tuple[int, int]) -> LinDiffOp:
        i, j = index
        return self.entries[i][j]

    @property
    def order(self) -> int:
        return max(entry.order for row in self.entries for entry in row)

    def apply(self, functions: Sequence) -> Tuple[Expression, ...]:
        if len(functions) != self.cols:
            raise ValueError(f"expected {self.cols} functions, got {len(functions)}")
        return tuple(add(*(entry.apply(f) for entry, f in zip(row, functions))) for row in self.entries)

    def compose(self, other: 'OperatorMatrix') -> 'OperatorMatrix':
        if self.cols != other.rows:
            raise ValueError(f"cannot compose {self.shape} with {other.shape}")
        entries = []
        for i in range(self.rows):
            row = []
            for k in range(other.cols):
                total = LinDiffOp.zero(self.dimension)
                for j in range(self.cols):
                    total = total + self.entries[i][j].compose(other.entries[j][k])
                row.append(total)
            entries.append(row)
        return OperatorMatrix(entries)

    def adjoint(self) -> 'OperatorMatrix':
        return OperatorMatrix([[self.entries[i][j].adjoint() for i in range(self.rows)]
                               for j in range(self.cols)])

    @property
    def node_count(self) -> int:
        return sum(entry.node_count for row in self.entries for entry in row)

    def to_dict(self) -> dict:
        return {
            'shape': list(self.shape),
            'order': self.order,
            'entries': [[entry.to_dict() for entry in row] for row in self.entries],
        }


def op_apply(operator, functions):
    return operator.apply(functions)


def op_compose(first, second):
    """first o second for operators or operator matrices."""
    return first.compose(second)


def op_commutator(first: LinDiffOp, second: LinDiffOp) -> LinDiffOp:
    return first.commutator(second)


def op_adjoint(operator):
    return operator.adjoint()
