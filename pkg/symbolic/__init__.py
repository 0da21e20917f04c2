# symbolic/__init__.py
"""
Symbolic layer: expression trees, parsing, quadrature and differential operators.
"""

from .errors import (
    ArityError, DomainError, EvaluationError, ExpressionSyntaxError, ExpressionTooLargeError,
    QuadratureError, UnknownIdentifierError,
)
from .expression import (
    ONE, ZERO, Expression, FieldTable, add, blend, blend_values, bump, bump_values, compose, const,
    cos, differentiate, differentiate_multi, div, evaluate, evaluate_array, exp, mul, neg, power,
    primitive, sin, sub, tabulated_field, to_text, var,
)
from .calculus import integrate_adaptive
from .operators import LinDiffOp, MultiIndex, OperatorMatrix, op_adjoint, op_apply, op_commutator, op_compose
from .parser import parse_expression
from .sampling import Window, random_test_functions, relative_residual

__all__ = [
    'DomainError', 'ExpressionSyntaxError', 'UnknownIdentifierError', 'ArityError',
    'EvaluationError', 'QuadratureError', 'ExpressionTooLargeError',
    'Expression', 'FieldTable', 'ONE', 'ZERO',
    'add', 'mul', 'div', 'sub', 'neg', 'power', 'sin', 'cos', 'exp', 'const', 'var',
    'bump', 'blend', 'primitive', 'compose', 'tabulated_field',
    'bump_values', 'blend_values',
    'differentiate', 'differentiate_multi', 'evaluate', 'evaluate_array', 'to_text',
    'integrate_adaptive',
    'LinDiffOp', 'MultiIndex', 'OperatorMatrix',
    'op_apply', 'op_compose', 'op_commutator', 'op_adjoint',
    'parse_expression', 'Window', 'random_test_functions', 'relative_residual',
]
