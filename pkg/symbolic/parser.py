# symbolic/parser.py
"""
Recursive-descent parser for coefficient expressions

Grammar (see docs/expression-grammar.md):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom (('^' | '**') unary)?
    atom    := number | identifier | call | '(' expr ')'
    call    := name ('[' int (',' int)* ']')? '(' args ')'

Identifiers are t, x1..xN, pi, user constants and tabulated field names.
Exponents, bump bounds, blend edges and integral lower limits must reduce
to constants; exponents must be integers.
"""

import math
import re
from typing import Dict, List, Mapping, Optional, Tuple

from . import expression as ex
from .errors import ArityError, ExpressionSyntaxError, UnknownIdentifierError

_TOKEN = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),\[\]])
""", re.VERBOSE)

_FIXED_ARITY = {'sin': 1, 'cos': 1, 'exp': 1, 'pow': 2, 'safediv': 2, 'integral': 3}
_ORDERED = {'bump', 'blend', 'field'}


class _Token:
    __slots__ = ('kind', 'text', 'position')

    def __init__(self, kind, text, position):
        self.kind = kind
        self.text = text
        self.position = position


def tokenize(text: str) -> List[_Token]:
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise ExpressionSyntaxError(f"unexpected character {text[position]!r}", position)
        kind = match.lastgroup
        if kind != 'space':
            tokens.append(_Token(kind, match.group(), position))
        position = match.end()
    tokens.append(_Token('end', '', len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dimension: int, constants: Mapping[str, float],
                 fields: Mapping[str, ex.FieldTable]):
        self.text = text
        self.dimension = dimension
        self.constants = dict(constants or {})
        self.fields = dict(fields or {})
        self.tokens = tokenize(text)
        self.index = 0

    # token helpers -----------------------------------------------------------
    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.current
        self.index += 1
        return token

    def accept(self, text: str) -> bool:
        if self.current.kind == 'op' and self.current.text == text:
            self.index += 1
            return True
        return False

    def expect(self, text: str) -> _Token:
        if not (self.current.kind == 'op' and self.current.text == text):
            found = self.current.text or 'end of input'
            raise ExpressionSyntaxError(f"expected '{text}' but found '{found}'", self.current.position)
        return self.advance()

    # grammar -----------------------------------------------------------------
    def parse(self) -> ex.Expression:
        result = self.expr()
        if self.current.kind != 'end':
            raise ExpressionSyntaxError(f"unexpected '{self.current.text}'", self.current.position)
        return result

    def expr(self) -> ex.Expression:
        result = self.term()
        while True:
            if self.accept('+'):
                result = ex.add(result, self.term())
            elif self.accept('-'):
                result = ex.sub(result, self.term())
            else:
                return result

    def term(self) -> ex.Expression:
        result = self.unary()
        while True:
            if self.accept('*'):
                result = ex.mul(result, self.unary())
            elif self.current.kind == 'op' and self.current.text == '/':
                position = self.advance().position
                denominator = self.unary()
                if ex.is_zero(denominator):
                    raise ExpressionSyntaxError("division by the constant zero", position)
                result = ex.div(result, denominator)
            else:
                return result

    def unary(self) -> ex.Expression:
        if self.accept('-'):
            return ex.neg(self.unary())
        if self.accept('+'):
            return self.unary()
        return self.power()

    def power(self) -> ex.Expression:
        base = self.atom()
        if self.current.kind == 'op' and self.current.text in ('^', '**'):
            self.advance()
            position = self.current.position
            exponent = self.unary()
            return ex.power(base, self._integer(exponent, position, 'exponent'))
        return base

    def atom(self) -> ex.Expression:
        token = self.current
        if token.kind == 'number':
            self.advance()
            return ex.const(float(token.text))
        if token.kind == 'op' and token.text == '(':
            self.advance()
            inner = self.expr()
            self.expect(')')
            return inner
        if token.kind == 'name':
            self.advance()
            nxt = self.current
            if nxt.kind == 'op' and nxt.text in ('(', '['):
                return self.call(token)
            return self.identifier(token)
        found = token.text or 'end of input'
        raise ExpressionSyntaxError(f"unexpected '{found}'", token.position)

    def identifier(self, token: _Token) -> ex.Expression:
        name = token.text
        index = self._variable_index(name)
        if index is not None:
            return ex.var(index)
        if name == 'pi':
            return ex.const(math.pi)
        if name in self.constants:
            return ex.const(float(self.constants[name]))
        if name in self.fields:
            return ex.TabulatedField(self.fields[name])
        raise UnknownIdentifierError(f"unknown identifier '{name}'", token.position)

    def call(self, token: _Token) -> ex.Expression:
        name = token.text
        orders = None
        if self.accept('['):
            if name not in _ORDERED:
                raise ExpressionSyntaxError(f"'{name}' takes no derivative orders", token.position)
            orders = [self._integer_literal()]
            while self.accept(','):
                orders.append(self._integer_literal())
            self.expect(']')
        self.expect('(')
        args: List[Tuple[ex.Expression, int]] = []
        if not self.accept(')'):
            while True:
                position = self.current.position
                args.append((self.expr(), position))
                if self.accept(')'):
                    break
                self.expect(',')
        return self.build_call(token, orders, args)

    def build_call(self, token: _Token, orders, args) -> ex.Expression:
        name = token.text
        position = token.position
        if name in _FIXED_ARITY and len(args) != _FIXED_ARITY[name]:
            raise ArityError(f"'{name}' takes {_FIXED_ARITY[name]} argument(s), got {len(args)}", position)
        if name == 'sin':
            return ex.sin(args[0][0])
        if name == 'cos':
            return ex.cos(args[0][0])
        if name == 'exp':
            return ex.exp(args[0][0])
        if name == 'pow':
            return ex.power(args[0][0], self._integer(args[1][0], args[1][1], 'exponent'))
        if name == 'safediv':
            if ex.is_zero(args[1][0]):
                raise ExpressionSyntaxError("division by the constant zero", args[1][1])
            return ex.div(args[0][0], args[1][0], guard=True)
        if name == 'integral':
            variable = self._variable_argument(args[1])
            lower = self._constant(args[2][0], args[2][1], 'integral lower limit')
            return ex.primitive(args[0][0], variable, lower)
        if name == 'bump':
            if not args or len(args) % 3:
                raise ArityError("'bump' takes (variable, lo, hi) triples", position)
            axes = []
            for i in range(0, len(args), 3):
                variable = self._variable_argument(args[i])
                lo = self._constant(args[i + 1][0], args[i + 1][1], 'bump bound')
                hi = self._constant(args[i + 2][0], args[i + 2][1], 'bump bound')
                if not lo < hi:
                    raise ExpressionSyntaxError("empty bump support", args[i + 1][1])
                axes.append((variable, lo, hi))
            if orders is not None and len(orders) != len(axes):
                raise ArityError("'bump' needs one derivative order per axis", position)
            return ex.bump(axes, orders)
        if name == 'blend':
            if len(args) != 3:
                raise ArityError(f"'blend' takes 3 argument(s), got {len(args)}", position)
            if orders is not None and len(orders) != 1:
                raise ArityError("'blend' takes a single derivative order", position)
            variable = self._variable_argument(args[0])
            a = self._constant(args[1][0], args[1][1], 'blend edge')
            b = self._constant(args[2][0], args[2][1], 'blend edge')
            if a == b:
                raise ExpressionSyntaxError("blend edges coincide", args[2][1])
            return ex.blend(variable, a, b, orders[0] if orders else 0)
        if name == 'field':
            if len(args) != 1:
                raise ArityError(f"'field' takes 1 argument(s), got {len(args)}", position)
            table = self._field_argument(args[0])
            if orders is not None and len(orders) != len(table.variables):
                raise ArityError("'field' needs one derivative order per tabulated variable", position)
            return ex.TabulatedField(table, tuple(orders) if orders else None)
        if name == 'compose':
            if len(args) < 3 or len(args) % 2 == 0:
                raise ArityError("'compose' takes an expression followed by (variable, expression) pairs",
                                 position)
            substitutions = {}
            for i in range(1, len(args), 2):
                substitutions[self._variable_argument(args[i])] = args[i + 1][0]
            return ex.compose(args[0][0], substitutions)
        raise UnknownIdentifierError(f"unknown function '{name}'", position)

    # argument helpers --------------------------------------------------------
    def _variable_index(self, name: str) -> Optional[int]:
        if name == 't':
            return 0
        match = re.fullmatch(r'x([1-9][0-9]*)', name)
        if match and int(match.group(1)) <= self.dimension:
            return int(match.group(1))
        return None

    def _variable_argument(self, arg) -> int:
        expr, position = arg
        if not isinstance(expr, ex.Var):
            raise ExpressionSyntaxError("expected a variable name", position)
        return expr.index

    def _field_argument(self, arg) -> ex.FieldTable:
        expr, position = arg
        if not isinstance(expr, ex.TabulatedField) or any(expr.orders):
            raise ExpressionSyntaxError("expected a field name", position)
        return expr.table

    def _constant(self, expr: ex.Expression, position: int, what: str) -> float:
        if not isinstance(expr, ex.Const):
            raise ExpressionSyntaxError(f"{what} must be a constant", position)
        return expr.value

    def _integer(self, expr: ex.Expression, position: int, what: str) -> int:
        value = self._constant(expr, position, what)
        if value != int(value):
            raise ExpressionSyntaxError(f"{what} must be an integer, got {value!r}", position)
        return int(value)

    def _integer_literal(self) -> int:
        token = self.current
        if token.kind != 'number' or not re.fullmatch(r'\d+', token.text):
            raise ExpressionSyntaxError("expected a non-negative integer order", token.position)
        self.advance()
        return int(token.text)


def parse_expression(text: str, dimension: int, constants: Mapping[str, float] = None,
                     fields: Mapping[str, ex.FieldTable] = None) -> ex.Expression:
    """
    Parse expression text over (t, x1, ..., x_dimension).

    Args:
        text: Expression source
        dimension: Number of space variables N
        constants: Named numeric constants usable as identifiers
        fields: Tabulated fields usable by name or through field[...](name)

    Returns:
        Expression: simplified expression tree

    Raises:
        ExpressionSyntaxError: malformed text, with the offending offset
        UnknownIdentifierError: identifier outside the admitted alphabet
        ArityError: wrong number of function arguments
    """
    if not isinstance(text, str):
        raise ExpressionSyntaxError("expression text must be a string", 0)
    return _Parser(text, dimension, constants or {}, fields or {}).parse()


def parse_matrix(rows, dimension: int, constants: Mapping[str, float] = None) -> Tuple[Tuple[ex.Expression, ...], ...]:
    """Parse a square matrix given as nested lists of expression texts."""
    return tuple(tuple(parse_expression(str(cell), dimension, constants) for cell in row) for row in rows)


def parse_vector(entries, dimension: int, constants: Mapping[str, float] = None) -> Tuple[ex.Expression, ...]:
    return tuple(parse_expression(str(cell), dimension, constants) for cell in entries)
