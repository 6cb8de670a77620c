"""
Scalar expressions over named coordinates.

Every metric component, warping function and vector-field component is an
expression tree built from the node classes below. Trees are immutable; the
module-level constructors (``add``, ``mul``, ...) fold literal zeros and ones
and constant subtrees, nothing more.

Grammar accepted by :func:`parse`::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := ('-' | '+') unary | power
    power    := atom ['^' exponent]
    exponent := ['-'] (NUMBER | NAME | '(' rational ')')
    rational := rterm (('+' | '-') rterm)*        -- over exact fractions
    rterm    := rfactor (('*' | '/') rfactor)*
    rfactor  := ['-'] (NUMBER | NAME | '(' rational ')')
    atom     := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    FUNC     := sin | cos | exp | ln | sqrt

``pi`` is a built-in constant; any other NAME is a coordinate unless bound
in the ``constants`` mapping handed to :func:`parse`.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math
import re
from typing import Mapping, Optional

from .errors import (
    ExprDomainError,
    ExprSyntaxError,
    UnboundVariableError,
    UnknownFunctionError,
)

FUNCTIONS = ('sin', 'cos', 'exp', 'ln', 'sqrt')
BUILTIN_CONSTANTS = {'pi': math.pi}


class Expr:
    """Base class for expression nodes."""

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self):
        return render(self)


@dataclass(frozen=True, eq=True, repr=False)
class Const(Expr):
    value: float

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"Add({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"Sub({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"Mul({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Div(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"Div({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: Fraction

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


@dataclass(frozen=True, eq=True, repr=False)
class Neg(Expr):
    arg: Expr

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


@dataclass(frozen=True)
class Point:
    """Coordinate values on a chart."""
    chart: Optional[str]
    values: Mapping[str, float] = field(default_factory=dict)

    def __getitem__(self, name):
        return self.values[name]

    def as_dict(self):
        return {name: float(value) for name, value in self.values.items()}


# --- construction -------------------------------------------------------

def as_expr(value, constants=None):
    """Coerce numbers and strings to expressions."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, float, Fraction)):
        return Const(float(value))
    if isinstance(value, str):
        return parse(value, constants)
    # numpy scalars and the like
    try:
        return Const(float(value))
    except (TypeError, ValueError):
        raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def const(value):
    return Const(float(value))


def var(name):
    return Var(name)


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Sub(a, b)


def mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return Mul(a, b)


def div(a, b):
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(base, exponent):
    exponent = _as_fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and base.value > 0.0:
        return Const(_pow_value(base.value, exponent))
    return Pow(base, exponent)


def func(name, arg):
    if name not in FUNCTIONS:
        raise UnknownFunctionError(name, 0)
    return Func(name, as_expr(arg))


def sin(arg):
    return func('sin', arg)


def cos(arg):
    return func('cos', arg)


def exp(arg):
    return func('exp', arg)


def ln(arg):
    return func('ln', arg)


def sqrt(arg):
    return func('sqrt', arg)


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"exponent must be rational, got {type(value).__name__}")


# --- evaluation ---------------------------------------------------------

def _pow_value(base, exponent):
    if base == 0.0 and exponent < 0:
        raise ExprDomainError("zero raised to a negative power")
    if base < 0.0:
        if exponent.denominator == 1:
            return base ** exponent.numerator
        if exponent.denominator % 2 == 1:
            sign = -1.0 if exponent.numerator % 2 else 1.0
            return sign * (-base) ** float(exponent)
        raise ExprDomainError(f"even root of negative value {base!r}")
    return base ** float(exponent)


def _apply(name, x):
    try:
        if name == 'sin':
            return math.sin(x)
        if name == 'cos':
            return math.cos(x)
        if name == 'exp':
            return math.exp(x)
        if name == 'ln':
            if x <= 0.0:
                raise ExprDomainError(f"ln of non-positive value {x!r}")
            return math.log(x)
        if name == 'sqrt':
            if x < 0.0:
                raise ExprDomainError(f"sqrt of negative value {x!r}")
            return math.sqrt(x)
    except OverflowError as e:
        raise ExprDomainError(f"{name}({x!r}) overflows: {e}")
    raise UnknownFunctionError(name, 0)


def _eval(e, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Add):
        return _eval(e.left, env) + _eval(e.right, env)
    if isinstance(e, Sub):
        return _eval(e.left, env) - _eval(e.right, env)
    if isinstance(e, Mul):
        return _eval(e.left, env) * _eval(e.right, env)
    if isinstance(e, Div):
        denominator = _eval(e.right, env)
        if denominator == 0.0:
            raise ExprDomainError("division by zero")
        return _eval(e.left, env) / denominator
    if isinstance(e, Pow):
        try:
            return _pow_value(_eval(e.base, env), e.exponent)
        except OverflowError as err:
            raise ExprDomainError(f"power overflows: {err}")
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Func):
        return _apply(e.name, _eval(e.arg, env))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, point):
    """
    Evaluate an expression at a point.

    Args:
        e (Expr): Expression to evaluate
        point (Point or Mapping[str, float]): Coordinate values

    Returns:
        float: The value in double precision
    """
    env = point.values if isinstance(point, Point) else point
    return _eval(e, env)


# --- differentiation ----------------------------------------------------

def diff(e, v):
    """Exact derivative of ``e`` with respect to coordinate ``v``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return add(diff(e.left, v), diff(e.right, v))
    if isinstance(e, Sub):
        return sub(diff(e.left, v), diff(e.right, v))
    if isinstance(e, Mul):
        return add(mul(diff(e.left, v), e.right), mul(e.left, diff(e.right, v)))
    if isinstance(e, Div):
        dl = diff(e.left, v)
        dr = diff(e.right, v)
        return sub(div(dl, e.right), div(mul(e.left, dr), power(e.right, 2)))
    if isinstance(e, Pow):
        db = diff(e.base, v)
        if _is_const(db, 0.0):
            return ZERO
        return mul(mul(Const(float(e.exponent)), power(e.base, e.exponent - 1)), db)
    if isinstance(e, Neg):
        return neg(diff(e.arg, v))
    if isinstance(e, Func):
        da = diff(e.arg, v)
        if _is_const(da, 0.0):
            return ZERO
        a = e.arg
        if e.name == 'sin':
            outer = Func('cos', a)
        elif e.name == 'cos':
            outer = neg(Func('sin', a))
        elif e.name == 'exp':
            outer = e
        elif e.name == 'ln':
            return div(da, a)
        elif e.name == 'sqrt':
            return div(da, mul(Const(2.0), e))
        else:
            raise UnknownFunctionError(e.name, 0)
        return mul(outer, da)
    raise TypeError(f"not an expression node: {e!r}")


# --- structure ----------------------------------------------------------

def variables(e):
    """Names of the coordinates an expression depends on."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, (Add, Sub, Mul, Div)):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, (Neg, Func)):
        return variables(e.arg)
    raise TypeError(f"not an expression node: {e!r}")


def is_constant_in(e, names):
    return not (variables(e) & set(names))


def substitute(e, mapping):
    """Replace variables by expressions (or numbers), re-folding constants."""
    if isinstance(e, Var):
        if e.name in mapping:
            return as_expr(mapping[e.name])
        return e
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return add(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Sub):
        return sub(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Mul):
        return mul(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Div):
        return div(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Pow):
        return power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Neg):
        return neg(substitute(e.arg, mapping))
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, mapping))
    raise TypeError(f"not an expression node: {e!r}")


# --- rendering ----------------------------------------------------------

_OPERATORS = {Add: '+', Sub: '-', Mul: '*', Div: '/'}


def _is_atomic(e):
    if isinstance(e, Const):
        return e.value >= 0.0 and not (e.value == 0.0 and math.copysign(1.0, e.value) < 0)
    return isinstance(e, (Var, Func))


def _wrapped(e):
    text = render(e)
    return text if _is_atomic(e) else f"({text})"


def _render_exponent(q):
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    return f"({q.numerator}/{q.denominator})" if q.denominator != 1 else f"({q.numerator})"


def render(e):
    """
    Render an expression in the parse grammar.

    Compound children are always parenthesized and constants use ``repr``,
    so ``parse(render(e))`` rebuilds the same tree.
    """
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if type(e) in _OPERATORS:
        return f"{_wrapped(e.left)} {_OPERATORS[type(e)]} {_wrapped(e.right)}"
    if isinstance(e, Pow):
        return f"{_wrapped(e.base)}^{_render_exponent(e.exponent)}"
    if isinstance(e, Neg):
        return f"-{_wrapped(e.arg)}"
    if isinstance(e, Func):
        return f"{e.name}({render(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# --- parsing ------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


class _Parser:
    """Recursive-descent parser producing folded expression trees."""

    def __init__(self, text, constants):
        self.text = text
        self.constants = dict(BUILTIN_CONSTANTS)
        if constants:
            self.constants.update(constants)
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _byte_offset(self, index):
        return len(self.text[:index].encode('utf-8'))

    def _tokenize(self, text):
        tokens = []
        index = 0
        while index < len(text):
            match = _TOKEN.match(text, index)
            if match is None:
                raise ExprSyntaxError(f"unexpected character {text[index]!r}", self._byte_offset(index))
            kind = match.lastgroup
            if kind != 'ws':
                tokens.append(_Token(kind, match.group(), self._byte_offset(index)))
            index = match.end()
        tokens.append(_Token('end', '', self._byte_offset(len(text))))
        return tokens

    @property
    def current(self):
        return self.tokens[self.pos]

    def _advance(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def _expect(self, text):
        token = self.current
        if token.text != text:
            found = token.text or 'end of input'
            raise ExprSyntaxError(f"expected '{text}', found '{found}'", token.offset)
        return self._advance()

    def parse(self):
        if self.current.kind == 'end':
            raise ExprSyntaxError("empty expression", 0)
        result = self._expr()
        if self.current.kind != 'end':
            raise ExprSyntaxError(f"unexpected '{self.current.text}'", self.current.offset)
        return result

    def _expr(self):
        left = self._term()
        while self.current.text in ('+', '-'):
            op = self._advance().text
            right = self._term()
            left = add(left, right) if op == '+' else sub(left, right)
        return left

    def _term(self):
        left = self._unary()
        while self.current.text in ('*', '/'):
            op = self._advance().text
            right = self._unary()
            left = mul(left, right) if op == '*' else div(left, right)
        return left

    def _unary(self):
        if self.current.text == '-':
            self._advance()
            return neg(self._unary())
        if self.current.text == '+':
            self._advance()
            return self._unary()
        return self._power()

    def _power(self):
        base = self._atom()
        if self.current.text == '^':
            self._advance()
            exponent = self._exponent()
            if self.current.text == '^':
                raise ExprSyntaxError("chained exponents need parentheses", self.current.offset)
            return power(base, exponent)
        return base

    def _atom(self):
        token = self.current
        if token.kind == 'number':
            self._advance()
            return Const(float(token.text))
        if token.kind == 'name':
            self._advance()
            if self.current.text == '(':
                if token.text not in FUNCTIONS:
                    raise UnknownFunctionError(token.text, token.offset)
                self._advance()
                arg = self._expr()
                self._expect(')')
                return Func(token.text, arg)
            if token.text in self.constants:
                return as_expr(self.constants[token.text])
            return Var(token.text)
        if token.text == '(':
            self._advance()
            inner = self._expr()
            self._expect(')')
            return inner
        found = token.text or 'end of input'
        raise ExprSyntaxError(f"unexpected '{found}'", token.offset)

    # exponents are evaluated over exact fractions

    def _exponent(self):
        return self._rational_factor()

    def _rational(self):
        value = self._rational_term()
        while self.current.text in ('+', '-'):
            op = self._advance().text
            rhs = self._rational_term()
            value = value + rhs if op == '+' else value - rhs
        return value

    def _rational_term(self):
        value = self._rational_factor()
        while self.current.text in ('*', '/'):
            op = self._advance().text
            token = self.current
            rhs = self._rational_factor()
            if op == '/':
                if rhs == 0:
                    raise ExprSyntaxError("division by zero in exponent", token.offset)
                value = value / rhs
            else:
                value = value * rhs
        return value

    def _rational_factor(self):
        token = self.current
        if token.text == '-':
            self._advance()
            return -self._rational_factor()
        if token.kind == 'number':
            self._advance()
            return Fraction(token.text)
        if token.kind == 'name' and token.text in self.constants:
            self._advance()
            value = self.constants[token.text]
            if isinstance(value, Expr):
                if not isinstance(value, Const):
                    raise ExprSyntaxError(f"exponent constant '{token.text}' is not numeric", token.offset)
                value = value.value
            return _as_fraction(value if isinstance(value, (int, Fraction)) else float(value))
        if token.text == '(':
            self._advance()
            value = self._rational()
            self._expect(')')
            return value
        raise ExprSyntaxError("exponent must be a rational constant", token.offset)


def parse(text, constants=None):
    """
    Parse an expression string.

    Args:
        text (str): Expression in the grammar documented at module level
        constants (Mapping[str, float], optional): Names to bind as constants

    Returns:
        Expr: The expression tree

    Raises:
        ExprSyntaxError: On malformed input, with the byte offset
        UnknownFunctionError: On a call to an unsupported function
    """
    return _Parser(text, constants).parse()

