import math

from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx, mark, raises

from warpcheck.errors import (
    ExprDomainError,
    ExprSyntaxError,
    UnboundVariableError,
    UnknownFunctionError,
)
from warpcheck.expr import (
    ONE,
    ZERO,
    Const,
    Pow,
    Var,
    add,
    cos,
    diff,
    div,
    evaluate,
    exp,
    mul,
    neg,
    parse,
    power,
    render,
    sin,
    sub,
    substitute,
    variables,
)


@mark.parametrize("text value".split(), (
    ("1 + 2*3^2", 19.0),
    ("-2^2", -4.0),
    ("2^-1", 0.5),
    ("(1 + 1)^(3/2)", 2.0 ** 1.5),
    ("8 / 4 / 2", 1.0),
    ("10 - 3 - 2", 5.0),
    ("+3", 3.0),
    ("(-8)^(1/3)", -2.0),
    ("(-2)^3", -8.0),
    ("cos(pi)", -1.0),
    ("1.5e2", 150.0),
))
def test_parse_numeric_expressions(text, value):
    assert evaluate(parse(text), {}) == approx(value)


def test_parse_binds_constants():
    e = parse("a*x + b", {'a': 2.0, 'b': 1.0})
    assert variables(e) == {'x'}
    assert evaluate(e, {'x': 3.0}) == 7.0


def test_constant_exponent():
    e = parse("x^n", {'n': 3})
    assert e == Pow(Var('x'), 3)


def test_folding_of_literal_zeros_and_ones():
    assert parse("0*x + 1*y") == Var('y')
    assert parse("x^0") == ONE
    assert parse("x - 0") == Var('x')
    assert parse("2*3") == Const(6.0)


@mark.parametrize("text offset".split(), (
    ("1 + * 2", 4),
    ("x + ", 4),
    ("2 $ 3", 2),
    ("(x + 1", 6),
    ("x y", 2),
    ("   ", 0),
    ("\u00a0x $", 4),
))
def test_syntax_error_offsets(text, offset):
    with raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset
    assert f"at offset {offset}" in str(info.value)


def test_chained_exponents_need_parentheses():
    with raises(ExprSyntaxError):
        parse("x^2^3")


def test_exponent_must_be_rational():
    with raises(ExprSyntaxError):
        parse("x^y")


def test_unknown_function():
    with raises(UnknownFunctionError) as info:
        parse("1 + foo(x)")
    assert info.value.name == 'foo'
    assert info.value.offset == 4


def test_unbound_variable():
    with raises(UnboundVariableError) as info:
        evaluate(parse("x + y"), {'x': 1.0})
    assert info.value.name == 'y'


@mark.parametrize("text env".split(), (
    ("ln(x)", {'x': 0.0}),
    ("sqrt(x)", {'x': -1.0}),
    ("1/x", {'x': 0.0}),
    ("x^(1/2)", {'x': -4.0}),
    ("x^(-1)", {'x': 0.0}),
    ("exp(x)", {'x': 1000.0}),
))
def test_domain_errors(text, env):
    with raises(ExprDomainError):
        evaluate(parse(text), env)


def test_derivative_rules():
    x = 0.7
    cases = (
        ("x^3", 3 * x ** 2),
        ("sin(x)*exp(x)", math.cos(x) * math.exp(x) + math.sin(x) * math.exp(x)),
        ("ln(x)", 1 / x),
        ("sqrt(x)", 0.5 / math.sqrt(x)),
        ("1/x", -1 / x ** 2),
        ("cos(2*x)", -2 * math.sin(2 * x)),
        ("x^(1/2)", 0.5 * x ** -0.5),
    )
    for text, expected in cases:
        assert evaluate(diff(parse(text), 'x'), {'x': x}) == approx(expected, rel=1e-12)


def test_derivative_in_other_coordinate_is_zero():
    assert diff(parse("sin(y)^2 + y"), 'x') == ZERO


def test_substitute_folds_constants():
    e = substitute(parse("a*x + y"), {'a': 0, 'y': 2})
    assert e == Const(2.0)


def test_operator_overloads():
    x = Var('x')
    e = (x + 1) * (x - 1) / 2
    assert evaluate(e, {'x': 3.0}) == 4.0
    assert evaluate(-x ** 2, {'x': 3.0}) == -9.0
    assert evaluate(2 - x, {'x': 3.0}) == -1.0


# --- properties ---------------------------------------------------------

# halves keep folded constants exactly representable and far from overflow
small_constants = st.integers(min_value=-6, max_value=6).map(lambda k: Const(k / 2))
coordinates = st.sampled_from([Var('x'), Var('y')])


def _combine(children):
    binary = st.tuples(st.sampled_from([add, sub, mul]), children, children).map(lambda t: t[0](t[1], t[2]))
    unary = st.tuples(st.sampled_from([neg, sin, cos]), children).map(lambda t: t[0](t[1]))
    scaled = st.tuples(children, coordinates).map(lambda t: mul(t[0], t[1]))
    return binary | unary | scaled


smooth_expressions = st.recursive(small_constants | coordinates, _combine, max_leaves=8)


def _rendered_tree(children):
    quotient = st.tuples(children, children).map(lambda t: div(t[0], t[1]))
    # shifted by a coordinate so the base never folds to a constant
    rooted = st.tuples(children, st.sampled_from(['1/2', '-1', '2', '3', '-2/3'])).map(
        lambda t: power(add(t[0], Var('y')), t[1])
    )
    wrapped = children.map(exp)
    return _combine(children) | quotient | rooted | wrapped


any_expressions = st.recursive(small_constants | coordinates, _rendered_tree, max_leaves=10)


@given(any_expressions)
def test_render_parses_back_to_the_same_tree(e):
    assert parse(render(e)) == e


unit_constants = st.sampled_from([-1.0, -0.5, 0.5, 1.0]).map(Const)
# unit-sized constants bound the third derivative the central difference sees
unit_expressions = st.recursive(unit_constants | coordinates, _combine, max_leaves=8)


@settings(deadline=None)
@given(unit_expressions, st.floats(min_value=-1, max_value=1), st.floats(min_value=-1, max_value=1))
def test_derivative_matches_central_difference(e, x, y):
    h = 1e-5
    exact = evaluate(diff(e, 'x'), {'x': x, 'y': y})
    numeric = (evaluate(e, {'x': x + h, 'y': y}) - evaluate(e, {'x': x - h, 'y': y})) / (2 * h)
    assert abs(exact - numeric) <= 1e-6 * (1.0 + abs(exact))


coefficients = st.floats(min_value=-3, max_value=3, allow_nan=False)


@given(smooth_expressions, smooth_expressions, coefficients, coefficients,
       st.floats(min_value=-1, max_value=1), st.floats(min_value=-1, max_value=1))
def test_derivative_is_linear(a, b, c1, c2, x, y):
    point = {'x': x, 'y': y}
    lhs = evaluate(diff(add(mul(Const(c1), a), mul(Const(c2), b)), 'y'), point)
    da = c1 * evaluate(diff(a, 'y'), point)
    db = c2 * evaluate(diff(b, 'y'), point)
    assert abs(lhs - (da + db)) <= 1e-9 * (1.0 + abs(da) + abs(db))
