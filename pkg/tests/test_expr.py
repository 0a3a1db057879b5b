from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings

from egbound.expr import (
    Binary, Const, DomainViolation, ParseError, Pow, Unary, Var,
    concrete_eval, expr_size, format_expr, free_vars, parse_expr,
)

from strategies import exprs

EQ8A = "(- 1 (/ (* 2 y) (+ x y)))"


def test_parse_sub():
    assert parse_expr("(- x x)") == Binary("sub", Var("x"), Var("x"))


def test_parse_eq8a_shape():
    e = parse_expr(EQ8A)
    assert e == Binary("sub", Const("1"),
                       Binary("div", Binary("mul", Const("2"), Var("y")),
                              Binary("add", Var("x"), Var("y"))))


def test_unary_minus_is_neg():
    assert parse_expr("(- x)") == Unary("neg", Var("x"))


def test_nary_folds_left():
    assert parse_expr("(+ a b c)") == Binary("add", Binary("add", Var("a"), Var("b")), Var("c"))


@pytest.mark.parametrize("text", ["(pow x 2.5)", "(pow x 33)", "(pow x y)", "(foo x)",
                                  "(+ x", "x)", "()", "(+ x)", "(sqrt x y)", "1.2.3"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_expr(text)


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_expr("(+ x\n   (pow y 1.5))")
    assert info.value.line == 2


def test_pow_range_edges():
    assert parse_expr("(pow x -32)") == Pow(Var("x"), -32)
    assert parse_expr("(pow x 32)") == Pow(Var("x"), 32)


def test_format_examples():
    assert format_expr(Binary("sub", Var("x"), Var("x"))) == "(- x x)"
    assert format_expr(Const("0.1")) == "0.1"
    assert format_expr(Pow(Var("a"), 2)) == "(pow a 2)"


def test_constant_keeps_exact_value():
    c = parse_expr("0.1")
    assert c.literal == "0.1"
    assert c.value == Fraction(1, 10)


@settings(max_examples=300)
@given(exprs)
def test_format_parse_roundtrip(e):
    assert parse_expr(format_expr(e)) == e


@settings(max_examples=200)
@given(exprs)
def test_roundtrip_ignores_whitespace(e):
    text = format_expr(e).replace(" ", "   \n ")
    assert parse_expr(text) == e


def test_free_vars():
    assert free_vars(parse_expr("(- x x)")) == {"x"}
    assert free_vars(parse_expr("1")) == set()
    assert free_vars(parse_expr(EQ8A)) == {"x", "y"}


def test_expr_size():
    assert expr_size(parse_expr("(- x x)")) == 3


def test_eval_examples():
    assert concrete_eval(parse_expr("(- x x)"), {"x": 0.3}) == 0
    v = concrete_eval(parse_expr("(/ x (+ x y))"), {"x": 1, "y": 2})
    with mpmath.workprec(200):
        assert abs(v - mpmath.mpf(1) / 3) < mpmath.mpf(2) ** -120
    v = concrete_eval(parse_expr("(ln (exp x))"), {"x": 5})
    assert abs(v - 5) < mpmath.mpf(2) ** -120


def test_eval_uses_exact_constants():
    # 0.1 is not rounded to binary64 before evaluation
    v = concrete_eval(parse_expr("(* 10 0.1)"), {})
    assert abs(v - 1) < mpmath.mpf(2) ** -120


@pytest.mark.parametrize("text,rho", [
    ("(ln x)", {"x": 0.0}),
    ("(ln x)", {"x": -1.0}),
    ("(sqrt x)", {"x": -1e-300}),
    ("(/ x x)", {"x": 0.0}),
    ("(pow x -2)", {"x": 0.0}),
])
def test_domain_violations(text, rho):
    with pytest.raises(DomainViolation):
        concrete_eval(parse_expr(text), rho)


def test_eval_structural():
    rho = {"x": 0.7, "y": -1.3}
    for op, f in [("+", lambda a, b: a + b), ("-", lambda a, b: a - b),
                  ("*", lambda a, b: a * b), ("/", lambda a, b: a / b)]:
        whole = concrete_eval(parse_expr(f"({op} (* x x) (+ y 1))"), rho)
        left = concrete_eval(parse_expr("(* x x)"), rho)
        right = concrete_eval(parse_expr("(+ y 1)"), rho)
        assert whole == f(left, right)


def test_exprs_are_immutable():
    e = parse_expr("(+ x 1)")
    with pytest.raises(AttributeError):
        e.op = "sub"


def test_enclosure_brackets_point_value():
    from egbound.expr import concrete_enclosure
    for text, rho in [("(- (ln (exp x)) x)", {"x": 0.45}), ("(/ x (+ x y))", {"x": 1, "y": 2}),
                      ("(sqrt (* 0.1 x))", {"x": 3.0}), ("(pow (- x 0.5) -3)", {"x": 0.25})]:
        e = parse_expr(text)
        lo, hi = concrete_enclosure(e, rho)
        v = concrete_eval(e, rho)
        assert lo <= v <= hi
        assert hi - lo <= abs(v) * mpmath.mpf(2) ** -100 + mpmath.mpf(2) ** -100


def test_enclosure_contains_zero_for_identity():
    from egbound.expr import concrete_enclosure
    lo, hi = concrete_enclosure(parse_expr("(- (ln (exp x)) x)"), {"x": -0.4527})
    assert lo <= 0 <= hi


def test_enclosure_domain():
    from egbound.expr import concrete_enclosure
    with pytest.raises(DomainViolation):
        concrete_enclosure(parse_expr("(/ 1 (- x x))"), {"x": 0.3})
