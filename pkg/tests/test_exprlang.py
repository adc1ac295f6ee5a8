import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from semihyp import exprlang as el
from semihyp.exprlang import BinOp, Call, Neg, Num, Var

VARS = ["x", "y"]


def test_parse_power():
    assert el.parse("u1^2", ["x", "t", "u1", "u2"]) == BinOp("^", Var("u1"), Num(2.0))


def test_parse_call_and_sum():
    got = el.parse("sin(3.1*x)+t", ["x", "t"])
    assert got == BinOp("+", Call("sin", (BinOp("*", Num(3.1), Var("x")),)), Var("t"))


def test_power_is_right_associative():
    assert el.parse("x^2^3", ["x"]) == BinOp("^", Var("x"), BinOp("^", Num(2.0), Num(3.0)))


def test_unary_minus_binds_looser_than_power():
    assert el.parse("-x^2", ["x"]) == Neg(BinOp("^", Var("x"), Num(2.0)))


def test_unknown_variable_position():
    with pytest.raises(el.UnknownVariable) as exc:
        el.parse("u3", ["x", "t", "u1", "u2"])
    assert exc.value.position == 0
    assert "position 0" in str(exc.value)


def test_unknown_function_and_arity():
    with pytest.raises(el.UnknownFunction):
        el.parse("foo(x)", ["x"])
    with pytest.raises(el.ArityError):
        el.parse("sin(x, x)", ["x"])


@pytest.mark.parametrize("src", ["", "x+", "(x", "2..3", "x y", "sin"])
def test_syntax_errors(src):
    with pytest.raises(el.ParseError):
        el.parse(src, ["x"])


def test_evaluate_examples():
    assert el.evaluate(el.parse("x+2*t", ["x", "t"]), {"x": 1, "t": 3}) == 7
    assert el.evaluate(el.parse("loglog(exp(exp(1)))", []), {}) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("src, env", [
    ("log(x)", {"x": -1.0}),
    ("loglog(x)", {"x": 1.0}),
    ("1/x", {"x": 0.0}),
    ("sqrt(x)", {"x": -4.0}),
])
def test_domain_errors_name_subexpression(src, env):
    with pytest.raises(el.DomainError) as exc:
        el.evaluate(el.parse(src, ["x"]), env)
    assert exc.value.subexpr


def test_derivative_examples():
    d = el.differentiate(el.parse("u1^2", ["u1"]), "u1")
    assert el.to_text(d) == "2*u1"
    d = el.differentiate(el.parse("sin(x)", ["x"]), "x")
    assert d == Call("cos", (Var("x"),))


def test_loglog_chain_rule_against_fd():
    a = el.parse("u2*loglog(2.72^2.72 + u1^2)", ["u1", "u2"])
    d = el.compile_expr(el.differentiate(a, "u1"))
    f = el.compile_expr(a)
    import numpy as np

    rng = np.random.default_rng(3)
    for u1, u2 in rng.uniform(-5, 5, size=(100, 2)):
        h = 1e-6
        fd = (f({"u1": u1 + h, "u2": u2}) - f({"u1": u1 - h, "u2": u2})) / (2 * h)
        exact = d({"u1": u1, "u2": u2})
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def test_abs_not_differentiable():
    with pytest.raises(el.NotDifferentiable):
        el.differentiate(el.parse("abs(x)", ["x"]), "x")


def test_print_examples():
    assert el.to_text(BinOp("^", Var("u1"), Num(2.0))) == "u1^2"
    assert el.to_text(BinOp("+", Var("x"), BinOp("*", Num(2.0), Var("t")))) == "x+2*t"
    nested = Neg(Neg(Var("x")))
    assert el.to_text(nested) == "-(-x)"
    assert el.parse("-(-x)", ["x"]) == nested


def test_substitute_folds_constants():
    a = el.parse("exp(-t)*x", ["x", "t"])
    assert el.to_text(el.substitute(a, {"t": Num(0.0)})) == "x"


# -- property tests ------------------------------------------------------------

numbers = st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(Num)
leaves = st.one_of(numbers, st.sampled_from(VARS).map(Var))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(st.sampled_from(sorted(el.FUNCTIONS)), children).map(
            lambda a: Call(a[0], (a[1],))),
    )


any_ast = st.recursive(leaves, _extend, max_leaves=12)


@given(any_ast)
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(node):
    assert el.parse(el.to_text(node), VARS) == node


small = st.floats(min_value=0.1, max_value=2.0).map(Num)
smooth_leaves = st.one_of(small, st.sampled_from(VARS).map(Var))


def _smooth(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(children, st.sampled_from([2.0, 3.0])).map(
            lambda a: BinOp("^", a[0], Num(a[1]))),
        children.map(lambda c: BinOp("/", c, Call("exp", (c,)))),
        st.tuples(st.sampled_from(["sin", "cos", "tanh"]), children).map(
            lambda a: Call(a[0], (a[1],))),
    )


smooth_ast = st.recursive(smooth_leaves, _smooth, max_leaves=6)


@given(smooth_ast, st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=200, deadline=None)
def test_derivative_matches_central_difference(node, x, y):
    f = el.compile_expr(node)
    d = el.compile_expr(el.differentiate(node, "x"))
    h = 1e-6
    fp, fm = f({"x": x + h, "y": y}), f({"x": x - h, "y": y})
    val = f({"x": x, "y": y})
    assume(all(math.isfinite(v) and abs(v) < 1e6 for v in (fp, fm, val)))
    fd = (fp - fm) / (2 * h)
    exact = d({"x": x, "y": y})
    scale = max(1.0, abs(exact), abs(val))
    assert abs(fd - exact) <= 1e-5 * scale


@given(any_ast, st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=100, deadline=None)
def test_evaluation_is_deterministic(node, x, y):
    try:
        a = el.evaluate(node, {"x": x, "y": y})
    except (el.DomainError, OverflowError):
        return
    b = el.evaluate(node, {"x": x, "y": y})
    assert (a == b) or (math.isnan(a) and math.isnan(b))
