"""Parser, derivative, and evaluation tests for the expression layer.

Derivatives are cross-checked against central finite differences, which is
an independent route to the same numbers: the symbolic rules never see the
step size and the difference quotient never sees the tree structure.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tractorlab.expr import (
    Expr,
    ExprDomainError,
    ExprNameError,
    ExprSyntaxError,
    compile_exprs,
    eval_many,
    num,
    parse,
    var,
)

XY = ("x", "y")


def fd_partial(e, name, env, h=1e-6):
    hi = dict(env)
    lo = dict(env)
    hi[name] += h
    lo[name] -= h
    return (e.eval(hi) - e.eval(lo)) / (2 * h)


# -- parsing -------------------------------------------------------------------


def test_precedence_and_literals() -> None:
    e = parse("1 + 2*3^2", XY)
    assert e.eval({}) == 19.0
    assert parse("2*x + 1", XY).eval({"x": 3.0}) == 7.0
    assert parse("(1+2)*3", XY).eval({}) == 9.0
    assert parse("1.5e2", XY).eval({}) == 150.0
    assert parse(".5", XY).eval({}) == 0.5


def test_unary_minus_binds_outside_power() -> None:
    assert parse("-x^2", XY).eval({"x": 3.0}) == -9.0
    assert parse("(-x)^2", XY).eval({"x": 3.0}) == 9.0
    assert parse("--x", XY).eval({"x": 3.0}) == 3.0


def test_negative_exponent() -> None:
    assert parse("x^-2", XY).eval({"x": 2.0}) == 0.25


def test_division_chain_left_associative() -> None:
    assert parse("8/4/2", XY).eval({}) == 1.0
    assert parse("8-4-2", XY).eval({}) == 2.0


def test_functions() -> None:
    env = {"x": 0.7}
    for fn in ("sin", "cos", "tan", "exp", "log", "sqrt", "atan"):
        got = parse(f"{fn}(x)", XY).eval(env)
        assert got == pytest.approx(getattr(math, fn)(0.7), abs=1e-15)


def test_syntax_error_reports_position() -> None:
    with pytest.raises(ExprSyntaxError) as info:
        parse("2*(x +", XY)
    assert info.value.position == 6
    with pytest.raises(ExprSyntaxError):
        parse("1 2", XY)
    with pytest.raises(ExprSyntaxError):
        parse("x^y", XY)
    with pytest.raises(ExprSyntaxError):
        parse("x^2.5", XY)
    with pytest.raises(ExprSyntaxError):
        parse("", XY)
    with pytest.raises(ExprSyntaxError):
        parse("x + $", XY)


def test_unknown_identifiers_rejected() -> None:
    with pytest.raises(ExprNameError) as info:
        parse("x + z", XY)
    assert info.value.name == "z"
    assert info.value.position == 4
    with pytest.raises(ExprNameError):
        parse("sinh(x)", XY)
    # function names are not usable as bare variables
    with pytest.raises(ExprNameError):
        parse("sin + 1", XY)
    with pytest.raises(ValueError):
        parse("x", ("sin", "x"))


# -- evaluation and domain handling --------------------------------------------


def test_domain_errors_never_nan() -> None:
    cases = ["log(x - 2)", "sqrt(-1 - x^2)", "1/(x - x)", "x^-1 - x^-1"]
    for text in cases:
        e = parse(text, XY)
        with pytest.raises(ExprDomainError):
            e.eval({"x": 0.0})


def test_overflow_is_an_error() -> None:
    e = parse("exp(x)", XY)
    with pytest.raises(ExprDomainError):
        e.eval({"x": 1e4})


def test_zero_over_expr_folds_but_literal_zero_division_does_not() -> None:
    e = parse("0/x", XY)
    assert e.eval({"x": 0.0}) == 0.0  # folded to the constant 0
    with pytest.raises(ExprDomainError):
        parse("1/0", XY).eval({})


# -- derivatives ---------------------------------------------------------------


def test_polynomial_derivatives_exact() -> None:
    e = parse("x^3 + 2*x*y - y^2", XY)
    dx = e.diff("x")
    dy = e.diff("y")
    for px, py in [(0.3, -1.2), (2.0, 0.5), (-1.1, 3.0)]:
        env = {"x": px, "y": py}
        assert dx.eval(env) == pytest.approx(3 * px**2 + 2 * py, rel=1e-14)
        assert dy.eval(env) == pytest.approx(2 * px - 2 * py, rel=1e-14)


def test_second_derivative_of_reciprocal() -> None:
    e = parse("1/x", XY)
    d2 = e.diff("x").diff("x")
    assert d2.eval({"x": 2.0}) == pytest.approx(2 / 8, rel=1e-14)


def test_function_chain_rules_match_finite_differences() -> None:
    texts = [
        "sin(x*y) + cos(x)^2",
        "exp(x - y^2)",
        "log(2 + x^2)",
        "sqrt(1 + x^2 + y^2)",
        "atan(x/(1 + y^2))",
        "tan(x*0.3)",
    ]
    env = {"x": 0.4, "y": -0.8}
    for text in texts:
        e = parse(text, XY)
        for name in XY:
            sym = e.diff(name).eval(env)
            ref = fd_partial(e, name, env)
            assert sym == pytest.approx(ref, rel=1e-6, abs=1e-8), text


def test_mixed_partials_commute() -> None:
    e = parse("sin(x*y)*exp(x) + x^2*y^3", XY)
    a = e.diff("x").diff("y")
    b = e.diff("y").diff("x")
    for px, py in [(0.2, 0.7), (-0.5, 0.3)]:
        env = {"x": px, "y": py}
        assert a.eval(env) == pytest.approx(b.eval(env), rel=1e-12)


def test_derivative_of_constant_tree_is_zero_node() -> None:
    e = parse("3*y + 7", XY)
    d = e.diff("x")
    assert d == num(0.0)


# -- operator overloading (used by the tensor layers) ---------------------------


def test_operator_overloads_build_equivalent_trees() -> None:
    x, y = var("x"), var("y")
    e = (x + 2.0) * y - x / y
    env = {"x": 1.5, "y": 4.0}
    assert e.eval(env) == pytest.approx((1.5 + 2) * 4 - 1.5 / 4)
    assert (x**3).eval({"x": 2.0}) == 8.0
    with pytest.raises(TypeError):
        x ** 1.5  # noqa: B018
    assert (-x).eval({"x": 2.0}) == -2.0
    assert (1.0 - x).eval({"x": 0.25}) == 0.75


def test_folding_identities() -> None:
    x = var("x")
    assert x + 0.0 is x
    assert 0.0 + x is x
    assert x * 1.0 is x
    assert (x * 0.0) == num(0.0)
    assert (x**1) is x
    assert (x**0) == num(1.0)
    assert -(-x) is x


# -- round trip through rendering -----------------------------------------------


def test_to_string_round_trip() -> None:
    texts = [
        "x^3 + 2*x*y - y^2",
        "-x^2",
        "(x + y)/(x - y)",
        "sin(x*y)*exp(x)",
        "8/4/2",
        "1 - (2 - 3)",
        "x^-2",
    ]
    env = {"x": 0.37, "y": 1.21}
    for text in texts:
        e = parse(text, XY)
        back = parse(e.to_string(), XY)
        assert back.eval(env) == pytest.approx(e.eval(env), rel=1e-15)


# -- compiled evaluation ----------------------------------------------------------


def test_compiled_matches_tree_eval() -> None:
    texts = ["x^3 + 2*x*y", "sin(x)*cos(y)", "exp(-x^2 - y^2)", "1/(1 + x^2)"]
    exprs = [parse(t, XY) for t in texts]
    fn = compile_exprs(exprs, XY)
    for px, py in [(0.1, 0.2), (-1.0, 0.5), (2.0, -2.0)]:
        got = fn(px, py)
        want = [e.eval({"x": px, "y": py}) for e in exprs]
        assert np.allclose(got, want, rtol=1e-15, atol=0)


def test_compiled_domain_error() -> None:
    fn = compile_exprs([parse("log(x)", XY)], XY)
    with pytest.raises(ExprDomainError):
        fn(-1.0, 0.0)
    fn2 = compile_exprs([parse("1/x", XY)], XY)
    with pytest.raises(ExprDomainError):
        fn2(0.0, 0.0)


def test_compiled_single_output_shape() -> None:
    fn = compile_exprs([parse("x + y", XY)], XY)
    out = fn(1.0, 2.0)
    assert out.shape == (1,)
    assert out[0] == 3.0


# -- property tests ----------------------------------------------------------------


def safe_trees():
    leaves = st.one_of(
        st.floats(min_value=-3, max_value=3, allow_nan=False).map(num),
        st.sampled_from([var("x"), var("y")]),
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, children).map(lambda ab: ab[0] + ab[1]),
            st.tuples(children, children).map(lambda ab: ab[0] - ab[1]),
            st.tuples(children, children).map(lambda ab: ab[0] * ab[1]),
            children.map(lambda a: -a),
            st.tuples(children, st.integers(min_value=1, max_value=3)).map(lambda ak: ak[0] ** ak[1]),
            children.map(lambda a: parse("sin(x)", XY) * a + parse("cos(y)", XY)),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=60, deadline=None)
@given(e=safe_trees(), px=st.floats(-1.5, 1.5), py=st.floats(-1.5, 1.5))
def test_property_diff_matches_finite_differences(e: Expr, px: float, py: float) -> None:
    env = {"x": px, "y": py}
    try:
        base = e.eval(env)
        sym = e.diff("x").eval(env)
    except ExprDomainError:
        return
    if abs(base) > 1e6 or abs(sym) > 1e6:
        return  # steep trees lose FD accuracy; not informative
    ref = fd_partial(e, "x", env, h=1e-5)
    assert sym == pytest.approx(ref, rel=5e-4, abs=5e-4)


@settings(max_examples=60, deadline=None)
@given(e=safe_trees(), px=st.floats(-1.5, 1.5), py=st.floats(-1.5, 1.5))
def test_property_render_round_trip(e: Expr, px: float, py: float) -> None:
    env = {"x": px, "y": py}
    try:
        want = e.eval(env)
    except ExprDomainError:
        return
    got = parse(e.to_string(), XY).eval(env)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_eval_many_matches_single_eval() -> None:
    e1 = parse("sin(x*y) + x^3/(1 + y^2)", XY)
    e2 = e1.diff("x")
    e3 = e2.diff("y")
    env = {"x": 0.7, "y": -0.4}
    got = eval_many([e1, e2, e3, e1], env)
    want = [e1.eval(env), e2.eval(env), e3.eval(env), e1.eval(env)]
    assert got == pytest.approx(want, rel=1e-15)


def test_eval_many_propagates_domain_errors() -> None:
    bad = parse("log(x)", XY)
    with pytest.raises(ExprDomainError):
        eval_many([bad], {"x": -1.0, "y": 0.0})


def test_eval_many_survives_deep_chains() -> None:
    # a left-leaning chain far deeper than the recursion limit
    e = var("x")
    for _ in range(5000):
        e = e + num(1.0)
    assert eval_many([e], {"x": 0.5}) == [pytest.approx(5000.5)]
