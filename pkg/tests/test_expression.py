import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regimedyn.errors import ExpressionSyntaxError, VariableIndexError
from regimedyn.expression import evaluate, max_variable, parse_expression, to_text


def ev(text, x, n=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(evaluate(parse_expression(text, n or len(x)), x[None, :])[0])


def test_affine_component():
    assert ev("0.8*x0 + 0.2", [3.0, 0.0]) == pytest.approx(2.6, abs=1e-15)


def test_collateral_component_vanishes_at_fixed_point():
    assert ev("0.8*x0 + 1.6*(x1/(1+x1) - 0.5) + 0.2", [1.0, 1.0]) == 1.0


def test_power_is_right_associative():
    assert ev("x0^2^3", [2.0]) == 256.0


@pytest.mark.parametrize("text, expected", [
    ("-x0^2", -9.0),
    ("(-x0)^2", 9.0),
    ("2^-1", 0.5),
    ("10 - 4 - 3", 3.0),
    ("24 / 4 / 3", 2.0),
    ("2 + 3 * 4", 14.0),
    ("--x0", 3.0),
    ("+x0", 3.0),
    ("x[0] * x0", 9.0),
    ("min(4, x0, 7)", 3.0),
    ("max(x0, 1)", 3.0),
    ("abs(-x0)", 3.0),
    ("sqrt(x0 + 1)", 2.0),
    ("exp(0) + log(1) + tanh(0)", 1.0),
    ("1e1 + .5 + 3.", 13.5),
])
def test_precedence_and_functions(text, expected):
    assert ev(text, [3.0]) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text, offset", [
    ("x0 +* 1", 4),
    ("(x0 + 1", 7),
    ("x0 1", 3),
    ("foo(x0)", 0),
    ("x0 $ 1", 3),
    ("min()", 4),
])
def test_syntax_errors_carry_offset_and_expected(text, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression(text, 2)
    assert info.value.offset == offset
    assert info.value.expected


def test_offsets_are_bytes():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("é + $", 1)
    assert info.value.offset == 0
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("x0 + é", 1)
    assert info.value.offset == 5


@pytest.mark.parametrize("text", ["", "   "])
def test_empty(text):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(text, 1)


def test_variable_out_of_range_is_index_error():
    with pytest.raises(IndexError):
        parse_expression("x0 + x2", 2)
    with pytest.raises(VariableIndexError):
        parse_expression("x[5]", 2)


def test_domain_errors_give_nonfinite_values():
    X = np.array([[-1.0], [0.0]])
    assert np.isnan(evaluate(parse_expression("log(x0)", 1), X)[0])
    assert np.isinf(evaluate(parse_expression("1/x0", 1), X)[1])


def test_max_variable():
    assert max_variable(parse_expression("3 + 4", 3)) == -1
    assert max_variable(parse_expression("x0 * min(x2, 1)", 3)) == 2


def test_kink_flags():
    tree = parse_expression("abs(x0) + max(x0, 0)", 1)
    flags = []
    evaluate(tree, np.array([[1.0], [2.0]]), flags)
    assert flags == [False, False]
    flags = []
    evaluate(tree, np.array([[0.0]]), flags)
    assert flags == [True, True]


# random expression source for the round-trip property
_leaf = st.one_of(
    st.sampled_from(["x0", "x1", "x[2]"]),
    st.floats(0.0, 10.0, allow_nan=False).map(repr),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*", "/"]), children).map(lambda t: f"{t[0]} {t[1]} {t[2]}"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"({c})"),
        st.tuples(st.sampled_from(["exp", "tanh", "abs", "sqrt"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(st.sampled_from(["min", "max"]), children, children).map(lambda t: f"{t[0]}({t[1]}, {t[2]})"),
        st.tuples(children, st.sampled_from(["0", "1", "2", "-1"])).map(lambda t: f"({t[0]})^{t[1]}"),
    )


@settings(max_examples=150, deadline=None)
@given(st.recursive(_leaf, _extend, max_leaves=12))
def test_round_trip_preserves_values(text):
    n = 3
    tree = parse_expression(text, n)
    again = parse_expression(to_text(tree), n)
    X = np.random.default_rng(0).uniform(-3, 3, size=(100, n))
    a = evaluate(tree, X)
    b = evaluate(again, X)
    same_nan = np.isnan(a) == np.isnan(b)
    assert same_nan.all()
    fin = np.isfinite(a)
    assert np.array_equal(np.isinf(a), np.isinf(b))
    assert np.all(np.abs(a[fin] - b[fin]) <= 1e-15 * np.maximum(1.0, np.abs(a[fin])))


def test_round_trip_keeps_float_precision():
    tree = parse_expression("0.1 + 1e-300 * x0", 1)
    again = parse_expression(to_text(tree), 1)
    assert to_text(again) == to_text(tree)
    assert math.isclose(float(evaluate(again, np.array([[2.0]]))[0]), 0.1)
