import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geogap import exprparse as ep
from geogap.errors import ExprDomainError, ExprSyntaxError


def ev(src, x, d=2):
    return ep.evaluate(ep.parse(src, d), x)


def test_literals_and_vars():
    assert isinstance(ep.parse("0", 1), ep.Num)
    assert ev("7", [3.0, 4.0]) == 7
    assert ev("x1+x2", [1.0, 2.0]) == 3


def test_standard_functions():
    assert abs(ev("-sin(x1)*cos(x1)", [math.pi / 2, 0.0])) < 1e-15
    assert ev("sinh(x1)", [1.0, 0.0]) == pytest.approx((math.e - 1 / math.e) / 2, rel=1e-15)
    assert ev("sqrt(x1) + log(x2) + exp(0) + tanh(0) + tan(0)", [4.0, 1.0]) == pytest.approx(3.0)


def test_power_right_associative():
    assert ev("x1^2^3", [2.0, 0.0]) == 256
    assert ev("-x1^2", [3.0, 0.0]) == 9  # unary minus binds tighter than ^
    assert ev("0-x1^2", [3.0, 0.0]) == -9
    assert ev("2*pi", [0.0, 0.0]) == pytest.approx(2 * math.pi)


def test_precedence():
    assert ev("1+2*3-4/2", [0, 0]) == 5
    assert ev("(1+2)*3", [0, 0]) == 9
    assert ev("--x1", [2.0, 0]) == 2


@pytest.mark.parametrize("src,offset", [("1 +", 3), ("sin x1", 4), ("x1 $ 2", 3), ("(x1", 3), ("foo(x1)", 0)])
def test_syntax_errors_report_offset(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        ep.parse(src, 2)
    assert info.value.offset == offset


def test_variable_out_of_range():
    with pytest.raises(ExprSyntaxError):
        ep.parse("x3", 2)


@pytest.mark.parametrize("src,x", [("1/x1", [0.0]), ("log(x1)", [0.0]), ("sqrt(x1)", [-1.0]),
                                   ("x1^0.5", [-2.0]), ("x1^(-1)", [0.0])])
def test_domain_errors(src, x):
    with pytest.raises(ExprDomainError) as info:
        ev(src, x, 1)
    assert info.value.offset is not None


def test_domain_error_locates_subexpression():
    with pytest.raises(ExprDomainError) as info:
        ev("x1 + log(x2)", [1.0, -1.0])
    assert info.value.offset == 5


def test_batch_evaluation():
    pts = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(ev("x1*x2", pts), [2.0, 12.0])
    np.testing.assert_allclose(ev("5", pts), [5.0, 5.0])


def test_diff_simple():
    e = ep.parse("x1*x2", 2)
    assert ep.evaluate(ep.diff(e, 1), [3.0, 5.0]) == 5.0
    assert ep.evaluate(ep.diff(ep.parse("sin(x1)", 1), 1), [0.0]) == 1.0
    assert ep.diff(ep.parse("x2", 2), 1) == ep.ZERO


def test_round_trip_source():
    for src in ("x1^2^3", "-sin(x1)*cos(x2)", "1/(x1+x2)", "x1-(x2-3)"):
        e = ep.parse(src, 2)
        assert ep.parse(ep.to_source(e), 2) == e


def _fd(e, x, k, h=1e-5):
    xp, xm = np.array(x, float), np.array(x, float)
    xp[k - 1] += h
    xm[k - 1] -= h
    return (ep.evaluate(e, xp) - ep.evaluate(e, xm)) / (2 * h)


coef = st.integers(-3, 3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coef, st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=5),
       st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_polynomial_diff_matches_fd(terms, a, b):
    src = " + ".join(f"({c})*x1^{i}*x2^{j}" for c, i, j in terms)
    e = ep.parse(src, 2)
    for k in (1, 2):
        assert abs(ep.evaluate(ep.diff(e, k), [a, b]) - _fd(e, [a, b], k)) < 1e-8


@pytest.mark.parametrize("src", ["sin(x1)*exp(x2)", "log(x1)/x2", "sqrt(x1^2+x2^2)", "x1^x2",
                                 "tanh(x1*x2) - cosh(x2)/sinh(x1)", "tan(x1)^3"])
def test_transcendental_diff_matches_fd(src):
    e = ep.parse(src, 2)
    for x in ([0.7, 1.3], [1.1, 0.4]):
        for k in (1, 2):
            assert ep.evaluate(ep.diff(e, k), x) == pytest.approx(_fd(e, x, k), abs=1e-8, rel=1e-8)
