import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pansr.expr import get_equation, parse_expression
from pansr.metrics import feature_usage, is_solution, r_squared

FR = get_equation("friedman")
NAMES = list(FR.variables)


def P(text):
    return parse_expression(text, NAMES)


# r_squared ---------------------------------------------------------------

def test_r2_perfect_and_mean():
    y = np.array([1.0, 4.0, 2.0, 8.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(4, y.mean())) == pytest.approx(0.0, abs=1e-15)


def test_r2_hand_value():
    # residuals (-2, 0, 2) -> SSE 8; SST 2
    assert r_squared([1, 2, 3], [3, 2, 1]) == pytest.approx(-3.0)


@pytest.mark.parametrize("y, yhat", [([1, 1, 1], [1, 2, 3]), ([1], [1]), ([1, 2], [1, 2, 3])])
def test_r2_errors(y, yhat):
    with pytest.raises(ValueError):
        r_squared(y, yhat)


@given(st.integers(0, 2**31), st.floats(-100, 100).filter(lambda a: abs(a) > 1e-3),
       st.floats(-100, 100))
def test_r2_affine_invariance(seed, scale, shift):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=30)
    yhat = y + rng.normal(0, 0.5, 30)
    assert r_squared(scale * y + shift, scale * yhat + shift) == pytest.approx(r_squared(y, yhat), abs=1e-9)


# is_solution -------------------------------------------------------------

def test_additive_offset():
    v = is_solution(P(f"{FR.text} + 3"), FR.expression, FR.bounds)
    assert v.is_solution and v.mode == "difference" and v.constant == pytest.approx(3.0)


def test_multiplicative_factor():
    v = is_solution(P(f"2*({FR.text})"), FR.expression, FR.bounds)
    assert v.is_solution and v.mode == "ratio" and v.constant == pytest.approx(2.0)


def test_extra_variable_is_not_solution():
    v = is_solution(P(f"{FR.text} + x1"), FR.expression, FR.bounds)
    assert not v.is_solution and v.mode == "none"


def test_constant_model_rejected():
    v = is_solution(P("14.5"), FR.expression, FR.bounds)
    assert not v.is_solution and not v.nonconstant_model


def test_reflexive():
    v = is_solution(FR.expression, FR.expression, FR.bounds)
    assert v.is_solution and v.mode == "difference" and v.constant == 0.0


def test_unrelated_model():
    assert not is_solution(P("x1*x2*x3"), FR.expression, FR.bounds).is_solution


def test_numeric_difference_path():
    # not caught by the structural pass: sin^2 + cos^2 = 1
    eq = get_equation("sum-product")
    f = parse_expression("x1 + x2*x3 + sin(x1)**2 + cos(x1)**2", list(eq.variables))
    v = is_solution(f, eq.expression, eq.bounds)
    assert v.mode == "difference" and v.constant == pytest.approx(1.0)


def test_ratio_ignores_zeros_of_truth():
    eq = get_equation("sum-product")
    f = parse_expression("-0.5*(x1 + x2*x3)", list(eq.variables))
    v = is_solution(f, eq.expression, eq.bounds)
    assert v.mode == "ratio" and v.constant == pytest.approx(-0.5)


def test_no_defined_points():
    with pytest.raises(ValueError):
        is_solution(P("log(-1 - x1)"), FR.expression, FR.bounds)


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50).filter(lambda b: abs(b) > 1e-3))
def test_scale_covariance(b):
    v = is_solution(P(f"{b!r}*({FR.text})"), FR.expression, FR.bounds)
    assert v.is_solution
    assert v.constant == pytest.approx(b)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["x1", "0.001*x2", "1e-5*x3**2", "1e-8*x4"]), st.floats(1e-9, 1e-2))
def test_shrinking_tol_is_monotone(extra, tol):
    f = P(f"{FR.text} + {extra}")
    loose = is_solution(f, FR.expression, FR.bounds, tol=tol)
    tight = is_solution(f, FR.expression, FR.bounds, tol=tol / 10)
    assert loose.is_solution or not tight.is_solution


# feature_usage -----------------------------------------------------------

def test_usage_oracle():
    u = feature_usage(FR.expression, range(5), 100)
    assert (u.TPR, u.FPR, u.FNR) == (1.0, 0.0, 0.0)


def test_usage_empty():
    u = feature_usage(P("3"), range(5), 10)
    assert u.FNR == 1.0 and u.FPR == 0.0


def test_usage_counts():
    u = feature_usage({0, 1, 2, 6}, range(4), 204)
    assert (u.TP, u.FP, u.FN, u.TN) == (3, 1, 1, 199)
    assert u.TPR == 0.75 and u.FNR == 0.25 and u.FPR == 1 / 200


def test_usage_ignores_cancelled_variables():
    u = feature_usage(P("x1 + 0*x5"), {0, 4}, 5)
    assert (u.TP, u.FN) == (1, 1)


def test_usage_out_of_range():
    with pytest.raises(ValueError):
        feature_usage({7}, {0}, 5)


@given(st.integers(1, 60).flatmap(lambda p: st.tuples(
    st.just(p), st.sets(st.integers(0, p - 1)), st.sets(st.integers(0, p - 1)))))
def test_usage_identities(case):
    p, used, S0 = case
    u = feature_usage(used, S0, p)
    assert u.TP + u.FN == len(S0)
    assert u.FP + u.TN == p - len(S0)
    assert all(0 <= r <= 1 for r in (u.TPR, u.FPR, u.FNR))
