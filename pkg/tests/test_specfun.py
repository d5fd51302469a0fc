import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaylink.errors import InvalidParameterError, QuadratureError
from relaylink.specfun import (bessel_k_int, gamma_int, gauss_2f1_family, integrate_semi_infinite,
                               q_regularized, scaled_k_orders, upper_inc_gamma_int)

from oracles import bessel_k_integral, composite_reference, f21_euler, upper_gamma_integral

# frozen from the integral-representation and Euler-integral oracles
K0_AT_1 = 0.42102443824070833
K1_AT_1 = 0.60190723019723457
UPPER_GAMMA_3_15 = 1.6176936610761163
F21_4_2_17 = 0.07959491269962235
QUAD_ESSENTIAL = 0.27973176363304485


def test_gamma_int_values():
    assert gamma_int(1) == 1
    assert gamma_int(4) == 6
    assert gamma_int(10) == 362880


def test_gamma_int_range():
    assert math.isfinite(gamma_int(170))
    with pytest.raises(OverflowError):
        gamma_int(200)
    with pytest.raises(InvalidParameterError):
        gamma_int(0)


def test_upper_inc_gamma_values():
    assert upper_inc_gamma_int(4, 0) == pytest.approx(6.0, rel=1e-15)
    assert upper_inc_gamma_int(1, 2.0) == pytest.approx(math.exp(-2), rel=1e-15)
    assert upper_inc_gamma_int(3, 1.5) == pytest.approx(UPPER_GAMMA_3_15, rel=1e-13)


def test_upper_inc_gamma_oracle():
    assert upper_gamma_integral(3, 1.5) == pytest.approx(UPPER_GAMMA_3_15, rel=1e-12)


@given(st.integers(1, 30), st.floats(0, 200))
def test_incomplete_gamma_split_stays_in_range(n, x):
    upper = upper_inc_gamma_int(n, x)
    lower = gamma_int(n) - upper
    assert 0 <= upper <= gamma_int(n) * (1 + 1e-14)
    assert -1e-12 * gamma_int(n) <= lower <= gamma_int(n)


def test_q_regularized_vectorized():
    x = np.array([0.0, 1.0, 5.0])
    out = q_regularized(3, x)
    assert out.shape == (3,)
    assert out[0] == 1.0


def test_bessel_symmetry_and_values():
    assert bessel_k_int(-2, 3.0) == bessel_k_int(2, 3.0)
    assert bessel_k_int(0, 1.0) == pytest.approx(K0_AT_1, rel=1e-14)
    assert bessel_k_int(1, 1.0) == pytest.approx(K1_AT_1, rel=1e-14)


def test_bessel_frozen_values_match_oracle():
    assert bessel_k_integral(0, 1.0) == pytest.approx(K0_AT_1, rel=1e-13)
    assert bessel_k_integral(1, 1.0) == pytest.approx(K1_AT_1, rel=1e-13)


def test_bessel_domain():
    with pytest.raises(InvalidParameterError):
        bessel_k_int(0, 0.0)
    with pytest.raises(InvalidParameterError):
        bessel_k_int(1, -1.0)


def test_bessel_underflows_to_zero():
    assert bessel_k_int(0, 800.0) == 0.0
    assert bessel_k_int(3, 800.0, scaled=True) > 0


@pytest.mark.parametrize("v", range(0, 21))
def test_bessel_accuracy_wide_range(v):
    xs = np.geomspace(1e-8, 700, 60)
    got = bessel_k_int(v, xs)
    for x, g in zip(xs, got):
        ref = mpmath.besselk(v, x)
        if ref > 1e300:
            continue
        assert g == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_bessel_recurrence(x):
    for v in range(1, 21):
        lhs = bessel_k_int(v + 1, x)
        rhs = bessel_k_int(v - 1, x) + 2 * v / x * bessel_k_int(v, x)
        assert lhs == pytest.approx(rhs, rel=1e-10)


@given(st.integers(0, 12), st.floats(0.01, 300), st.floats(1.001, 3))
def test_bessel_positive_decreasing(v, x, factor):
    a, b = bessel_k_int(v, x), bessel_k_int(v, x * factor)
    assert a > 0
    assert b <= a


def test_scaled_table_matches_definition():
    for y in (1e-6, 0.3, 5.0, 400.0):
        table = scaled_k_orders(8, y)
        for v, g in enumerate(table):
            ref = mpmath.mpf(y) ** (v / 2) * mpmath.besselk(v, 2 * mpmath.sqrt(y))
            assert g == pytest.approx(float(ref), rel=1e-13)


def test_scaled_table_far_tail_is_zero():
    assert all(g == 0.0 for g in scaled_k_orders(5, 1e300))


def test_f21_examples():
    assert gauss_2f1_family(3, 2, 0.0) == 1.0
    assert gauss_2f1_family(2, 1, 3.0) == pytest.approx(0.25, rel=1e-14)
    assert gauss_2f1_family(4, 2, 1.7) == pytest.approx(F21_4_2_17, rel=1e-12)
    assert f21_euler(4, 2, 1.7) == pytest.approx(F21_4_2_17, rel=1e-12)


@pytest.mark.parametrize("a", [1, 2, 3, 4, 6])
@pytest.mark.parametrize("b", [1, 2, 3, 5, 6])
def test_f21_grid_against_euler_integral(a, b):
    for z in (0.1, 1.0, 10.0, 100.0, 1000.0):
        assert gauss_2f1_family(a, b, z) == pytest.approx(f21_euler(a, b, z), rel=1e-8)


def test_f21_large_a_uses_series_branch():
    for z in (0.5, 7.0, 300.0):
        assert gauss_2f1_family(15, 3, z) == pytest.approx(f21_euler(15, 3, z), rel=1e-10)


@given(st.integers(1, 10), st.integers(1, 10), st.floats(0, 1e4))
def test_f21_bounded_by_one(a, b, z):
    v = gauss_2f1_family(a, b, z)
    assert 0 < v <= 1.0 + 1e-14


def test_quadrature_reference_integrands():
    r = integrate_semi_infinite(lambda x: np.exp(-x))
    assert abs(r.value - 1.0) <= r.abs_error_estimate + 1e-15
    assert r.abs_error_estimate <= 1e-6
    r = integrate_semi_infinite(lambda x: x * np.exp(-x))
    assert abs(r.value - 1.0) <= max(r.abs_error_estimate, 1e-15)
    r = integrate_semi_infinite(lambda x: np.exp(-1.0 / x - x) / x ** 2)
    assert abs(r.value - QUAD_ESSENTIAL) <= max(r.abs_error_estimate, 1e-15)
    assert r.abs_error_estimate <= 1e-6
    assert 0 < r.evaluations <= 200_000


def test_quadrature_frozen_value_matches_composite_rule():
    # substitute x = t/(1-t) so the composite rule sees a smooth integrand on (0, 1)
    def mapped(t):
        t = np.clip(t, 1e-12, 1 - 1e-12)
        x = t / (1 - t)
        return np.exp(-1.0 / x - x) / x ** 2 / (1 - t) ** 2
    assert composite_reference(mapped, 0.0, 1.0) == pytest.approx(QUAD_ESSENTIAL, rel=1e-10)


def test_quadrature_budget_exhaustion_carries_estimate():
    with pytest.raises(QuadratureError) as info:
        integrate_semi_infinite(lambda x: np.sin(50 * x) * np.exp(-x / 1000), abs_tol=1e-14, budget=600)
    assert info.value.result is not None
    assert info.value.result.evaluations <= 600


def test_quadrature_rejects_nonfinite():
    with pytest.raises(QuadratureError):
        integrate_semi_infinite(lambda x: np.full_like(x, np.nan))


def test_quadrature_rejects_bad_tol():
    with pytest.raises(InvalidParameterError):
        integrate_semi_infinite(lambda x: np.exp(-x), abs_tol=0.0)
