import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit, gammaincc

from boltzspec import quadrature as q


def test_zero_integrand_is_exactly_zero():
    res = q.integrate_semi_infinite(lambda x: np.zeros_like(x))
    assert res.value == 0.0
    assert res.error_estimate == 0.0


@pytest.mark.parametrize("k", range(0, 13))
def test_gamma_moments(k):
    res = q.integrate_semi_infinite(lambda x: x**k * np.exp(-x), rel_tol=1e-14, abs_tol=1e-300,
                                    decay_rate=1.0, poly_degree=k)
    assert res.value == pytest.approx(math.factorial(k), rel=1e-13)


@pytest.mark.parametrize("power", [2, 3])
def test_fermi_dirac_moments_match_zeta(power):
    # int x^s/(e^x+1) = (1 - 2^-s) s! zeta(s+1)
    exact = float((1 - mpmath.mpf(2) ** -power) * mpmath.factorial(power) * mpmath.zeta(power + 1))
    res = q.integrate_semi_infinite(lambda x: x**power * expit(-x), rel_tol=1e-14, abs_tol=1e-300,
                                    decay_rate=1.0, poly_degree=power)
    assert res.value == pytest.approx(exact, rel=1e-14)


def test_closed_forms_of_lowest_fermi_moments():
    res2 = q.integrate_semi_infinite(lambda x: x**2 * expit(-x), rel_tol=1e-14, abs_tol=1e-300)
    res3 = q.integrate_semi_infinite(lambda x: x**3 * expit(-x), rel_tol=1e-14, abs_tol=1e-300)
    assert res2.value == pytest.approx(1.5 * float(mpmath.zeta(3)), rel=1e-14)
    assert res3.value == pytest.approx(7 * math.pi**4 / 120, rel=1e-14)


def test_tail_cutoff_pure_exponential():
    # int_L^inf e^-x dx = e^-L
    assert q.tail_cutoff(1.0, 0, math.exp(-40.0)) == pytest.approx(40.0, rel=1e-10)


@pytest.mark.parametrize("deg,tol", [(3, 1e-16), (3, 1e-8), (6, 1e-12), (12, 1e-14)])
def test_tail_cutoff_bounds_incomplete_gamma(deg, tol):
    L = q.tail_cutoff(1.0, deg, tol)
    tail = gammaincc(deg + 1, L) * math.gamma(deg + 1)
    assert tail <= tol * (1 + 1e-8)
    assert tail > 0.5 * tol  # not wastefully far out


def test_tail_cutoff_scales_with_rate():
    assert q.tail_cutoff(0.5, 0, math.exp(-40.0) / 0.5) == pytest.approx(80.0, rel=1e-10)


def test_non_finite_integrand_raises():
    with pytest.raises(q.NonFiniteIntegrand):
        q.integrate_interval(lambda x: np.where(x > 0.5, np.nan, x), 0.0, 1.0)


def test_panel_budget_exhaustion_raises():
    with pytest.raises(q.NonConvergence):
        q.integrate_interval(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, rel_tol=1e-15, abs_tol=1e-300,
                             max_panels=8)


@given(coeffs=st.lists(st.floats(-10, 10), min_size=1, max_size=30),
       lo=st.floats(-5, 5), width=st.floats(0.1, 10))
@settings(max_examples=60, deadline=None)
def test_composite_rule_integrates_polynomials_exactly(coeffs, lo, width):
    hi = lo + width
    poly = np.polynomial.Polynomial(coeffs)
    anti = poly.integ()
    rule = q.CompositeRule.from_edges(np.linspace(lo, hi, 3), order=20)
    exact = anti(hi) - anti(lo)
    scale = sum(abs(c) * max(abs(lo), abs(hi)) ** k for k, c in enumerate(coeffs)) * width + 1e-300
    assert abs(rule.integrate(poly(rule.nodes)) - exact) <= 1e-13 * scale


@given(rate=st.floats(0.2, 3.0), k=st.integers(0, 8))
@settings(max_examples=40, deadline=None)
def test_semi_infinite_scaled_gamma(rate, k):
    res = q.integrate_semi_infinite(lambda x: x**k * np.exp(-rate * x), rel_tol=1e-13, abs_tol=1e-300,
                                    decay_rate=rate, poly_degree=k)
    assert res.value == pytest.approx(math.factorial(k) / rate ** (k + 1), rel=1e-12)


def test_vector_valued_integrands():
    res = q.integrate_interval(lambda x: np.vstack([x, x**2, np.cos(x)]), 0.0, 2.0)
    np.testing.assert_allclose(res.value, [2.0, 8.0 / 3.0, math.sin(2.0)], rtol=1e-13)


def test_adapted_rule_integrates_related_functions():
    rule = q.adapted_rule(lambda z: z**4 * np.exp(-z), 0.0, 60.0)
    assert rule.integrate(rule.nodes**3 * np.exp(-rule.nodes)) == pytest.approx(6.0, rel=1e-13)
