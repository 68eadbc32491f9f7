import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltzspec import quadrature
from boltzspec.basis import (
    LossOfOrthogonality,
    WeightFamily,
    build_basis,
    chem_eq_norm_diverges,
    chem_eq_norm_integrand,
    eval_poly_derivs,
    eval_polys,
    expand_function,
    gauss_rule,
    measure_rule,
    partial_sum,
)
from boltzspec.noneq import noneq_basis

from oracles import stieltjes_complex

UPSILONS = [0.1, 0.5, 1.0, 1.5, 5.0]
ZETA3 = float(mpmath.zeta(3))


def _gram_dev(table):
    return np.abs(table.gram() - np.eye(table.n_modes + 1)).max()


@pytest.mark.parametrize("upsilon", UPSILONS)
def test_noneq_family_orthonormal(upsilon):
    assert _gram_dev(noneq_basis(upsilon, 9)) < 1e-12


def test_chemeq_family_orthonormal():
    assert _gram_dev(build_basis(WeightFamily.chem_eq(), 9)) < 1e-12


@pytest.mark.parametrize("upsilon", UPSILONS)
def test_gram_by_independent_adaptive_quadrature(upsilon):
    table = noneq_basis(upsilon, 9)
    w = table.weight.w

    def g(z):
        P = eval_polys(table, z)
        return (P[:, None, :] * P[None, :, :] * w(z)).reshape(-1, np.size(z))

    res = quadrature.integrate_semi_infinite(g, rel_tol=1e-13, abs_tol=1e-14, decay_rate=1.0, poly_degree=20)
    G = np.asarray(res.value).reshape(10, 10)
    assert np.abs(G - np.eye(10)).max() < 1e-12


@pytest.mark.parametrize("upsilon", UPSILONS)
def test_recurrence_matches_gauss_laguerre_stieltjes(upsilon):
    table = noneq_basis(upsilon, 9)
    _, _, _, (p0, alphas, betas) = stieltjes_complex(complex(upsilon), 9)
    np.testing.assert_allclose(table.alphas, alphas.real, rtol=1e-13)
    np.testing.assert_allclose(table.betas[1:], betas.real[1:], rtol=1e-13)
    assert 1.0 / table.norms[0] == pytest.approx(p0.real, rel=1e-13)


def test_laguerre_power_two_closed_form():
    # generalized Laguerre with alpha = 2: alpha_n = 2n + 3, beta_n^2 = n (n + 2)
    table = build_basis(WeightFamily.laguerre(2), 10)
    n = np.arange(11)
    np.testing.assert_allclose(table.alphas, 2 * n + 3, rtol=1e-13)
    np.testing.assert_allclose(table.betas[1:], np.sqrt(n[1:] * (n[1:] + 2)), rtol=1e-13)
    assert table.mass == pytest.approx(2.0, rel=1e-14)


def test_laguerre_power_zero_closed_form():
    table = build_basis(WeightFamily.laguerre(0), 10)
    n = np.arange(11)
    np.testing.assert_allclose(table.alphas, 2 * n + 1, rtol=1e-13)
    np.testing.assert_allclose(table.betas[1:], n[1:], rtol=1e-13)


def test_laguerre_limit_small_fugacity():
    assert noneq_basis(1e-6, 3).alphas[0] == pytest.approx(3.0, abs=1e-5)
    # and the whole recurrence approaches the alpha = 2 Laguerre one
    table = noneq_basis(1e-8, 6)
    n = np.arange(7)
    np.testing.assert_allclose(table.alphas, 2 * n + 3, atol=1e-6)


def test_known_masses():
    assert build_basis(WeightFamily.chem_eq(), 2).mass == pytest.approx(math.log(2.0), rel=1e-14)
    assert build_basis(WeightFamily.chem_eq(), 2).alphas[0] == pytest.approx(math.pi**2 / 12 / math.log(2.0),
                                                                               rel=1e-14)
    t = noneq_basis(1.0, 2)
    assert t.mass == pytest.approx(1.5 * ZETA3, rel=1e-14)
    assert t.alphas[0] == pytest.approx(7 * math.pi**4 / 120 / (1.5 * ZETA3), rel=1e-14)


@pytest.mark.parametrize("upsilon", UPSILONS)
def test_derivative_recursion_against_finite_differences(upsilon):
    table = noneq_basis(upsilon, 9)
    z = np.linspace(0.05, 25.0, 40)
    h = 1e-5
    fd = (eval_polys(table, z + h) - eval_polys(table, z - h)) / (2 * h)
    exact = eval_poly_derivs(table, z)
    scale = np.abs(eval_polys(table, z)).max(axis=1, keepdims=True)
    assert (np.abs(fd - exact) / scale).max() < 1e-7


@pytest.mark.parametrize("upsilon", UPSILONS)
def test_derivative_expansion_coefficients(upsilon):
    table = noneq_basis(upsilon, 9)
    z = np.linspace(0.0, 30.0, 25)
    np.testing.assert_allclose(table.deriv_coeffs @ eval_polys(table, z), eval_poly_derivs(table, z),
                               atol=1e-11 * np.abs(eval_poly_derivs(table, z)).max())


def test_derivative_coefficients_are_strictly_lower_triangular():
    a = noneq_basis(0.7, 8).deriv_coeffs
    assert np.all(np.triu(a) == 0.0)


@pytest.mark.parametrize("upsilon", UPSILONS)
def test_fugacity_diagonal_against_finite_differences(upsilon):
    h = 1e-4 * upsilon
    mid, lo, hi = (noneq_basis(u, 9) for u in (upsilon, upsilon - h, upsilon + h))
    dP = (hi.node_values - lo.node_values) / (2 * h)
    fd = np.einsum("ij,j,ij->i", mid.node_values, mid.rule_weights, dP)
    assert np.abs(fd - mid.upsilon_diag).max() < 1e-6


@pytest.mark.parametrize("upsilon", UPSILONS)
def test_fugacity_diagonal_against_complex_step(upsilon):
    _, W, P, _ = stieltjes_complex(complex(upsilon), 9)
    _, _, Ph, _ = stieltjes_complex(complex(upsilon, 1e-30), 9)
    exact = np.einsum("ij,j,ij->i", P.real, W.real, Ph.imag / 1e-30)
    np.testing.assert_allclose(noneq_basis(upsilon, 9).upsilon_diag, exact, atol=1e-13)


def test_gauss_rule_reproduces_moments():
    table = noneq_basis(0.8, 9)
    nodes, weights = gauss_rule(table, 6)
    z = table.rule.nodes
    for k in range(12):  # exact up to degree 2 * 6 - 1
        assert weights @ nodes**k == pytest.approx(table.rule_weights @ z**k, rel=1e-12)


def test_expand_function_recovers_polynomial():
    table = noneq_basis(1.3, 6)
    coeffs = np.array([0.4, -1.2, 0.3, 0.05])
    g = lambda z: partial_sum(table, coeffs, z)  # noqa: E731
    got = expand_function(table, g, n_modes=7)
    np.testing.assert_allclose(got, np.concatenate([coeffs, np.zeros(3)]), atol=1e-12)


def test_coarse_rule_raises_loss_of_orthogonality():
    rule = quadrature.CompositeRule.from_edges(np.array([0.0, 8.0]), order=4)
    with pytest.raises(LossOfOrthogonality):
        build_basis(WeightFamily.non_eq(1.0), 10, rule=rule)


def test_invalid_fugacity():
    with pytest.raises(ValueError):
        WeightFamily.non_eq(0.0)


def test_norm_divergence_threshold():
    assert not chem_eq_norm_diverges(1.99)
    assert chem_eq_norm_diverges(2.0)
    # the integrand tends to Y^2 for R = 2 instead of decaying
    assert chem_eq_norm_integrand(200.0, 1.0, 2.0) == pytest.approx(1.0, rel=1e-12)


@given(log_u=st.floats(math.log(0.02), math.log(30.0)))
@settings(max_examples=25, deadline=None)
def test_orthonormal_for_random_fugacity(log_u):
    assert _gram_dev(noneq_basis(math.exp(log_u), 9)) < 1e-12


@given(u1=st.floats(0.01, 20.0), u2=st.floats(0.01, 20.0))
@settings(max_examples=25, deadline=None)
def test_mean_momentum_grows_with_fugacity(u1, u2):
    lo, hi = sorted((u1, u2))
    assert noneq_basis(lo, 1).alphas[0] <= noneq_basis(hi, 1).alphas[0] + 1e-14
    assert noneq_basis(lo, 1).alphas[0] >= 3.0 - 1e-14


@given(degree=st.integers(1, 12))
@settings(max_examples=12, deadline=None)
def test_rule_values_match_recurrence(degree):
    table = build_basis(WeightFamily.non_eq(0.6), degree, rule=measure_rule(2 * degree + 4))
    np.testing.assert_allclose(eval_polys(table, table.rule.nodes), table.node_values, rtol=1e-12, atol=1e-12)
