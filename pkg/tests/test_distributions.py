"""Tests for the depth laws and their moments."""

import math
from functools import partial

import numpy as np
import pytest

from genea.core.distributions import (
    ZETA_2,
    c_theta,
    c_theta_inv,
    c_theta_prime_abs,
    integral_h_c,
    mean_zeta_star,
    mean_zeta_star_closed_form,
    mean_zeta_star_expansion,
    phi,
    psi,
    sample_zeta_star,
    sample_zeta_star_conditioned,
    second_moment_zeta_star,
    second_moment_zeta_star_expansion,
    zeta_star_cdf,
    zeta_star_conditioned_cdf,
    zeta_star_conditioned_from_uniform,
    zeta_star_from_uniform,
)
from genea.core.params import BranchingParams, RngStream
from genea.exceptions import DegenerateThetaError, ParameterError
from genea.harness.verdicts import ks_one_sample, ks_two_sample, moment_test


@pytest.fixture
def params():
    return BranchingParams(1.0, 1.0)


def test_params_validation():
    with pytest.raises(ParameterError, match="beta"):
        BranchingParams(0.0, 1.0)
    with pytest.raises(ParameterError, match="theta"):
        BranchingParams(1.0, -1.0)
    with pytest.raises(DegenerateThetaError, match="theta > 0"):
        BranchingParams(1.0, 0.0).require_finite_population("sampling")


def test_psi(params):
    assert psi(params, 1.0) == 3.0
    assert psi(params, 0.0) == 0.0


def test_c_theta_critical_case():
    """theta = 0 gives the critical tail 1/(beta h)."""
    assert c_theta(BranchingParams(2.0, 0.0), 0.25) == pytest.approx(2.0)


def test_c_theta_values(params):
    assert c_theta(params, 1.0) == pytest.approx(2.0 / (math.e**2 - 1.0))
    grid = np.linspace(1e-3, 10.0, 200)
    values = c_theta(params, grid)
    assert np.all(np.diff(values) < 0)
    np.testing.assert_allclose(c_theta_inv(params, values), grid, rtol=1e-12)


def test_c_theta_where_exp_2h_is_three(params):
    h = math.log(3.0) / 2.0
    assert c_theta(params, h) == pytest.approx(1.0, rel=1e-12)
    assert c_theta_prime_abs(params, h) == pytest.approx(3.0, rel=1e-12)
    assert c_theta_inv(params, 1.0) == pytest.approx(h, rel=1e-12)


def test_c_theta_large_h_does_not_overflow(params):
    assert c_theta(params, 1e4) == 0.0


def test_c_theta_prime_matches_finite_differences(params):
    h, step = 0.7, 1e-5
    numeric = (c_theta(params, h - step) - c_theta(params, h + step)) / (2 * step)
    assert c_theta_prime_abs(params, h) == pytest.approx(numeric, rel=1e-8)


def test_inverse_transform_inverts_cdf(params):
    u = np.array([1e-12, 0.1, 0.5, 0.9, 1.0 - 1e-12])
    h = zeta_star_from_uniform(params, 0.3, u)
    np.testing.assert_allclose(zeta_star_cdf(params, 0.3, h), u, rtol=1e-9)


def test_conditioned_inverse_never_exceeds_hmax(params):
    u = np.array([1e-300, 1e-9, 0.5, 1.0 - 1e-16])
    h = zeta_star_conditioned_from_uniform(params, 2.0, 0.4, u)
    assert np.all(h <= 0.4)
    assert h[-1] == pytest.approx(0.4)


def test_sample_rejects_bad_input(params):
    rng = RngStream(1)
    with pytest.raises(ParameterError, match="delta"):
        sample_zeta_star(params, 0.0, rng)
    with pytest.raises(DegenerateThetaError):
        sample_zeta_star(BranchingParams(1.0, 0.0), 1.0, rng)


def test_sample_array_delta_gives_one_draw_per_entry(params):
    draws = sample_zeta_star(params, np.array([0.1, 1.0, 10.0]), RngStream(2))
    assert draws.shape == (3,)
    assert isinstance(sample_zeta_star(params, 1.0, RngStream(2)), float)


def test_sample_law_ks(params):
    draws = sample_zeta_star(params, 0.5, RngStream(11), size=20_000)
    verdict = ks_one_sample(draws, partial(zeta_star_cdf, params, 0.5), alpha=0.001)
    assert verdict.passed


def test_conditioned_law_and_rejection(params):
    """Inverse transform and rejection sampling agree in law."""
    rng = RngStream(12)
    draws = sample_zeta_star_conditioned(params, 2.0, 1.0, rng.child(0), size=10_000)
    assert np.all(draws <= 1.0)
    cdf = partial(zeta_star_conditioned_cdf, params, 2.0, 1.0)
    assert ks_one_sample(draws, cdf, alpha=0.001).passed
    pool = sample_zeta_star(params, 2.0, rng.child(1), size=40_000)
    rejected = pool[pool <= 1.0]
    assert ks_two_sample(draws, rejected, alpha=0.001).passed


def test_mean_expansion_small_delta(params):
    delta = 1e-3
    x = 2 * params.theta * delta
    bound = delta / params.beta * x * (abs(math.log(x)) + 2)
    error = mean_zeta_star(params, delta) - mean_zeta_star_expansion(params, delta)
    assert abs(error) <= bound


def test_second_moment_expansion_small_delta(params):
    delta = 1e-3
    x = 2 * params.theta * delta
    bound = delta / (params.beta**2 * params.theta) * x * (abs(math.log(x)) + 2)
    exact = second_moment_zeta_star(params, delta)
    assert abs(exact - second_moment_zeta_star_expansion(params, delta)) <= bound


def test_second_moment_dominates_squared_mean(params):
    for delta in (1e-3, 0.1, 1.0, 10.0):
        mean = mean_zeta_star(params, delta)
        assert second_moment_zeta_star(params, delta) >= mean**2


def test_mean_tends_to_zero(params):
    assert mean_zeta_star(params, 1e-9) < 1e-6


@pytest.mark.parametrize("delta", [1e-4, 1e-2, 0.4, 0.6, 3.0, 24.0, 30.0, 100.0])
def test_closed_form_mean_matches_quadrature(params, delta):
    exact = mean_zeta_star(params, delta)
    assert mean_zeta_star_closed_form(params, delta) == pytest.approx(exact, rel=1e-7)


def test_closed_form_mean_is_vectorized():
    params = BranchingParams(0.5, 2.0)
    deltas = np.array([[1e-3, 0.2], [5.0, 40.0]])
    values = mean_zeta_star_closed_form(params, deltas)
    assert values.shape == (2, 2)
    expected = [mean_zeta_star(params, d) for d in deltas.ravel()]
    np.testing.assert_allclose(values.ravel(), expected, rtol=1e-7)


def test_monte_carlo_moments(params):
    draws = sample_zeta_star(params, 0.2, RngStream(13), size=200_000)
    assert moment_test(draws, mean_zeta_star(params, 0.2), k_sigma=5).passed
    assert moment_test(draws**2, second_moment_zeta_star(params, 0.2), k_sigma=5).passed


@pytest.mark.parametrize("beta,theta", [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)])
def test_integral_h_c_identity(beta, theta):
    params = BranchingParams(beta, theta)
    assert 2 * beta**2 * theta * integral_h_c(params) == pytest.approx(ZETA_2, abs=1e-6)


def test_integral_h_c_scaling():
    reference = integral_h_c(BranchingParams(1.0, 1.0))
    scaled = integral_h_c(BranchingParams(2.0, 0.5))
    assert scaled == pytest.approx(reference / (4.0 * 0.5), rel=1e-9)


def test_integral_h_c_against_riemann_sum(params):
    # midpoint rule on (0, 50]
    h = (np.arange(500_000) + 0.5) * 1e-4
    riemann = float(np.sum(h * c_theta(params, h)) * 1e-4)
    assert integral_h_c(params) == pytest.approx(riemann, abs=1e-5)


@pytest.mark.parametrize("lam,expected", [(1, 1.0), (2, 3.0), (3, 5.5), (0.5, None)])
def test_phi(lam, expected):
    if expected is None:
        # phi(1/2) = (1/2) (2 - 2 log 2)
        expected = 1.0 - math.log(2.0)
    assert phi(lam) == pytest.approx(expected, abs=1e-8)


def test_phi_rejects_nonpositive():
    with pytest.raises(ParameterError):
        phi(0.0)
