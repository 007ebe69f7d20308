#!/usr/bin/env python3
"""
Tests for the working likelihood, its score, the block-wise fit and the
plug-in covariance.
"""

import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mdingarch.core.exceptions import DegenerateDataError, ParameterDomainError  # noqa: E402
from mdingarch.estimation.covariance import (  # noqa: E402
    covariance_blocks,
    hessian_approximation,
    sigma_from_blocks,
)
from mdingarch.estimation.dispersion import estimate_dispersion  # noqa: E402
from mdingarch.estimation.qmle import (  # noqa: E402
    CovarianceBlocks,
    FitOptions,
    fit,
    log_constants,
    loglik_terms,
    quasi_loglik,
    refilter,
    score,
    score_terms,
    validate_for_fit,
)
from mdingarch.models.filtering import FilterPath, filter  # noqa: E402
from mdingarch.models.parameters import InitPolicy, ModelOrder, SeriesZ, Side, Theta  # noqa: E402
from mdingarch.models.simulation import preset, simulate  # noqa: E402


def test_loglik_terms_hand_values():
    path = FilterPath(pi=np.array([0.5, 0.5]), lam1=np.array([1.0, 1.0]), lam2=np.array([2.0, 2.0]))
    terms = loglik_terms(SeriesZ.from_values([0, -1]), path)
    assert_allclose(terms, [math.log(0.5) - 1.0, math.log(0.5) - 2.0])


def test_log_constants_hand_values():
    assert_allclose(log_constants(np.array([3, 0, -1, -3])),
                    [-math.log(6.0), 0.0, 1.0, 1.0 - math.log(2.0)])


def test_full_loglik_is_a_proper_log_probability():
    """With constants the terms are log pmf values of the mixed Poisson law."""
    path = FilterPath(pi=np.array([0.3]), lam1=np.array([2.0]), lam2=np.array([3.5]))
    y = -2
    expected = math.log(0.7) + (-(2.5) + math.log(2.5))
    assert_allclose(loglik_terms(SeriesZ.from_values([y]), path, include_constants=True), [expected])


@pytest.mark.parametrize("init", [InitPolicy.STATIONARY, InitPolicy.SAMPLE_MEAN])
def test_score_matches_finite_differences(short_series, reference_theta, init):
    analytic = score(short_series, reference_theta, init)
    vector = reference_theta.vector()
    step = 1e-6
    numeric = np.empty_like(vector)
    for i in range(vector.size):
        up, down = vector.copy(), vector.copy()
        up[i] += step
        down[i] -= step
        numeric[i] = (
            quasi_loglik(short_series, Theta.from_vector(up, reference_theta.order), init)
            - quasi_loglik(short_series, Theta.from_vector(down, reference_theta.order), init)
        ) / (2 * step)
    assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)


def test_score_terms_need_gradients(short_series, reference_theta):
    path = filter(short_series, reference_theta, with_gradients=False)
    with pytest.raises(ParameterDomainError):
        score_terms(short_series, path)


def test_fit_recovers_the_generating_parameters(poisson_fit, reference_theta):
    assert poisson_fit.n == 1500
    assert poisson_fit.converged
    assert not poisson_fit.singular_blocks
    error = np.abs(poisson_fit.theta_hat.vector() - reference_theta.vector())
    assert np.all(np.isfinite(poisson_fit.se)) and np.all(poisson_fit.se > 0)
    assert np.all(error <= 5.0 * poisson_fit.se + 0.02)


def test_fit_maximises_the_working_likelihood(poisson_series, poisson_fit, reference_theta):
    assert poisson_fit.loglik >= quasi_loglik(poisson_series, reference_theta) - 1e-9
    assert_allclose(poisson_fit.loglik, quasi_loglik(poisson_series, poisson_fit.theta_hat), rtol=1e-12)
    assert np.max(np.abs(score(poisson_series, poisson_fit.theta_hat))) < 1e-3


def test_information_criteria(poisson_fit):
    n, d = poisson_fit.n, poisson_fit.d
    assert d == 9
    assert_allclose(poisson_fit.aic, -2.0 * n * poisson_fit.loglik_full + 2.0 * d)
    assert_allclose(poisson_fit.bic, -2.0 * n * poisson_fit.loglik_full + d * math.log(n))
    assert poisson_fit.loglik_full < poisson_fit.loglik + 1.0


def test_persistence_summaries(poisson_fit):
    theta = poisson_fit.theta_hat
    assert_allclose(poisson_fit.persistence_pos, theta.psi1.alpha[0] + theta.psi1.beta[0])
    assert_allclose(poisson_fit.sign_persistence, theta.phi.a + theta.phi.b)
    assert poisson_fit.stationarity().sufficient


def test_covariance_blocks_are_symmetric_and_definite(poisson_series, poisson_fit):
    blocks = poisson_fit.cov_blocks
    for matrix in (blocks.Pi_hat, blocks.J1_hat, blocks.I1_hat, blocks.J2_hat, blocks.I2_hat):
        assert_allclose(matrix, matrix.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(blocks.Pi_hat) > 0)
    assert np.all(np.linalg.eigvalsh(blocks.J1_hat) > 0)
    # J2 carries -(Y + 1) >= 0 on the negative side
    assert np.all(np.linalg.eigvalsh(blocks.J2_hat) > 0)

    sigma = poisson_fit.sigma_hat
    assert_allclose(sigma[:3, 3:], 0.0)
    assert_allclose(sigma[3:6, 6:], 0.0)
    assert_allclose(poisson_fit.se, np.sqrt(np.diag(sigma) / poisson_fit.n))

    recomputed = covariance_blocks(poisson_series, refilter(poisson_series, poisson_fit))
    assert_allclose(recomputed.J1_hat, blocks.J1_hat)


def test_sigma_marks_singular_blocks():
    blocks = CovarianceBlocks(
        Pi_hat=np.eye(3), J1_hat=np.zeros((3, 3)), I1_hat=np.eye(3),
        J2_hat=np.eye(3), I2_hat=2.0 * np.eye(3),
    )
    sigma, singular = sigma_from_blocks(blocks, ModelOrder(1, 1))
    assert singular == ("psi1",)
    assert np.all(np.isnan(sigma[3:6, 3:6]))
    assert_allclose(sigma[6:, 6:], 2.0 * np.eye(3))
    assert_allclose(sigma[:3, :3], np.eye(3))


def test_hessian_approximation_is_block_diagonal():
    blocks = CovarianceBlocks(
        Pi_hat=np.full((3, 3), 1.0), J1_hat=np.full((3, 3), 2.0), I1_hat=np.eye(3),
        J2_hat=np.full((3, 3), 3.0), I2_hat=np.eye(3),
    )
    j = hessian_approximation(blocks, ModelOrder(1, 1))
    assert_allclose(j[3:6, 3:6], 2.0)
    assert_allclose(j[:3, 3:], 0.0)


def test_fit_is_identical_across_thread_counts(short_series, short_fit):
    threaded = fit(short_series, ModelOrder(1, 1), FitOptions(n_starts=2, threads=3))
    assert_allclose(threaded.theta_hat.vector(), short_fit.theta_hat.vector(), rtol=1e-12)


def test_fit_without_covariance(short_series):
    report = fit(short_series, ModelOrder(1, 1), FitOptions(n_starts=1, compute_covariance=False))
    assert report.se is None and report.sigma_hat is None


def test_validate_for_fit():
    with pytest.raises(DegenerateDataError):
        validate_for_fit(SeriesZ.from_values([1, -1] * 40), ModelOrder(1, 1))
    with pytest.raises(DegenerateDataError):
        validate_for_fit(SeriesZ.from_values([1, 0] * 100), ModelOrder(1, 1))
    validate_for_fit(SeriesZ.from_values([1, -1] * 45), ModelOrder(1, 1))


@pytest.mark.parametrize("kwargs", [
    {"tol": 0.0},
    {"n_starts": 0},
    {"n_starts": 99},
    {"alpha_cap": 1.0},
    {"omega_cap_factor": 1.0},
])
def test_fit_options_validation(kwargs):
    with pytest.raises(ParameterDomainError):
        FitOptions(**kwargs)


def test_dispersion_on_poisson_data_is_large(poisson_series, poisson_fit):
    estimates = estimate_dispersion(poisson_series, poisson_fit)
    assert estimates.r1_infinite or estimates.r1_hat > 2.0
    assert estimates.r2_infinite or estimates.r2_hat > 2.0


def test_dispersion_on_negative_binomial_data_is_finite():
    series = simulate(preset("nb"), 3000, burn_in=300, rng=np.random.default_rng(17))
    report = fit(series, ModelOrder(1, 1), FitOptions(n_starts=2, compute_covariance=False))
    estimates = estimate_dispersion(series, report)
    assert not estimates.r1_infinite and not estimates.r2_infinite
    assert 0.0 < estimates.r1_hat < 20.0
    assert 0.0 < estimates.r2_hat < 20.0


def test_negative_side_objective_uses_the_floored_intensity(monkeypatch):
    from mdingarch.estimation import qmle

    y = np.array([-2, 3, -1, 0, -4])
    floor = 1e-10
    monkeypatch.setattr(qmle, "intensity_filter",
                        lambda abs_y, *args, **kwargs: (np.full(abs_y.size, 0.5), np.zeros((abs_y.size, 3))))
    value, grad, _ = qmle._psi_objective(np.array([1.0, 0.3, 0.3]), y, np.abs(y).astype(float),
                                         ModelOrder(1, 1), Side.NEGATIVE, InitPolicy.STATIONARY)

    # below one the intensity sits at 1 + floor, so the path matches the filter guards
    lam = 1.0 + floor
    expected = np.where(y < 0, -lam - (y + 1.0) * math.log(lam - 1.0), 0.0)
    assert_allclose(value, -np.mean(expected), rtol=1e-12)
    path = FilterPath(pi=np.full(y.size, 0.5), lam1=np.full(y.size, 1.0), lam2=np.full(y.size, lam))
    negative = loglik_terms(SeriesZ.from_values(y.tolist()), path) - np.where(y < 0, math.log(0.5), 0.0)
    assert_allclose(value, -np.mean(np.where(y < 0, negative, 0.0)), rtol=1e-9)
    assert_allclose(grad, 0.0)
