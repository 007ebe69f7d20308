#!/usr/bin/env python3
"""
Tests for residuals, the portmanteau covariance and the random-weighting
bootstrap.
"""

import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mdingarch.core.exceptions import DegenerateDataError, ParameterDomainError  # noqa: E402
from mdingarch.core.parallel import replicate_generator, run_replicates  # noqa: E402
from mdingarch.diagnostics.bootstrap import WeightDistribution, draw_weights  # noqa: E402
from mdingarch.diagnostics.portmanteau import (  # noqa: E402
    VHatComponents,
    block_inverse,
    chi2_pvalue,
    goodness_of_fit,
    portmanteau_p1,
    portmanteau_statistic,
    v_from_components,
)
from mdingarch.diagnostics.residuals import (  # noqa: E402
    ResidualSeries,
    autocovariances,
    lag_matrix,
    residual_acf,
    residual_gradients,
    residual_values,
    residuals,
    residuals_at,
)
from mdingarch.models.filtering import filter  # noqa: E402
from mdingarch.models.parameters import InitPolicy, ModelOrder  # noqa: E402


def test_residual_hand_values():
    eps = residual_values(np.array([2, -2, 0]), np.array([1.5, 1.5, 0.25]), np.array([1.5, 1.5, 3.0]))
    assert_allclose(eps, [0.5, -0.5, -0.25])


def test_acf_of_constant_and_alternating_residuals():
    n = 20
    constant = ResidualSeries(eps=np.ones(n), gamma0_hat=1.0)
    assert_allclose(residual_acf(constant, 3), [(n - h) / n for h in (1, 2, 3)])

    alternating = ResidualSeries(eps=np.tile([1.0, -1.0], n // 2), gamma0_hat=1.0)
    assert_allclose(residual_acf(alternating, 2), [-(n - 1) / n, (n - 2) / n])


def test_acf_argument_checks():
    res = ResidualSeries(eps=np.ones(5), gamma0_hat=1.0)
    with pytest.raises(ParameterDomainError):
        residual_acf(res, 0)
    with pytest.raises(ParameterDomainError):
        residual_acf(res, 5)
    with pytest.raises(DegenerateDataError):
        residual_acf(ResidualSeries(eps=np.zeros(5), gamma0_hat=0.0), 2)


def test_lag_matrix_and_weighted_autocovariances():
    eps = np.array([1.0, 2.0, 3.0, 4.0])
    lags = lag_matrix(eps, 2)
    assert_allclose(lags, [[0, 0], [1, 0], [2, 1], [3, 2]])
    assert_allclose(autocovariances(eps, 2), [(2 + 6 + 12) / 4, (3 + 8) / 4])
    weights = np.array([0.0, 1.0, 2.0, 0.5])
    assert_allclose(autocovariances(eps, 1, weights), [(1 * 2 * 1 + 2 * 3 * 2 + 0.5 * 4 * 3) / 4])


def test_residual_gradients_match_finite_differences(short_series, reference_theta):
    init = InitPolicy.STATIONARY
    order = reference_theta.order
    path = filter(short_series, reference_theta, init)
    grads = residual_gradients(short_series, path)
    assert_allclose(grads[:, :3], 0.0)

    vector = reference_theta.vector()
    step = 1e-6
    for index in range(3, 9):
        up, down = vector.copy(), vector.copy()
        up[index] += step
        down[index] -= step
        numeric = (
            residuals_at(short_series, up[3:6], up[6:9], order, init)
            - residuals_at(short_series, down[3:6], down[6:9], order, init)
        ) / (2 * step)
        assert_allclose(grads[:, index], numeric, rtol=1e-5, atol=1e-6)


def test_residuals_at_the_fit_match_the_filter(short_series, short_fit):
    fitted = residuals(short_series, short_fit)
    theta = short_fit.theta_hat
    direct = residuals_at(short_series, theta.psi1.as_array(), theta.psi2.as_array(),
                          theta.order, short_fit.options.init)
    assert_allclose(direct, fitted.eps)
    assert_allclose(fitted.gamma0_hat, np.mean(fitted.eps ** 2))


def test_v_hat_without_estimation_effect_is_scaled_e():
    k, d = 3, 9
    e = np.array([[2.0, 0.1, 0.0], [0.1, 1.5, 0.2], [0.0, 0.2, 1.0]])
    parts = VHatComponents(E=e, D=np.zeros((k, d)), C=np.zeros((k, d)), J_inv=np.eye(d),
                           sigma=np.eye(d), gamma0=2.0)
    assert_allclose(v_from_components(parts), e / 4.0)


def test_v_hat_is_symmetric_with_estimation_effect(rng):
    k, d = 4, 9
    a = rng.normal(size=(k, k))
    parts = VHatComponents(E=a @ a.T, D=rng.normal(size=(k, d)), C=rng.normal(size=(k, d)),
                           J_inv=np.diag(rng.uniform(0.5, 2.0, d)), sigma=np.eye(d), gamma0=1.3)
    v = v_from_components(parts)
    assert_allclose(v, v.T)


def test_block_inverse_uses_pinv_on_singular_blocks():
    j = np.zeros((9, 9))
    j[:3, :3] = 2.0 * np.eye(3)
    j[6:, 6:] = 4.0 * np.eye(3)
    inv, singular = block_inverse(j, ModelOrder(1, 1))
    assert singular
    assert_allclose(inv[:3, :3], 0.5 * np.eye(3))
    assert_allclose(inv[3:6, 3:6], 0.0)
    assert_allclose(inv[6:, 6:], 0.25 * np.eye(3))


def test_chi_square_p_values():
    assert abs(chi2_pvalue(18.307, 10) - 0.05) < 1e-4
    assert chi2_pvalue(0.0, 10) == 1.0
    assert np.isnan(chi2_pvalue(float("nan"), 10))


def test_portmanteau_statistic_hand_value():
    rho = np.array([0.1, -0.2])
    stat, pseudo = portmanteau_statistic(rho, np.eye(2), 100)
    assert not pseudo
    assert_allclose(stat, 100 * 0.05)
    stat, _ = portmanteau_statistic(rho, np.diag([2.0, 0.5]), 100)
    assert_allclose(stat, 100 * (0.01 / 2.0 + 0.04 / 0.5))
    assert_allclose(portmanteau_p1(rho, np.eye(2), 100), chi2_pvalue(5.0, 2))


def test_portmanteau_statistic_on_singular_covariance():
    stat, pseudo = portmanteau_statistic(np.array([0.1, 0.0]), np.diag([1.0, 0.0]), 50)
    assert pseudo
    assert_allclose(stat, 50 * 0.01)


def test_weights_are_exponential_or_constant():
    rng = np.random.default_rng(1)
    assert_allclose(draw_weights(rng, 5, WeightDistribution.CONSTANT), 1.0)
    w = draw_weights(rng, 100_000, WeightDistribution.EXPONENTIAL)
    assert w.min() >= 0.0
    assert abs(w.mean() - 1.0) < 0.02 and abs(w.var() - 1.0) < 0.05


def test_replicate_streams_do_not_depend_on_thread_count():
    def task(index, rng):
        return index, float(rng.random())

    serial = run_replicates(task, 40, seed=5, threads=1)
    pooled = run_replicates(task, 40, seed=5, threads=4)
    assert serial == pooled
    assert serial[3][1] == float(replicate_generator(5, 3).random())
    assert run_replicates(task, 0, seed=5) == []


def test_goodness_of_fit_report(short_series, short_fit):
    report = goodness_of_fit(short_series, short_fit, k=5, B=100, seed=3)
    assert report.k == 5 and report.n == short_series.n
    assert report.rho_hat.shape == (5,)
    assert report.V_hat.shape == (5, 5)
    assert_allclose(report.V_hat, report.V_hat.T)
    assert np.all(np.diag(report.V_hat) > 0)
    for value in (report.p1, report.p1_plugin, report.p2):
        assert 0.0 <= value <= 1.0
    assert report.p1_variance == "bootstrap"
    assert report.V_star.shape == (5, 5)

    data = report.to_dict()
    assert data["weight_dist"] == "exponential"
    assert data["B"] == 100 and data["seed"] == 3
    assert data["B_used"] == 100 and data["B_failed"] == 0


def test_goodness_of_fit_is_deterministic_across_threads(short_series, short_fit):
    serial = goodness_of_fit(short_series, short_fit, k=4, B=100, seed=11, threads=1)
    pooled = goodness_of_fit(short_series, short_fit, k=4, B=100, seed=11, threads=3)
    assert serial.p2 == pooled.p2
    assert_allclose(serial.V_star, pooled.V_star, rtol=0, atol=0)


def test_constant_weights_collapse_the_bootstrap(short_series, short_fit):
    report = goodness_of_fit(short_series, short_fit, k=4, B=100, seed=0,
                             weights=WeightDistribution.CONSTANT)
    assert report.p2 == 0.0
    assert_allclose(report.V_star, 0.0, atol=1e-20)


def test_goodness_of_fit_needs_enough_replicates(short_series, short_fit):
    with pytest.raises(ParameterDomainError):
        goodness_of_fit(short_series, short_fit, B=50)


def test_dropped_replicates_are_counted(short_series, short_fit, monkeypatch):
    from mdingarch.diagnostics import bootstrap

    calls = {"n": 0}

    def every_fourth_fails(*args):
        calls["n"] += 1
        eps = residuals_at(*args)
        return np.full_like(eps, np.nan) if calls["n"] % 4 == 0 else eps

    monkeypatch.setattr(bootstrap, "residuals_at", every_fourth_fails)
    report = goodness_of_fit(short_series, short_fit, k=4, B=100, seed=2, threads=1)
    assert report.B_failed == 25 and report.B_used == 75
    assert "bootstrap_failed_replicates=25" in report.flags
    assert report.p1_variance == "bootstrap"
    assert 0.0 <= report.p2 <= 1.0


def test_all_replicates_dropped_leaves_the_plugin_p_value(short_series, short_fit, monkeypatch):
    from mdingarch.diagnostics import bootstrap

    monkeypatch.setattr(bootstrap, "residuals_at", lambda *args: np.full(short_series.n, np.nan))
    report = goodness_of_fit(short_series, short_fit, k=4, B=100, seed=2, threads=1)
    assert report.B_failed == 100 and report.B_used == 0
    assert report.p1_variance == "plugin" and report.p1 == report.p1_plugin
    assert "bootstrap_unavailable" in report.flags
    assert "bootstrap_failed_replicates=100" in report.flags
