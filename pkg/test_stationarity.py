#!/usr/bin/env python3
"""
Tests for the stability matrix, spectral radius and stationarity conditions.
"""

import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mdingarch.analysis.stationarity import (  # noqa: E402
    SignMode,
    StationarityStatus,
    build_matrix,
    check_conditions,
    closed_form_rho,
    spectral_radius,
    stationary_mean,
)
from mdingarch.core.exceptions import NumericalError, ParameterDomainError  # noqa: E402
from mdingarch.models.parameters import ModelOrder, PhiParams, PsiParams, Side, Theta  # noqa: E402

EXPLOSIVE = Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.9, 0.2, 2.0, 0.9, 0.2)
HIGH_ALPHA = Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.8, 0.1, 2.0, 0.8, 0.1)


def test_iid_stability_block(reference_theta):
    matrix = build_matrix(reference_theta, SignMode.iid(0.4))
    assert matrix.r == 1
    assert_allclose(matrix.bounds, (0.4, 0.6))
    assert_allclose(matrix.companion, [[0.42, 0.18], [0.12, 0.48]])


def test_bernoulli_ingarch_bounds(reference_theta):
    matrix = build_matrix(reference_theta, SignMode.bernoulli_ingarch())
    assert_allclose(matrix.bounds, (0.6, 0.8))


def test_markov_bounds(reference_theta):
    matrix = build_matrix(reference_theta, SignMode.markov(0.7, 0.3, 0.4, 0.6))
    assert_allclose(matrix.bounds, (0.6, 0.7))


@pytest.mark.parametrize("mode", [
    SignMode.bounds(0.5, 0.4),
    SignMode.bounds(1.0, 0.5),
    SignMode.iid(1.0),
    SignMode.markov(0.7, 0.2, 0.4, 0.6),
])
def test_invalid_sign_modes(reference_theta, mode):
    with pytest.raises(ParameterDomainError):
        build_matrix(reference_theta, mode)


def test_companion_layout_for_higher_orders():
    theta = Theta(
        PhiParams(0.2, 0.2, 0.2),
        PsiParams(1.0, (0.2, 0.1), (0.2,), Side.POSITIVE),
        PsiParams(2.0, (0.2, 0.1), (0.2,), Side.NEGATIVE),
    )
    assert theta.order == ModelOrder(1, 2)
    matrix = build_matrix(theta, SignMode.iid(0.5))
    assert matrix.companion.shape == (4, 4)
    assert_allclose(matrix.companion[2:, :2], np.eye(2))
    assert_allclose(matrix.companion[2:, 2:], 0.0)
    # second lag block carries alpha only
    assert_allclose(matrix.blocks[1], [[0.05, 0.05], [0.05, 0.05]])


def test_closed_form_hand_value(reference_theta):
    assert_allclose(closed_form_rho(reference_theta, 0.5), 0.6)


@pytest.mark.parametrize("pi", [0.05, 0.3, 0.5, 0.8, 0.97])
@pytest.mark.parametrize("theta", [
    Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.3, 0.3, 2.0, 0.3, 0.3),
    Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.5, 0.1, 2.0, 0.05, 0.6),
    HIGH_ALPHA,
])
def test_power_iteration_matches_closed_form(theta, pi):
    matrix = build_matrix(theta, SignMode.iid(pi))
    assert_allclose(spectral_radius(matrix.companion), closed_form_rho(theta, pi), rtol=1e-9)


def test_spectral_radius_known_matrices():
    assert_allclose(spectral_radius(np.array([[2.0, 1.0], [1.0, 2.0]])), 3.0)
    assert_allclose(spectral_radius(np.zeros((3, 3))), 0.0, atol=1e-12)
    # negative entries go straight to the eigenvalue solver
    assert_allclose(spectral_radius(np.array([[0.0, -2.0], [2.0, 0.0]])), 2.0)
    assert spectral_radius(np.zeros((0, 0))) == 0.0
    # reducible: the bracket never closes, so the eigenvalue solver decides
    assert_allclose(spectral_radius(np.diag([0.3, 0.7, 0.5])), 0.7, rtol=1e-12)


def test_no_feedback_leaves_the_larger_beta():
    theta = Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.0, 0.3, 2.0, 0.0, 0.6)
    for mode in (SignMode.iid(0.5), SignMode.iid(0.9), SignMode.bernoulli_ingarch(),
                 SignMode.markov(0.7, 0.3, 0.4, 0.6)):
        matrix = build_matrix(theta, mode)
        assert_allclose(matrix.blocks[0], np.diag([0.3, 0.6]))
        assert_allclose(spectral_radius(matrix.companion), 0.6, rtol=1e-12)


def test_spectral_radius_input_checks():
    with pytest.raises(ParameterDomainError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(ParameterDomainError):
        spectral_radius(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_spectral_radius_without_fallback():
    with pytest.raises(NumericalError):
        spectral_radius(np.diag([1.0, 2.0]), max_iter=1, fallback=False)
    assert_allclose(spectral_radius(np.diag([1.0, 2.0]), max_iter=1), 2.0)


def test_stationary_iid_report(reference_theta):
    report = check_conditions(reference_theta, SignMode.iid(0.5))
    assert_allclose(report.rho, 0.6)
    assert report.sufficient and report.necessary_beta and report.necessary_mean
    assert report.equivalence_holds is True
    assert report.status is StationarityStatus.STATIONARY
    assert report.sign_mode == "iid"


def test_explosive_iid_report():
    report = check_conditions(EXPLOSIVE, SignMode.iid(0.5))
    assert_allclose(report.rho, 1.1)
    assert not report.sufficient
    assert report.necessary_mean is False
    assert report.equivalence_holds is True
    assert report.status is StationarityStatus.NONSTATIONARY


def test_non_iid_sign_is_inconclusive_when_only_sufficiency_fails():
    report = check_conditions(HIGH_ALPHA, SignMode.bernoulli_ingarch())
    assert report.rho > 1.0
    assert report.necessary_beta
    assert report.necessary_mean is None
    assert report.status is StationarityStatus.INCONCLUSIVE
    assert report.notes


def test_unit_beta_fails_the_necessary_condition():
    values = np.array([0.2, 0.2, 0.2, 1.0, 0.3, 1.0, 2.0, 0.3, 0.3])
    theta = Theta.from_vector(values, ModelOrder(1, 1), validate=False)
    report = check_conditions(theta, SignMode.bernoulli_ingarch())
    assert not report.necessary_beta
    assert not report.sufficient
    assert report.status is StationarityStatus.NONSTATIONARY


def test_unit_beta_with_iid_signs():
    values = np.array([0.2, 0.2, 0.2, 1.0, 0.3, 1.0, 2.0, 0.3, 0.3])
    theta = Theta.from_vector(values, ModelOrder(1, 1), validate=False)
    report = check_conditions(theta, SignMode.iid(0.5))
    assert report.rho >= 1.0
    assert not report.sufficient and not report.necessary_beta
    assert report.necessary_mean is False
    assert report.equivalence_holds
    assert report.status is StationarityStatus.NONSTATIONARY


def test_stationary_mean_hand_value(reference_theta):
    e_abs_y, e_y = stationary_mean(reference_theta, 0.5)
    assert_allclose(e_abs_y, 3.75)
    assert_allclose(e_y, -5.0 / 7.0)


def test_stationary_mean_requires_finite_moments():
    with pytest.raises(ParameterDomainError):
        stationary_mean(EXPLOSIVE, 0.5)
    with pytest.raises(ParameterDomainError):
        stationary_mean(EXPLOSIVE, 0.0)
