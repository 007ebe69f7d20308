"""Shared fixtures for the mdingarch test suite."""

import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mdingarch.estimation.qmle import FitOptions, fit  # noqa: E402
from mdingarch.models.parameters import ModelOrder, Theta  # noqa: E402
from mdingarch.models.simulation import preset, simulate  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def reference_theta():
    """c=a=b=0.2, omega=(1, 2), alpha=beta=0.3 on both sides."""
    return Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.3, 0.3, 2.0, 0.3, 0.3)


@pytest.fixture(scope="session")
def poisson_series():
    return simulate(preset("pois"), 1500, burn_in=300, rng=np.random.default_rng(7))


@pytest.fixture(scope="session")
def short_series():
    return simulate(preset("pois"), 400, burn_in=200, rng=np.random.default_rng(11))


@pytest.fixture(scope="session")
def poisson_fit(poisson_series):
    return fit(poisson_series, ModelOrder(1, 1), FitOptions())


@pytest.fixture(scope="session")
def short_fit(short_series):
    return fit(short_series, ModelOrder(1, 1), FitOptions(n_starts=2))
