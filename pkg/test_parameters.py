#!/usr/bin/env python3
"""
Tests for parameter containers, parameter documents and the series container.
"""

import json
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mdingarch.core.exceptions import DataFormatError, ParameterDomainError  # noqa: E402
from mdingarch.models.parameters import (  # noqa: E402
    ModelOrder,
    PhiParams,
    PsiParams,
    SeriesZ,
    Side,
    Theta,
    block_slices,
    load_theta,
    parameter_names,
)


def test_model_order_dimensions():
    order = ModelOrder(2, 1)
    assert order.r == 2
    assert order.psi_dim == 4
    assert order.dim == 2 * (2 + 1) + 3
    with pytest.raises(ParameterDomainError):
        ModelOrder(0, 0)


@pytest.mark.parametrize("c,a,b", [(0.0, 0.2, 0.2), (0.2, -0.1, 0.2), (0.4, 0.3, 0.3)])
def test_phi_domain(c, a, b):
    with pytest.raises(ParameterDomainError):
        PhiParams(c, a, b)


def test_psi_domain():
    PsiParams(1.0, (0.3,), (0.3,), Side.POSITIVE)
    with pytest.raises(ParameterDomainError):
        PsiParams(0.0, (0.3,), (0.3,), Side.POSITIVE)
    with pytest.raises(ParameterDomainError):
        PsiParams(1.0, (0.3,), (1.0,), Side.POSITIVE)
    # negative side needs 1 - sum(beta) < omega
    with pytest.raises(ParameterDomainError):
        PsiParams(0.7, (0.3,), (0.3,), Side.NEGATIVE)
    PsiParams(0.71, (0.3,), (0.3,), Side.NEGATIVE)


def test_theta_vector_round_trip(reference_theta):
    vector = reference_theta.vector()
    assert_allclose(vector, [0.2, 0.2, 0.2, 1.0, 0.3, 0.3, 2.0, 0.3, 0.3])
    rebuilt = Theta.from_vector(vector, ModelOrder(1, 1))
    assert rebuilt == reference_theta
    assert reference_theta.dim == 9


def test_unvalidated_theta_accepts_boundary_values():
    values = np.array([0.2, 0.2, 0.2, 1.0, 0.3, 1.0, 2.0, 0.3, 0.3])
    with pytest.raises(ParameterDomainError):
        Theta.from_vector(values, ModelOrder(1, 1))
    theta = Theta.from_vector(values, ModelOrder(1, 1), validate=False)
    assert theta.psi1.beta == (1.0,)
    assert theta.order == ModelOrder(1, 1)


def test_parameter_names_and_slices():
    assert parameter_names(ModelOrder(1, 1)) == [
        "c", "a", "b", "omega1", "alpha1", "beta1", "omega2", "alpha2", "beta2",
    ]
    names = parameter_names(ModelOrder(2, 1))
    assert names[3:7] == ["omega1", "alpha1", "beta1_1", "beta1_2"]
    phi, psi1, psi2 = block_slices(ModelOrder(2, 1))
    assert (phi, psi1, psi2) == (slice(0, 3), slice(3, 7), slice(7, 11))


def test_parameter_document_round_trip(tmp_path, reference_theta):
    path = tmp_path / "theta.json"
    path.write_text(json.dumps(reference_theta.to_dict()), encoding="utf-8")
    assert load_theta(path) == reference_theta


def test_parameter_document_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"phi": {"c": 0.2,\n "a": }', encoding="utf-8")
    with pytest.raises(DataFormatError) as excinfo:
        load_theta(broken)
    assert excinfo.value.line == 2

    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"phi": {"c": 0.2, "a": 0.2, "b": 0.2}}), encoding="utf-8")
    with pytest.raises(DataFormatError):
        load_theta(missing)


def test_unchecked_parameter_document(reference_theta):
    document = reference_theta.to_dict()
    document["psi1"]["beta"] = [1.0]
    with pytest.raises(ParameterDomainError):
        Theta.from_dict(document)
    theta = Theta.from_dict(document, validate=False)
    assert theta.psi1.beta == (1.0,) and theta.psi2 == reference_theta.psi2
    assert theta.phi == reference_theta.phi

    document["psi2"]["alpha"] = [-0.1]
    with pytest.raises(ParameterDomainError):
        Theta.from_dict(document, validate=False)
    document["psi2"]["alpha"] = [0.3, 0.1]
    with pytest.raises(ParameterDomainError):
        Theta.from_dict(document, validate=False)


def test_series_derives_sign_indicators():
    series = SeriesZ.from_values([3, 0, -2, -1, 4])
    assert series.n == 5 and len(series) == 5
    assert series.b.tolist() == [1, 1, 0, 0, 1]
    assert (series.n_nonnegative, series.n_negative) == (3, 2)
    assert series.head(2).y.tolist() == [3, 0]
    with pytest.raises(ValueError):
        series.y[0] = 1


def test_series_rejects_non_integers():
    with pytest.raises(ParameterDomainError):
        SeriesZ(np.array([1.0, 2.5]))
    with pytest.raises(ParameterDomainError):
        SeriesZ(np.array([[1, 2]]))
    assert SeriesZ(np.array([1.0, -2.0])).y.dtype == np.int64
