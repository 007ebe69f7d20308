"""
Residuals and residual autocorrelations of a fitted model

eps_t = Y_t - 1{Y_t >= 0} lambda_1t + 1{Y_t < 0} lambda_2t, and residuals
outside 1..n are taken as zero when forming lagged products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from mdingarch.core.exceptions import DegenerateDataError, ParameterDomainError
from mdingarch.estimation.qmle import FitReport, refilter
from mdingarch.models.filtering import (
    EXCESS_FLOOR,
    FilterPath,
    intensity_filter,
    intensity_start,
)
from mdingarch.models.parameters import InitPolicy, ModelOrder, SeriesZ, Side


@dataclass(frozen=True)
class ResidualSeries:
    eps: np.ndarray
    gamma0_hat: float

    @property
    def n(self) -> int:
        return int(self.eps.shape[0])


def residual_values(y: np.ndarray, lam1: np.ndarray, lam2: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return y - np.where(y >= 0, lam1, 0.0) + np.where(y < 0, lam2, 0.0)


def residuals_from_path(series: SeriesZ, path: FilterPath) -> ResidualSeries:
    eps = residual_values(series.y, path.lam1, path.lam2)
    return ResidualSeries(eps=eps, gamma0_hat=float(np.mean(eps ** 2)))


def residuals(series: SeriesZ, fit: FitReport) -> ResidualSeries:
    return residuals_from_path(series, refilter(series, fit, with_gradients=False))


def residuals_at(series: SeriesZ, psi1: np.ndarray, psi2: np.ndarray, order: ModelOrder,
                 init: InitPolicy) -> np.ndarray:
    """Residuals at arbitrary (possibly out-of-region) intensity parameters."""
    y = series.y
    abs_y = np.abs(y).astype(float)
    lam = []
    for psi, side in ((psi1, Side.POSITIVE), (psi2, Side.NEGATIVE)):
        start = intensity_start(y, psi, order, side, init)
        if not np.isfinite(start) or start <= 0:
            start = intensity_start(y, psi, order, side, InitPolicy.SAMPLE_MEAN)
        values, _ = intensity_filter(abs_y, psi, order, start, init, with_gradients=False)
        lam.append(values)
    lam1 = np.maximum(lam[0], EXCESS_FLOOR)
    lam2 = np.maximum(lam[1], 1.0 + EXCESS_FLOOR)
    return residual_values(y, lam1, lam2)


def residual_gradients(series: SeriesZ, path: FilterPath) -> np.ndarray:
    """n x d matrix of d eps_t / d theta; the phi columns are zero."""
    if not path.has_gradients:
        raise ParameterDomainError("residual gradients need a filter path with gradients")
    y = series.y
    pos = (y >= 0).astype(float)[:, None]
    neg = (y < 0).astype(float)[:, None]
    return np.hstack([np.zeros_like(path.dpi), -pos * path.dlam1, neg * path.dlam2])


def lag_matrix(eps: np.ndarray, k: int) -> np.ndarray:
    """n x k matrix whose column h-1 is eps shifted forward by h, zero padded."""
    n = eps.shape[0]
    out = np.zeros((n, k))
    for h in range(1, min(k, n - 1) + 1):
        out[h:, h - 1] = eps[: n - h]
    return out


def autocovariances(eps: np.ndarray, k: int, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """gamma_h = (1/n) sum_t w_t eps_t eps_{t-h} for h = 1..k (w_t = 1 when no weights)."""
    n = eps.shape[0]
    weighted = eps if weights is None else weights * eps
    return np.array([weighted[h:] @ eps[: n - h] for h in range(1, k + 1)]) / n


def residual_acf(res: ResidualSeries, k: int) -> np.ndarray:
    if not 1 <= k < res.n:
        raise ParameterDomainError(f"need 1 <= k < n, got k={k}, n={res.n}")
    if res.gamma0_hat <= 0.0:
        raise DegenerateDataError("residual variance is zero; autocorrelations are undefined")
    return autocovariances(res.eps, k) / res.gamma0_hat
