"""
Sign-probability and intensity filters with parameter gradients

For an observed series the filters run

    pi_t      = c + a B_{t-1} + b pi_{t-1}
    lambda_st = omega_s + sum_i alpha_si |Y_{t-i}| + sum_j beta_sj lambda_{s,t-j}

from fixed starting values. Each is a linear recursion in its own past, so the
levels and every gradient column are computed with scipy.signal.lfilter,
seeded with lfiltic from the starting values (or their derivatives).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.signal import lfilter, lfiltic

from mdingarch.core.exceptions import ParameterDomainError
from mdingarch.models.parameters import (
    Family,
    InitPolicy,
    ModelOrder,
    SeriesZ,
    Side,
    Theta,
)

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-10
EXCESS_FLOOR = 1e-10


@dataclass(frozen=True)
class FilterPath:
    """Per-time filter output; row t of each gradient matrix is d(value_t)/d(block)."""

    pi: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    dpi: Optional[np.ndarray] = None
    dlam1: Optional[np.ndarray] = None
    dlam2: Optional[np.ndarray] = None
    clamped: int = 0

    @property
    def n(self) -> int:
        return int(self.pi.shape[0])

    @property
    def has_gradients(self) -> bool:
        return self.dpi is not None


def _linear_recursion(x: np.ndarray, feedback: np.ndarray, init: float) -> np.ndarray:
    """out_t = x_t + sum_j feedback_j out_{t-j}, with out_{t} = init for t <= 0."""
    if feedback.size == 0:
        return np.asarray(x, dtype=float).copy()
    a = np.concatenate(([1.0], -feedback))
    zi = lfiltic([1.0], a, y=np.full(feedback.size, init))
    out, _ = lfilter([1.0], a, x, zi=zi)
    return out


def _lagged(values: np.ndarray, lag: int, fill: float) -> np.ndarray:
    """values shifted forward by `lag` positions, early entries set to `fill`."""
    n = values.shape[0]
    out = np.full(n, fill, dtype=float)
    if lag < n:
        out[lag:] = values[: n - lag]
    return out


def sign_start(b_ind: np.ndarray, phi: np.ndarray, init: InitPolicy) -> float:
    if init is InitPolicy.SAMPLE_MEAN:
        return float(np.clip(np.mean(b_ind), PROB_FLOOR, 1.0 - PROB_FLOOR))
    return float(phi[0] / (1.0 - phi[2]))


def intensity_start(y: np.ndarray, psi: np.ndarray, order: ModelOrder, side: Side,
                    init: InitPolicy) -> float:
    if init is InitPolicy.SAMPLE_MEAN:
        if side is Side.POSITIVE:
            values = y[y >= 0]
            return float(values.mean()) if values.size else 1.0
        values = -y[y < 0]
        return max(float(values.mean()), 1.0 + EXCESS_FLOOR) if values.size else 2.0
    return float(psi[0] / (1.0 - np.sum(psi[1 + order.q:])))


def initial_values(series: SeriesZ, phi: np.ndarray, psi1: np.ndarray, psi2: np.ndarray,
                   order: ModelOrder, init: InitPolicy) -> Tuple[float, float, float]:
    """(pi_0, lambda_10, lambda_20) under the given policy."""
    return (
        sign_start(series.b, phi, init),
        intensity_start(series.y, psi1, order, Side.POSITIVE, init),
        intensity_start(series.y, psi2, order, Side.NEGATIVE, init),
    )


def sign_filter(b_ind: np.ndarray, phi: np.ndarray, pi0: float, init: InitPolicy,
                with_gradients: bool = True) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Unclamped pi_1..pi_n and, optionally, the n x 3 gradient in (c, a, b)."""
    c, a, b = (float(v) for v in phi)
    b_prev = _lagged(b_ind.astype(float), 1, 1.0)
    feedback = np.array([b])
    pi = _linear_recursion(c + a * b_prev, feedback, pi0)
    if not with_gradients:
        return pi, None

    if init is InitPolicy.STATIONARY:
        d_init = np.array([1.0 / (1.0 - b), 0.0, c / (1.0 - b) ** 2])
    else:
        d_init = np.zeros(3)
    regressors = np.column_stack([np.ones_like(pi), b_prev, _lagged(pi, 1, pi0)])
    dpi = np.column_stack([
        _linear_recursion(regressors[:, k], feedback, d_init[k]) for k in range(3)
    ])
    return pi, dpi


def intensity_filter(abs_y: np.ndarray, psi: np.ndarray, order: ModelOrder, lam0: float,
                     init: InitPolicy, with_gradients: bool = True
                     ) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Intensity path for one side and, optionally, its n x (p+q+1) gradient."""
    p, q = order.p, order.q
    omega = float(psi[0])
    alpha = np.asarray(psi[1:1 + q], dtype=float)
    beta = np.asarray(psi[1 + q:], dtype=float)

    y_lags = np.column_stack([_lagged(abs_y, i, 0.0) for i in range(1, q + 1)]) if q else np.zeros((abs_y.size, 0))
    lam = _linear_recursion(omega + y_lags @ alpha, beta, lam0)
    if not with_gradients:
        return lam, None

    d_init = np.zeros(order.psi_dim)
    if init is InitPolicy.STATIONARY:
        slack = 1.0 - beta.sum()
        d_init[0] = 1.0 / slack
        d_init[1 + q:] = omega / slack ** 2
    lam_lags = np.column_stack([_lagged(lam, j, lam0) for j in range(1, p + 1)]) if p else np.zeros((lam.size, 0))
    regressors = np.column_stack([np.ones_like(lam), y_lags, lam_lags])
    dlam = np.column_stack([
        _linear_recursion(regressors[:, k], beta, d_init[k]) for k in range(order.psi_dim)
    ])
    return lam, dlam


def filter_arrays(series: SeriesZ, phi: np.ndarray, psi1: np.ndarray, psi2: np.ndarray,
                  order: ModelOrder, init: InitPolicy = InitPolicy.STATIONARY,
                  with_gradients: bool = True) -> FilterPath:
    """Run all three filters on raw parameter vectors without domain checks.

    Outputs are guarded: pi is clamped into [1e-10, 1 - 1e-10], lambda_1 is
    floored at 1e-10 and lambda_2 at 1 + 1e-10.
    """
    pi0, lam10, lam20 = initial_values(series, phi, psi1, psi2, order, init)
    abs_y = np.abs(series.y).astype(float)

    pi, dpi = sign_filter(series.b, phi, pi0, init, with_gradients)
    lam1, dlam1 = intensity_filter(abs_y, psi1, order, lam10, init, with_gradients)
    lam2, dlam2 = intensity_filter(abs_y, psi2, order, lam20, init, with_gradients)

    clamped = int(
        np.count_nonzero((pi < PROB_FLOOR) | (pi > 1.0 - PROB_FLOOR))
        + np.count_nonzero(lam1 < EXCESS_FLOOR)
        + np.count_nonzero(lam2 - 1.0 < EXCESS_FLOOR)
    )
    if clamped:
        logger.debug(f"Filter guards clamped {clamped} values")
    return FilterPath(
        pi=np.clip(pi, PROB_FLOOR, 1.0 - PROB_FLOOR),
        lam1=np.maximum(lam1, EXCESS_FLOOR),
        lam2=np.maximum(lam2, 1.0 + EXCESS_FLOOR),
        dpi=dpi,
        dlam1=dlam1,
        dlam2=dlam2,
        clamped=clamped,
    )


def filter(series: SeriesZ, theta: Theta, init: InitPolicy = InitPolicy.STATIONARY,
           with_gradients: bool = True) -> FilterPath:
    """Filter a series at a validated parameter value."""
    if series.n < 1:
        raise ParameterDomainError("cannot filter an empty series")
    return filter_arrays(
        series,
        theta.phi.as_array(),
        theta.psi1.as_array(),
        theta.psi2.as_array(),
        theta.order,
        init,
        with_gradients,
    )


def _component_variances(lam1, lam2, family: Family, dispersion):
    var1 = np.asarray(lam1, dtype=float)
    var2 = np.asarray(lam2, dtype=float) - 1.0
    if family is Family.NEG_BINOMIAL:
        if dispersion is None:
            raise ParameterDomainError("negative binomial moments need dispersion (r1, r2)")
        r1, r2 = dispersion
        var1 = var1 + var1 ** 2 / r1
        var2 = var2 + var2 ** 2 / r2
    return var1, var2


def conditional_moments(path: FilterPath, t: int, family: Family = Family.POISSON,
                        dispersion: Optional[Tuple[float, float]] = None) -> Tuple[float, float]:
    """Conditional mean and variance of Y_t given the past (t is a 0-based index)."""
    if not -path.n <= t < path.n:
        raise IndexError(f"t={t} out of range for a path of length {path.n}")
    mean, var = conditional_moment_paths(path, family, dispersion, index=t)
    return float(mean), float(var)


def conditional_moment_paths(path: FilterPath, family: Family = Family.POISSON,
                             dispersion: Optional[Tuple[float, float]] = None,
                             index=slice(None)) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised conditional means and variances over the whole path."""
    pi, lam1, lam2 = path.pi[index], path.lam1[index], path.lam2[index]
    return moments_from_components(pi, lam1, lam2, family, dispersion)


def moments_from_components(pi, lam1, lam2, family: Family = Family.POISSON,
                            dispersion: Optional[Tuple[float, float]] = None):
    pi = np.asarray(pi, dtype=float)
    var1, var2 = _component_variances(lam1, lam2, family, dispersion)
    mean = pi * lam1 - (1.0 - pi) * lam2
    var = pi * var1 + (1.0 - pi) * var2 + pi * (1.0 - pi) * (np.asarray(lam1) + np.asarray(lam2)) ** 2
    return mean, var
