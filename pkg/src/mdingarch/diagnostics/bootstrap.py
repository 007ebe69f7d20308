"""
Random-weighting bootstrap of residual autocorrelations

Each replicate draws i.i.d. positive weights w_t with mean one, takes a one-step
Newton update of the estimate

    theta* = theta_hat + J^{-1} (1/n) sum_t (w_t - 1) d l_t(theta_hat)

and re-weights the residual autocovariances at theta*:

    gamma*_h = (1/n) sum_t w_t eps_t(theta*) eps_{t-h}(theta*)
    rho*     = gamma* / gamma0_hat - rho_hat

The spread of sqrt(n) rho* estimates the limiting variance of sqrt(n) rho_hat.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from mdingarch.core.parallel import run_replicates
from mdingarch.diagnostics.residuals import ResidualSeries, autocovariances, residuals_at
from mdingarch.estimation.qmle import FitReport
from mdingarch.models.parameters import SeriesZ, block_slices

logger = logging.getLogger(__name__)

DEFAULT_REPLICATES = 500


class WeightDistribution(str, Enum):
    EXPONENTIAL = "exponential"
    CONSTANT = "constant"


def draw_weights(rng: np.random.Generator, n: int, dist: WeightDistribution) -> np.ndarray:
    if dist is WeightDistribution.CONSTANT:
        return np.ones(n)
    return rng.exponential(1.0, size=n)


@dataclass(frozen=True)
class BootstrapResult:
    rho_star: np.ndarray
    V_star: np.ndarray
    p2: float
    B: int
    weight_dist: WeightDistribution
    seed: int
    failed: int = 0

    @property
    def available(self) -> bool:
        return self.B > 0 and not math.isnan(self.p2)

    @property
    def used(self) -> int:
        """Replicates behind p2 and V_star."""
        return self.B - self.failed if self.available else 0


def unavailable(k: int, B: int, seed: int, weight_dist: WeightDistribution, failed: int = 0) -> BootstrapResult:
    return BootstrapResult(
        rho_star=np.full((0, k), np.nan),
        V_star=np.full((k, k), np.nan),
        p2=math.nan,
        B=B,
        weight_dist=weight_dist,
        seed=seed,
        failed=failed,
    )


def rw_bootstrap(
    series: SeriesZ,
    fit: FitReport,
    res: ResidualSeries,
    rho_hat: np.ndarray,
    scores: np.ndarray,
    j_inv: np.ndarray,
    B: int = DEFAULT_REPLICATES,
    seed: int = 0,
    weights: WeightDistribution = WeightDistribution.EXPONENTIAL,
    threads: int = 1,
) -> BootstrapResult:
    """Bootstrap replicates of rho*, the second p-value and V*.

    `scores` is the n x d matrix of per-time scores at theta_hat and `j_inv`
    the inverse of the block-diagonal Hessian approximation. Replicate b draws
    from a stream derived from (seed, b) only.
    """
    n = series.n
    k = rho_hat.shape[0]
    order = fit.order
    theta_hat = fit.theta_hat.vector()
    _, psi1_slice, psi2_slice = block_slices(order)
    init = fit.options.init

    def replicate(index: int, rng: np.random.Generator) -> np.ndarray:
        w = draw_weights(rng, n, weights)
        step = j_inv @ (((w - 1.0)[:, None] * scores).mean(axis=0))
        theta_star = theta_hat + step
        with np.errstate(all="ignore"):
            eps = residuals_at(series, theta_star[psi1_slice], theta_star[psi2_slice], order, init)
        return autocovariances(eps, k, weights=w) / res.gamma0_hat - rho_hat

    logger.info(f"Random-weighting bootstrap: B={B}, weights={weights.value}, threads={threads}")
    draws = np.array(run_replicates(replicate, B, seed, threads, progress_every=max(B // 10, 1)))

    finite = np.all(np.isfinite(draws), axis=1)
    failed = int(np.count_nonzero(~finite))
    if failed:
        logger.warning(f"{failed} of {B} bootstrap replicates produced non-finite residuals and were dropped")
    draws = draws[finite]
    if draws.shape[0] < 2:
        logger.warning("Too few usable bootstrap replicates; bootstrap p-value unavailable")
        return unavailable(k, B, seed, weights, failed=failed)

    threshold = float(rho_hat @ rho_hat)
    p2 = float(np.mean(np.einsum("bk,bk->b", draws, draws) > threshold))
    v_star = np.atleast_2d(np.cov(math.sqrt(n) * draws, rowvar=False))
    return BootstrapResult(
        rho_star=draws,
        V_star=0.5 * (v_star + v_star.T),
        p2=p2,
        B=B,
        weight_dist=weights,
        seed=seed,
        failed=failed,
    )
