"""
Portmanteau goodness-of-fit test on residual autocorrelations

The plug-in limiting covariance of sqrt(n) rho_hat is

    V_hat = gamma0^{-2} (E + C J^{-1} D' + D J^{-1} C' + D Sigma D')

    E(i, j) = (1/n) sum_t eps_t^2 eps_{t-i} eps_{t-j}
    D(i, .) = (1/n) sum_t eps_t d eps_{t+i} / d theta'
    C(i, .) = (1/n) sum_t eps_t eps_{t-i} d l_t / d theta'

with J = diag(Pi, J1, J2) and Sigma = J^{-1} diag(Pi, I1, I2) J^{-1}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.stats import chi2

from mdingarch.core.exceptions import ParameterDomainError
from mdingarch.diagnostics.bootstrap import (
    DEFAULT_REPLICATES,
    BootstrapResult,
    WeightDistribution,
    rw_bootstrap,
    unavailable,
)
from mdingarch.diagnostics.residuals import (
    ResidualSeries,
    lag_matrix,
    residual_acf,
    residual_gradients,
    residuals_from_path,
)
from mdingarch.estimation.covariance import CONDITION_LIMIT, covariance_blocks, hessian_approximation
from mdingarch.estimation.qmle import FitReport, refilter, score_terms
from mdingarch.models.parameters import SeriesZ, block_slices

logger = logging.getLogger(__name__)

DEFAULT_LAGS = 10
MIN_REPLICATES = 100
PSD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class VHatComponents:
    E: np.ndarray
    D: np.ndarray
    C: np.ndarray
    J_inv: np.ndarray
    sigma: np.ndarray
    gamma0: float
    J_singular: bool = False


@dataclass(frozen=True)
class GofReport:
    k: int
    n: int
    rho_hat: np.ndarray
    V_hat: np.ndarray
    stat: float
    p1: float
    p1_plugin: float
    p2: float
    B: int
    weight_dist: WeightDistribution
    seed: int
    B_used: int = 0
    B_failed: int = 0
    stat_bootstrap: float = math.nan
    V_star: Optional[np.ndarray] = None
    p1_variance: str = "bootstrap"
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "n": self.n,
            "rho_hat": self.rho_hat.tolist(),
            "stat": self.stat,
            "stat_bootstrap": self.stat_bootstrap,
            "p1": self.p1,
            "p1_variance": self.p1_variance,
            "p1_plugin": self.p1_plugin,
            "p2": self.p2,
            "B": self.B,
            "B_used": self.B_used,
            "B_failed": self.B_failed,
            "weight_dist": self.weight_dist.value,
            "seed": self.seed,
            "V_hat": self.V_hat.tolist(),
            "V_star": None if self.V_star is None else self.V_star.tolist(),
            "flags": list(self.flags),
        }


def block_inverse(j: np.ndarray, order) -> Tuple[np.ndarray, bool]:
    """Inverse of the block-diagonal J, block by block; pseudo-inverse on singular blocks."""
    inv = np.zeros_like(j)
    singular = False
    for sl in block_slices(order):
        block = j[sl, sl]
        if not np.all(np.isfinite(block)) or np.linalg.cond(block) > CONDITION_LIMIT:
            singular = True
            inv[sl, sl] = np.linalg.pinv(np.nan_to_num(block))
        else:
            inv[sl, sl] = np.linalg.inv(block)
    return inv, singular


def v_hat_components(series: SeriesZ, fit: FitReport, res: ResidualSeries, k: int,
                     path=None, scores: Optional[np.ndarray] = None) -> VHatComponents:
    n = series.n
    path = refilter(series, fit, with_gradients=True) if path is None else path
    scores = score_terms(series, path) if scores is None else scores
    eps = res.eps
    lags = lag_matrix(eps, k)

    e_hat = (lags * (eps ** 2)[:, None]).T @ lags / n
    d_hat = lags.T @ residual_gradients(series, path) / n
    c_hat = (lags * eps[:, None]).T @ scores / n

    blocks = covariance_blocks(series, path)
    j_inv, singular = block_inverse(hessian_approximation(blocks, fit.order), fit.order)
    i_full = np.zeros_like(j_inv)
    for sl, block in zip(block_slices(fit.order), (blocks.Pi_hat, blocks.I1_hat, blocks.I2_hat)):
        i_full[sl, sl] = block
    sigma = j_inv @ i_full @ j_inv
    if singular:
        logger.warning("Hessian approximation is singular; V_hat uses its pseudo-inverse")
    return VHatComponents(E=e_hat, D=d_hat, C=c_hat, J_inv=j_inv, sigma=0.5 * (sigma + sigma.T),
                          gamma0=res.gamma0_hat, J_singular=singular)


def v_from_components(parts: VHatComponents) -> np.ndarray:
    cross = parts.C @ parts.J_inv @ parts.D.T
    v = (parts.E + cross + cross.T + parts.D @ parts.sigma @ parts.D.T) / parts.gamma0 ** 2
    v = 0.5 * (v + v.T)
    min_eig = float(np.linalg.eigvalsh(v).min()) if v.size else 0.0
    if min_eig < -PSD_TOLERANCE:
        logger.warning(f"V_hat is not positive semidefinite (smallest eigenvalue {min_eig:.3g})")
    return v


def v_hat(series: SeriesZ, fit: FitReport, res: ResidualSeries, k: int = DEFAULT_LAGS) -> np.ndarray:
    return v_from_components(v_hat_components(series, fit, res, k))


def portmanteau_statistic(rho: np.ndarray, v: np.ndarray, n: int) -> Tuple[float, bool]:
    """n rho' V^{-1} rho; falls back to the pseudo-inverse when V is singular."""
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(v)):
        return math.nan, True
    cond = np.linalg.cond(v)
    pseudo = not np.isfinite(cond) or cond > CONDITION_LIMIT
    if pseudo:
        logger.warning("Portmanteau covariance is singular; using its pseudo-inverse")
        quad = rho @ np.linalg.pinv(v, hermitian=True) @ rho
    else:
        quad = rho @ np.linalg.solve(v, rho)
    return max(float(n * quad), 0.0), pseudo


def chi2_pvalue(stat: float, k: int) -> float:
    if math.isnan(stat):
        return math.nan
    return float(chi2.sf(stat, k))


def portmanteau_p1(rho: np.ndarray, v: np.ndarray, n: int) -> float:
    stat, _ = portmanteau_statistic(rho, v, n)
    return chi2_pvalue(stat, len(rho))


def goodness_of_fit(
    series: SeriesZ,
    fit: FitReport,
    k: int = DEFAULT_LAGS,
    B: int = DEFAULT_REPLICATES,
    seed: int = 0,
    weights: WeightDistribution = WeightDistribution.EXPONENTIAL,
    threads: int = 1,
) -> GofReport:
    """Residual autocorrelations, V_hat, both p-values and the bootstrap metadata."""
    if B < MIN_REPLICATES:
        raise ParameterDomainError(f"need at least {MIN_REPLICATES} bootstrap replicates, got {B}")
    path = refilter(series, fit, with_gradients=True)
    res = residuals_from_path(series, path)
    rho = residual_acf(res, k)
    scores = score_terms(series, path)
    parts = v_hat_components(series, fit, res, k, path=path, scores=scores)
    v = v_from_components(parts)

    flags = []
    stat, pseudo = portmanteau_statistic(rho, v, series.n)
    if pseudo:
        flags.append("V_hat_pseudo_inverse")
    p1_plugin = chi2_pvalue(stat, k)

    if parts.J_singular:
        flags.append("J_singular_bootstrap_unavailable")
        boot: BootstrapResult = unavailable(k, B, seed, weights)
    else:
        boot = rw_bootstrap(series, fit, res, rho, scores, parts.J_inv, B, seed, weights, threads)

    if boot.available:
        stat_star, pseudo_star = portmanteau_statistic(rho, boot.V_star, series.n)
        if pseudo_star:
            flags.append("V_star_pseudo_inverse")
        p1, p1_variance = chi2_pvalue(stat_star, k), "bootstrap"
    else:
        stat_star, p1, p1_variance = math.nan, p1_plugin, "plugin"
        flags.append("bootstrap_unavailable")
    if boot.failed:
        flags.append(f"bootstrap_failed_replicates={boot.failed}")

    logger.info(f"Portmanteau k={k}: stat={stat:.4g}, p1={p1:.4g}, p1_plugin={p1_plugin:.4g}, p2={boot.p2:.4g}")
    return GofReport(
        k=k,
        n=series.n,
        rho_hat=rho,
        V_hat=v,
        stat=stat,
        p1=p1,
        p1_plugin=p1_plugin,
        p2=boot.p2,
        B=B,
        weight_dist=weights,
        seed=seed,
        B_used=boot.used,
        B_failed=boot.failed,
        stat_bootstrap=stat_star,
        V_star=None if not boot.available else boot.V_star,
        p1_variance=p1_variance,
        flags=tuple(flags),
    )
