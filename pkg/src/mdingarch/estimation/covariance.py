"""
Plug-in asymptotic covariance of the mixed Poisson QMLE

Sigma = diag(Pi^{-1}, J1^{-1} I1 J1^{-1}, J2^{-1} I2 J2^{-1}) with

    Pi = mean( dpi dpi' / (pi (1 - pi)) )
    J1 = mean( Y / lambda1^2 dlambda1 dlambda1' 1{Y >= 0} ),  I1 = mean( s1 s1' )
    J2 = mean( -(Y + 1) / (lambda2 - 1)^2 dlambda2 dlambda2' 1{Y < 0} ),  I2 = mean( s2 s2' )

all evaluated at the estimate. Standard errors are sqrt(diag(Sigma) / n).
"""

import logging
from dataclasses import replace
from typing import Dict, Optional, Tuple

import numpy as np

from mdingarch.estimation.qmle import (
    CovarianceBlocks,
    FitReport,
    refilter,
    score_weights,
)
from mdingarch.models.filtering import FilterPath
from mdingarch.models.parameters import SeriesZ, block_slices

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


def covariance_blocks(series: SeriesZ, path: FilterPath) -> CovarianceBlocks:
    y = series.y.astype(float)
    n = series.n
    pi = path.pi
    pos = y >= 0
    neg = ~pos
    w_phi, w_pos, w_neg = score_weights(series, path)

    pi_hat = (path.dpi.T * (1.0 / (pi * (1.0 - pi)))) @ path.dpi / n

    curv1 = np.where(pos, y / path.lam1 ** 2, 0.0)
    j1 = (path.dlam1.T * curv1) @ path.dlam1 / n
    s1 = w_pos[:, None] * path.dlam1
    i1 = s1.T @ s1 / n

    curv2 = np.where(neg, -(y + 1.0) / (path.lam2 - 1.0) ** 2, 0.0)
    j2 = (path.dlam2.T * curv2) @ path.dlam2 / n
    s2 = w_neg[:, None] * path.dlam2
    i2 = s2.T @ s2 / n

    return CovarianceBlocks(Pi_hat=pi_hat, J1_hat=j1, I1_hat=i1, J2_hat=j2, I2_hat=i2)


def _safe_inverse(matrix: np.ndarray, name: str) -> Optional[np.ndarray]:
    if not np.all(np.isfinite(matrix)):
        logger.warning(f"Block {name} has non-finite entries; standard errors unavailable")
        return None
    if np.linalg.cond(matrix) > CONDITION_LIMIT:
        logger.warning(f"Block {name} is singular; standard errors unavailable")
        return None
    return np.linalg.inv(matrix)


def sigma_from_blocks(blocks: CovarianceBlocks, order) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Block-diagonal Sigma; blocks that cannot be inverted are filled with NaN."""
    slices = dict(zip(("phi", "psi1", "psi2"), block_slices(order)))
    sigma = np.zeros((order.dim, order.dim))
    singular = []

    pieces: Dict[str, Optional[np.ndarray]] = {}
    pi_inv = _safe_inverse(blocks.Pi_hat, "phi")
    pieces["phi"] = pi_inv
    for name, j_hat, i_hat in (("psi1", blocks.J1_hat, blocks.I1_hat), ("psi2", blocks.J2_hat, blocks.I2_hat)):
        j_inv = _safe_inverse(j_hat, name)
        pieces[name] = None if j_inv is None else j_inv @ i_hat @ j_inv

    for name, piece in pieces.items():
        sl = slices[name]
        if piece is None:
            sigma[sl, sl] = np.nan
            singular.append(name)
        else:
            sigma[sl, sl] = 0.5 * (piece + piece.T)
    return sigma, tuple(singular)


def hessian_approximation(blocks: CovarianceBlocks, order) -> np.ndarray:
    """J = diag(Pi, J1, J2); cross-block entries are structurally zero."""
    slices = block_slices(order)
    j = np.zeros((order.dim, order.dim))
    for sl, block in zip(slices, (blocks.Pi_hat, blocks.J1_hat, blocks.J2_hat)):
        j[sl, sl] = block
    return j


def asymptotic_covariance(series: SeriesZ, fit: FitReport) -> FitReport:
    """Attach Pi, J1, I1, J2, I2, Sigma and standard errors to a fit."""
    path = refilter(series, fit)
    blocks = covariance_blocks(series, path)
    sigma, singular = sigma_from_blocks(blocks, fit.order)
    with np.errstate(invalid="ignore"):
        se = np.sqrt(np.diag(sigma) / fit.n)
    return replace(fit, cov_blocks=blocks, sigma_hat=sigma, se=se, singular_blocks=singular)
