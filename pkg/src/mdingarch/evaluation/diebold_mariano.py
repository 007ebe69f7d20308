"""One-sided Diebold-Mariano test with a Bartlett-kernel long-run variance."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from scipy.stats import norm

from mdingarch.core.exceptions import ParameterDomainError

logger = logging.getLogger(__name__)

MIN_LENGTH = 30


class Alternative(str, Enum):
    LESS = "less"


@dataclass(frozen=True)
class DmResult:
    stat: float
    p_value: float
    mean_diff: float
    lrv: float
    lags: int
    n_obs: int
    degenerate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stat": self.stat,
            "p_value": self.p_value,
            "mean_diff": self.mean_diff,
            "lrv": self.lrv,
            "lags": self.lags,
            "n_obs": self.n_obs,
            "degenerate": self.degenerate,
        }


def bartlett_bandwidth(n: int) -> int:
    """floor(T^(1/3)), with a guard against floating error at perfect cubes."""
    lags = int(math.floor(n ** (1.0 / 3.0)))
    while (lags + 1) ** 3 <= n:
        lags += 1
    return lags


def long_run_variance(d: np.ndarray, lags: int) -> float:
    """gamma_0 + 2 sum_j (1 - j/(lags+1)) gamma_j of the demeaned series."""
    n = d.shape[0]
    centered = d - d.mean()
    lrv = centered @ centered / n
    for j in range(1, min(lags, n - 1) + 1):
        weight = 1.0 - j / (lags + 1.0)
        lrv += 2.0 * weight * (centered[j:] @ centered[:-j]) / n
    return max(float(lrv), 0.0)


def diebold_mariano(loss_a, loss_b, alternative: Alternative = Alternative.LESS,
                    lags: Optional[int] = None) -> DmResult:
    """Test H0: E(loss_a - loss_b) = 0 against H1: E(loss_a - loss_b) < 0.

    A zero long-run variance of the differential is reported as degenerate with p = 1.
    """
    loss_a = np.asarray(loss_a, dtype=float)
    loss_b = np.asarray(loss_b, dtype=float)
    if loss_a.shape != loss_b.shape or loss_a.ndim != 1:
        raise ParameterDomainError(f"loss vectors must be 1-D and of equal length: {loss_a.shape} vs {loss_b.shape}")
    n = loss_a.shape[0]
    if n < MIN_LENGTH:
        raise ParameterDomainError(f"need at least {MIN_LENGTH} losses, got {n}")
    if alternative is not Alternative.LESS:
        raise ParameterDomainError(f"unsupported alternative: {alternative}")

    d = loss_a - loss_b
    lags = bartlett_bandwidth(n) if lags is None else lags
    mean_diff = float(d.mean())
    lrv = long_run_variance(d, lags)
    if lrv <= 0.0:
        logger.info("Loss differential has zero long-run variance; Diebold-Mariano test is degenerate")
        return DmResult(stat=0.0, p_value=1.0, mean_diff=mean_diff, lrv=lrv, lags=lags, n_obs=n, degenerate=True)

    stat = mean_diff / math.sqrt(lrv / n)
    return DmResult(stat=stat, p_value=float(norm.cdf(stat)), mean_diff=mean_diff, lrv=lrv, lags=lags, n_obs=n)
