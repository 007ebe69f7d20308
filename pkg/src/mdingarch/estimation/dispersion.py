"""Moment estimators of the negative binomial dispersion on each side."""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from mdingarch.estimation.qmle import FitReport, refilter
from mdingarch.models.parameters import SeriesZ

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-10


@dataclass(frozen=True)
class DispersionEstimates:
    """r1_hat, r2_hat; infinite (and flagged) when the data show no excess variance."""

    r1_hat: float
    r2_hat: float
    r1_infinite: bool = False
    r2_infinite: bool = False

    def as_tuple(self) -> Tuple[float, float]:
        return self.r1_hat, self.r2_hat


def _invert_mean(ratios: np.ndarray, label: str) -> Tuple[float, bool]:
    average = float(np.mean(ratios))
    if not average > 0.0:
        logger.info(f"No excess variance on the {label} side (mean ratio {average:.4g}); dispersion set to infinity")
        return math.inf, True
    return 1.0 / average, False


def estimate_dispersion(series: SeriesZ, fit: FitReport) -> DispersionEstimates:
    """Inverse of the averaged studentized excess variance on each side."""
    path = refilter(series, fit, with_gradients=False)
    y = series.y.astype(float)
    pi = path.pi
    lam1 = path.lam1
    excess2 = path.lam2 - 1.0

    num1 = np.where(y >= 0, (y - lam1) ** 2, 0.0) - pi * lam1
    den1 = np.maximum(pi * lam1 ** 2, DENOMINATOR_FLOOR)
    num2 = np.where(y < 0, (y + path.lam2) ** 2, 0.0) - (1.0 - pi) * excess2
    den2 = np.maximum((1.0 - pi) * excess2 ** 2, DENOMINATOR_FLOOR)

    r1, inf1 = _invert_mean(num1 / den1, "nonnegative")
    r2, inf2 = _invert_mean(num2 / den2, "negative")
    return DispersionEstimates(r1_hat=r1, r2_hat=r2, r1_infinite=inf1, r2_infinite=inf2)
