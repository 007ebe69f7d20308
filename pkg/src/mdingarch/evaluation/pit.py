"""
Non-randomized PIT histograms for the fitted mixed difference law

For each t the predictive cdf of the observation gives P-_t = F_t(y_t - 1) and
P+_t = F_t(y_t); the per-observation PIT cdf is linear between them and the
histogram heights are increments of the averaged cdf over J equal bins.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from mdingarch.core.exceptions import ParameterDomainError
from mdingarch.estimation.dispersion import estimate_dispersion
from mdingarch.estimation.qmle import FitReport, refilter
from mdingarch.models.distributions import mixed_cdf_path
from mdingarch.models.parameters import Family, SeriesZ

logger = logging.getLogger(__name__)

DEFAULT_BINS = 10
BAND_Z = 1.96
TABLE_HEADER = ("bin_low", "bin_high", "height", "band_low", "band_high", "outside")


@dataclass(frozen=True)
class PitHistogram:
    J: int
    heights: np.ndarray
    band_low: float
    band_high: float
    n: int
    family: Family
    dispersion: Optional[Tuple[float, float]] = None
    zero_mass: int = 0

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.J + 1)

    @property
    def outside(self) -> np.ndarray:
        return (self.heights < self.band_low) | (self.heights > self.band_high)

    def table_rows(self) -> List[tuple]:
        edges = self.edges
        return [
            (edges[j], edges[j + 1], float(self.heights[j]), self.band_low, self.band_high, int(self.outside[j]))
            for j in range(self.J)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "J": self.J,
            "n": self.n,
            "family": self.family.value,
            "dispersion": None if self.dispersion is None else list(self.dispersion),
            "heights": self.heights.tolist(),
            "band_low": self.band_low,
            "band_high": self.band_high,
            "bins_outside_band": int(np.count_nonzero(self.outside)),
            "zero_mass_observations": self.zero_mass,
        }


def reference_band(J: int, n: int) -> Tuple[float, float]:
    """1/J +- 1.96 sqrt((1/J)(1 - 1/J)/n), the normal-approximation band for a uniform PIT."""
    expected = 1.0 / J
    half = BAND_Z * math.sqrt(expected * (1.0 - expected) / n)
    return expected - half, expected + half


def pit_from_bounds(p_lower, p_upper, J: int = DEFAULT_BINS) -> Tuple[np.ndarray, int]:
    """Histogram heights from per-observation (P-, P+) pairs, plus the zero-mass count."""
    if J < 2:
        raise ParameterDomainError(f"need at least 2 bins, got {J}")
    p_lower = np.atleast_1d(np.asarray(p_lower, dtype=float))
    p_upper = np.atleast_1d(np.asarray(p_upper, dtype=float))
    if p_lower.shape != p_upper.shape or p_lower.size == 0:
        raise ParameterDomainError("P- and P+ must be non-empty and of equal length")

    grid = np.linspace(0.0, 1.0, J + 1)[:, None]
    width = p_upper - p_lower
    zero_mass = width <= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ramps = np.clip((grid - p_lower) / np.where(zero_mass, 1.0, width), 0.0, 1.0)
    steps = (grid >= p_upper).astype(float)
    mean_cdf = np.where(zero_mass, steps, ramps).mean(axis=1)

    n_zero = int(np.count_nonzero(zero_mass))
    if n_zero:
        logger.debug(f"{n_zero} observations have zero predictive mass; using step PIT")
    return np.diff(mean_cdf), n_zero


def predictive_bounds(series: SeriesZ, fit: FitReport,
                      dispersion: Optional[Tuple[float, float]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(P-_t, P+_t) under the fitted model; Poisson when dispersion is None."""
    path = refilter(series, fit, with_gradients=False)
    r1, r2 = (None, None) if dispersion is None else dispersion
    r1 = None if r1 is None or math.isinf(r1) else r1
    r2 = None if r2 is None or math.isinf(r2) else r2
    y = series.y.astype(float)
    upper = mixed_cdf_path(y, path.pi, path.lam1, path.lam2, r1, r2)
    lower = mixed_cdf_path(y - 1.0, path.pi, path.lam1, path.lam2, r1, r2)
    return lower, upper


def pit_histogram(series: SeriesZ, fit: FitReport, family: Family = Family.POISSON, J: int = DEFAULT_BINS,
                  dispersion: Optional[Tuple[float, float]] = None) -> PitHistogram:
    """PIT histogram of the fitted model; NB dispersion is estimated by moments when not given."""
    if J < 2:
        raise ParameterDomainError(f"need at least 2 bins, got {J}")
    if family is Family.NEG_BINOMIAL and dispersion is None:
        dispersion = estimate_dispersion(series, fit).as_tuple()
        logger.info(f"Estimated dispersion r1={dispersion[0]:.4g}, r2={dispersion[1]:.4g}")
    if family is Family.POISSON:
        dispersion = None

    lower, upper = predictive_bounds(series, fit, dispersion)
    heights, zero_mass = pit_from_bounds(lower, upper, J)
    band_low, band_high = reference_band(J, series.n)
    return PitHistogram(
        J=J,
        heights=heights,
        band_low=band_low,
        band_high=band_high,
        n=series.n,
        family=family,
        dispersion=dispersion,
        zero_mass=zero_mass,
    )
