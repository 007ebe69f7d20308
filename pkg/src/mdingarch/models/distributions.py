"""
Count distributions on the nonnegative and positive integers

Poisson and negative binomial laws, their shift-by-one variants on {1, 2, ...},
and the mixed difference law that places a nonnegative draw with probability
pi and a negated positive draw otherwise. All mass functions are evaluated in
log space with log-gamma; cdfs use the regularized incomplete gamma and beta
functions. Sampling is inverse-transform through the generalized inverse, so
draws for two means sharing a uniform are ordered like the means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import special

from mdingarch.core.exceptions import NumericalError, ParameterDomainError

PMF_NORMALIZATION_TOL = 1e-9
CDF_TERMINAL_TOL = 1e-12
QUANTILE_MAX_STEPS = 10_000_000
SMALLEST_UNIFORM = float(np.nextafter(0.0, 1.0))


class DistKind(str, Enum):
    POISSON = "poisson"
    SHIFTED_POISSON = "shifted_poisson"
    NEG_BINOMIAL = "neg_binomial"
    SHIFTED_NEG_BINOMIAL = "shifted_neg_binomial"

    @property
    def shift(self) -> int:
        return 1 if self in (DistKind.SHIFTED_POISSON, DistKind.SHIFTED_NEG_BINOMIAL) else 0

    @property
    def is_negative_binomial(self) -> bool:
        return self in (DistKind.NEG_BINOMIAL, DistKind.SHIFTED_NEG_BINOMIAL)


@dataclass(frozen=True)
class PosDist:
    """A count law given by its mean (and number of successes r for NB)."""

    kind: DistKind
    mean: float
    r: Optional[float] = None

    def __post_init__(self):
        lower = float(self.kind.shift)
        if not math.isfinite(self.mean) or self.mean <= lower:
            raise ParameterDomainError(
                f"{self.kind.value} requires mean > {lower:g}, got {self.mean!r}"
            )
        if self.kind.is_negative_binomial:
            if self.r is None or not math.isfinite(self.r) or self.r <= 0:
                raise ParameterDomainError(f"{self.kind.value} requires r > 0, got {self.r!r}")
        elif self.r is not None:
            raise ParameterDomainError(f"{self.kind.value} takes no r parameter")

    @classmethod
    def poisson(cls, mean: float) -> "PosDist":
        return cls(DistKind.POISSON, float(mean))

    @classmethod
    def shifted_poisson(cls, mean: float) -> "PosDist":
        return cls(DistKind.SHIFTED_POISSON, float(mean))

    @classmethod
    def neg_binomial(cls, r: float, mean: float) -> "PosDist":
        return cls(DistKind.NEG_BINOMIAL, float(mean), float(r))

    @classmethod
    def shifted_neg_binomial(cls, r: float, mean: float) -> "PosDist":
        return cls(DistKind.SHIFTED_NEG_BINOMIAL, float(mean), float(r))

    @property
    def shift(self) -> int:
        return self.kind.shift

    @property
    def base_mean(self) -> float:
        """Mean of the unshifted variable."""
        return self.mean - self.shift

    @property
    def variance(self) -> float:
        mu = self.base_mean
        if self.kind.is_negative_binomial:
            return mu + mu * mu / self.r
        return mu


# ---------------------------------------------------------------------------
# Kernels of the unshifted laws, vectorised over j and mu
# ---------------------------------------------------------------------------

def base_logpmf(j, mu, r=None):
    """log P(X = j) for Poisson(mu) (r is None) or NB(r, mean mu); -inf for j < 0."""
    j = np.asarray(j, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if r is None:
            out = special.xlogy(j, mu) - mu - special.gammaln(j + 1.0)
        else:
            r = np.asarray(r, dtype=float)
            log_total = np.log(r + mu)
            out = (
                special.gammaln(j + r)
                - special.gammaln(r)
                - special.gammaln(j + 1.0)
                + r * (np.log(r) - log_total)
                + special.xlogy(j, mu)
                - j * log_total
            )
    return np.where(j >= 0, out, -np.inf)


def base_cdf(j, mu, r=None):
    """P(X <= j) for Poisson(mu) or NB(r, mean mu); 0 for j < 0."""
    j = np.floor(np.asarray(j, dtype=float))
    mu = np.asarray(mu, dtype=float)
    safe_j = np.maximum(j, 0.0)
    if r is None:
        out = special.gammaincc(safe_j + 1.0, mu)
    else:
        r = np.asarray(r, dtype=float)
        out = special.betainc(r, safe_j + 1.0, r / (r + mu))
    return np.where(j >= 0, out, 0.0)


def _base_cdf_scalar(j: int, mu: float, r: Optional[float]) -> float:
    if j < 0:
        return 0.0
    if r is None:
        return float(special.gammaincc(j + 1.0, mu))
    return float(special.betainc(r, j + 1.0, r / (r + mu)))


def base_quantile(u: float, mu: float, r: Optional[float] = None) -> int:
    """Generalized inverse min{j >= 0 : P(X <= j) >= u} of the unshifted law.

    The scan starts at floor(mu) and walks outward one step at a time.
    """
    k = int(math.floor(mu))
    if _base_cdf_scalar(k, mu, r) >= u:
        while k > 0 and _base_cdf_scalar(k - 1, mu, r) >= u:
            k -= 1
        return k
    steps = 0
    k += 1
    while _base_cdf_scalar(k, mu, r) < u:
        k += 1
        steps += 1
        if steps > QUANTILE_MAX_STEPS:
            raise NumericalError(f"quantile scan did not terminate for u={u!r}, mean={mu!r}")
    return k


# ---------------------------------------------------------------------------
# Public operations on PosDist
# ---------------------------------------------------------------------------

def logpmf(dist: PosDist, k: int) -> float:
    return float(base_logpmf(k - dist.shift, dist.base_mean, dist.r))


def pmf(dist: PosDist, k: int) -> float:
    """P(X = k); exactly zero outside the support."""
    if k < dist.shift:
        return 0.0
    return float(np.exp(logpmf(dist, k)))


def cdf(dist: PosDist, k: int) -> float:
    """P(X <= k)."""
    return _base_cdf_scalar(int(math.floor(k)) - dist.shift, dist.base_mean, dist.r)


def quantile(dist: PosDist, u: float) -> int:
    if not 0.0 < u < 1.0:
        raise ParameterDomainError(f"quantile level must lie in (0, 1), got {u!r}")
    return dist.shift + base_quantile(u, dist.base_mean, dist.r)


def base_quantile_array(u, mu, r=None) -> np.ndarray:
    """Vectorised generalized inverse of the unshifted law."""
    u = np.asarray(u, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), u.shape)
    if r is not None:
        r = np.broadcast_to(np.asarray(r, dtype=float), u.shape)
    k = np.floor(mu)
    at_start = base_cdf(k, mu, r)

    moving = at_start >= u
    while True:
        candidates = moving & (k > 0)
        if not candidates.any():
            break
        moving = candidates & (base_cdf(k - 1.0, mu, r) >= u)
        if not moving.any():
            break
        k = np.where(moving, k - 1.0, k)

    moving = at_start < u
    while moving.any():
        k = np.where(moving, k + 1.0, k)
        moving = moving & (base_cdf(k, mu, r) < u)
    return k.astype(np.int64)


def sample(dist: PosDist, rng: np.random.Generator, size: Optional[int] = None):
    """Inverse-transform draws from `dist`, one uniform from `rng` per draw.

    Returns an int when size is None, otherwise an int64 array.
    """
    if size is None:
        u = float(rng.random())
        return quantile(dist, u if u > 0.0 else SMALLEST_UNIFORM)
    u = rng.random(size)
    u[u == 0.0] = SMALLEST_UNIFORM
    return dist.shift + base_quantile_array(u, dist.base_mean, dist.r)


def support_upper(dist: PosDist, tol: float = CDF_TERMINAL_TOL) -> int:
    """Smallest k with cdf(k) >= 1 - tol, used for truncated sums."""
    return quantile(dist, 1.0 - tol)


# ---------------------------------------------------------------------------
# Mixed difference law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixedDifferenceLaw:
    """Y = X1 with probability pi, Y = -X2 otherwise; X1 on {0,1,...}, X2 on {1,2,...}."""

    pi: float
    pos: PosDist
    neg: PosDist

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ParameterDomainError(f"pi must lie in (0, 1), got {self.pi!r}")
        if self.pos.shift != 0:
            raise ParameterDomainError("positive component must be supported on {0, 1, ...}")
        if self.neg.shift != 1:
            raise ParameterDomainError("negative component must be supported on {1, 2, ...}")

    @property
    def mean(self) -> float:
        return self.pi * self.pos.mean - (1.0 - self.pi) * self.neg.mean


def mixed_pmf(law: MixedDifferenceLaw, y: int) -> float:
    if y >= 0:
        return law.pi * pmf(law.pos, y)
    return (1.0 - law.pi) * pmf(law.neg, -y)


def mixed_cdf(law: MixedDifferenceLaw, y: int) -> float:
    """P(Y <= y)."""
    if y >= 0:
        return (1.0 - law.pi) + law.pi * cdf(law.pos, y)
    return (1.0 - law.pi) * (1.0 - cdf(law.neg, -y - 1))


def mixed_cdf_path(y, pi, lam1, lam2, r1=None, r2=None):
    """Vectorised P(Y_t <= y_t) for per-time mixed difference laws.

    The negative component is 1 + base law with mean lam2 - 1.
    """
    y = np.asarray(y, dtype=float)
    pi = np.asarray(pi, dtype=float)
    pos_part = (1.0 - pi) + pi * base_cdf(y, lam1, r1)
    # P(X2 >= -y) = 1 - P(base <= -y - 2)
    neg_part = (1.0 - pi) * (1.0 - base_cdf(-y - 2.0, np.asarray(lam2) - 1.0, r2))
    return np.where(y >= 0, pos_part, neg_part)
