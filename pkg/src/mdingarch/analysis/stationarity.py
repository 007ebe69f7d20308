"""
Stationarity analysis for mixed difference INGARCH parameters

The stability matrix stacks 2x2 blocks

    A_l = [[alpha_1l pi1 + beta_1l, alpha_1l pi0          ],
           [alpha_2l pi1,           alpha_2l pi0 + beta_2l]]

over shifted identities, where (pi1, pi0) bound P(B_t = 1) and P(B_t = 0)
from above. A spectral radius below one is sufficient for a stationary
solution with finite first moments; with i.i.d. signs it is also necessary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from mdingarch.core.exceptions import NumericalError, ParameterDomainError
from mdingarch.models.parameters import Theta

logger = logging.getLogger(__name__)

POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000
TRANSITION_TOL = 1e-12


class SignModeKind(str, Enum):
    BOUNDS = "bounds"
    IID = "iid"
    MARKOV = "markov"
    BERNOULLI_INGARCH = "bingarch"


class StationarityStatus(str, Enum):
    STATIONARY = "stationary"
    NONSTATIONARY = "nonstationary"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SignMode:
    """How the sign process enters the stability matrix."""

    kind: SignModeKind
    pi1: Optional[float] = None
    pi0: Optional[float] = None
    pi: Optional[float] = None
    transition: Optional[Tuple[float, float, float, float]] = None

    @classmethod
    def bounds(cls, pi1: float, pi0: float) -> "SignMode":
        return cls(SignModeKind.BOUNDS, pi1=float(pi1), pi0=float(pi0))

    @classmethod
    def iid(cls, pi: float) -> "SignMode":
        return cls(SignModeKind.IID, pi=float(pi))

    @classmethod
    def markov(cls, p00: float, p01: float, p10: float, p11: float) -> "SignMode":
        """p_ij = P(B_t = j | B_{t-1} = i)."""
        return cls(SignModeKind.MARKOV, transition=(float(p00), float(p01), float(p10), float(p11)))

    @classmethod
    def bernoulli_ingarch(cls) -> "SignMode":
        return cls(SignModeKind.BERNOULLI_INGARCH)


@dataclass(frozen=True)
class StabilityMatrix:
    r: int
    blocks: Tuple[np.ndarray, ...]
    companion: np.ndarray
    bounds: Tuple[float, float]


@dataclass(frozen=True)
class ConditionReport:
    rho: float
    sufficient: bool
    necessary_beta: bool
    necessary_mean: Optional[bool]
    status: StationarityStatus
    sign_mode: str
    bounds: Tuple[float, float]
    equivalence_holds: Optional[bool] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)


def sign_bounds(theta: Theta, mode: SignMode) -> Tuple[float, float]:
    """(pi1, pi0) for the given sign mode, validated."""
    if mode.kind is SignModeKind.BOUNDS:
        pi1, pi0 = mode.pi1, mode.pi0
        if pi1 is None or pi0 is None or not 0.0 < pi1 < 1.0 or not 1.0 - pi1 < pi0 < 1.0:
            raise ParameterDomainError(
                f"bounds need pi1 in (0, 1) and pi0 in (1 - pi1, 1), got ({pi1}, {pi0})"
            )
        return pi1, pi0
    if mode.kind is SignModeKind.IID:
        if mode.pi is None or not 0.0 < mode.pi < 1.0:
            raise ParameterDomainError(f"i.i.d. sign needs pi in (0, 1), got {mode.pi}")
        return mode.pi, 1.0 - mode.pi
    if mode.kind is SignModeKind.MARKOV:
        if mode.transition is None:
            raise ParameterDomainError("Markov sign mode needs transition probabilities")
        p00, p01, p10, p11 = mode.transition
        if not all(0.0 < v < 1.0 for v in mode.transition):
            raise ParameterDomainError(f"transition probabilities must lie in (0, 1), got {mode.transition}")
        if abs(p00 + p01 - 1.0) > TRANSITION_TOL or abs(p10 + p11 - 1.0) > TRANSITION_TOL:
            raise ParameterDomainError("transition rows must sum to one")
        return max(p01, p11), max(p10, p00)
    phi = theta.phi
    return phi.a + phi.b + phi.c, 1.0 - phi.c


def build_matrix(theta: Theta, sign_mode: SignMode) -> StabilityMatrix:
    pi1, pi0 = sign_bounds(theta, sign_mode)
    order = theta.order
    r = order.r
    alpha1 = np.zeros(r)
    alpha2 = np.zeros(r)
    beta1 = np.zeros(r)
    beta2 = np.zeros(r)
    alpha1[:order.q] = theta.psi1.alpha
    alpha2[:order.q] = theta.psi2.alpha
    beta1[:order.p] = theta.psi1.beta
    beta2[:order.p] = theta.psi2.beta

    blocks = tuple(
        np.array([
            [alpha1[l] * pi1 + beta1[l], alpha1[l] * pi0],
            [alpha2[l] * pi1, alpha2[l] * pi0 + beta2[l]],
        ])
        for l in range(r)
    )
    companion = np.zeros((2 * r, 2 * r))
    companion[:2, :] = np.hstack(blocks)
    if r > 1:
        companion[2:, :-2] = np.eye(2 * (r - 1))
    return StabilityMatrix(r=r, blocks=blocks, companion=companion, bounds=(pi1, pi0))


def spectral_radius(m, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER,
                    fallback: bool = True) -> float:
    """Largest eigenvalue modulus.

    Nonnegative matrices use power iteration on m + I from a positive start,
    stopping when the Collatz-Wielandt bounds min_i (Mx)_i/x_i <= rho + 1 <=
    max_i (Mx)_i/x_i agree to `tol`. Matrices with negative entries, and
    nonnegative ones whose bracket does not close, go to numpy.linalg.eigvals
    (or raise NumericalError when fallback is False).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterDomainError(f"spectral radius needs a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterDomainError("spectral radius needs finite entries")
    size = m.shape[0]
    if size == 0:
        return 0.0
    if np.any(m < 0):
        return float(np.max(np.abs(np.linalg.eigvals(m))))

    shifted = m + np.eye(size)
    x = np.full(size, 1.0 / size)
    lo = hi = math.nan
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * max(1.0, hi):
            return max(0.0, 0.5 * (lo + hi) - 1.0)
        x = y / y.sum()
        # reducible matrices can drive components of x to zero
        if x.min() <= 0.0:
            break

    residual = hi - lo
    if not fallback:
        raise NumericalError(f"power iteration did not converge in {max_iter} iterations", residual)
    logger.debug(f"Power iteration bracket still {residual:.3e} wide, using eigvals")
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def closed_form_rho(theta: Theta, pi: float) -> float:
    """Spectral radius of the i.i.d.-sign stability matrix when p = q = 1."""
    if (theta.order.p, theta.order.q) != (1, 1):
        raise ParameterDomainError(f"closed form needs p = q = 1, got p={theta.order.p}, q={theta.order.q}")
    if not 0.0 < pi < 1.0:
        raise ParameterDomainError(f"pi must lie in (0, 1), got {pi}")
    a1, b1 = theta.psi1.alpha[0], theta.psi1.beta[0]
    a2, b2 = theta.psi2.alpha[0], theta.psi2.beta[0]
    d1 = a1 * pi + b1
    d2 = a2 * (1.0 - pi) + b2
    return 0.5 * (d1 + d2 + math.sqrt((d1 - d2) ** 2 + 4.0 * a1 * a2 * pi * (1.0 - pi)))


def _persistence_sum(theta: Theta, pi: float) -> float:
    psi1, psi2 = theta.psi1, theta.psi2
    return (
        pi * sum(psi1.alpha) / (1.0 - sum(psi1.beta))
        + (1.0 - pi) * sum(psi2.alpha) / (1.0 - sum(psi2.beta))
    )


def check_conditions(theta: Theta, sign_mode: SignMode) -> ConditionReport:
    matrix = build_matrix(theta, sign_mode)
    rho = spectral_radius(matrix.companion)
    sufficient = rho < 1.0
    necessary_beta = sum(theta.psi1.beta) < 1.0 and sum(theta.psi2.beta) < 1.0
    notes = []

    necessary_mean = None
    equivalence = None
    is_iid = sign_mode.kind is SignModeKind.IID
    if is_iid:
        # the weighted persistence sum is undefined once a beta sum reaches 1
        necessary_mean = necessary_beta and _persistence_sum(theta, sign_mode.pi) < 1.0
        if (theta.order.p, theta.order.q) == (1, 1):
            equivalence = (necessary_beta and necessary_mean) == sufficient
            if not equivalence:
                notes.append("explicit conditions disagree with the spectral condition")

    if sufficient:
        status = StationarityStatus.STATIONARY
    elif is_iid or not necessary_beta:
        status = StationarityStatus.NONSTATIONARY
    else:
        status = StationarityStatus.INCONCLUSIVE
        notes.append("spectral condition fails but it is only sufficient for this sign process")

    return ConditionReport(
        rho=rho,
        sufficient=sufficient,
        necessary_beta=necessary_beta,
        necessary_mean=necessary_mean,
        status=status,
        sign_mode=sign_mode.kind.value,
        bounds=matrix.bounds,
        equivalence_holds=equivalence,
        notes=tuple(notes),
    )


def stationary_mean(theta: Theta, pi: float) -> Tuple[float, float]:
    """(E|Y_t|, E Y_t) under an i.i.d. sign with P(B_t = 1) = pi."""
    if not 0.0 < pi < 1.0:
        raise ParameterDomainError(f"pi must lie in (0, 1), got {pi}")
    psi1, psi2 = theta.psi1, theta.psi2
    slack1 = 1.0 - sum(psi1.beta)
    slack2 = 1.0 - sum(psi2.beta)
    persistence = _persistence_sum(theta, pi)
    if slack1 <= 0 or slack2 <= 0 or persistence >= 1.0:
        raise ParameterDomainError("parameters admit no stationary solution with finite mean")

    e_abs_y = (pi * psi1.omega / slack1 + (1.0 - pi) * psi2.omega / slack2) / (1.0 - persistence)
    e_lam1 = (psi1.omega + sum(psi1.alpha) * e_abs_y) / slack1
    e_lam2 = (psi2.omega + sum(psi2.alpha) * e_abs_y) / slack2
    return e_abs_y, pi * e_lam1 - (1.0 - pi) * e_lam2
