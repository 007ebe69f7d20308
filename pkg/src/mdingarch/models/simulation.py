"""
Trajectory simulation for linear and log-linear mixed difference INGARCH models

At each step the sign B_t is drawn from the sign process, both intensities are
updated, and Y_t = X_1t if B_t = 1 and Y_t = -X_2t otherwise, with X_st drawn by
inverse transform from the conditional family with mean lambda_st. All
uniforms for a run are drawn up front so the trajectory depends only on the
stream.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from mdingarch.analysis.stationarity import SignMode, StationarityStatus, check_conditions
from mdingarch.core.exceptions import DataFormatError, ParameterDomainError, SimulationDivergedError
from mdingarch.models.distributions import SMALLEST_UNIFORM, base_quantile
from mdingarch.models.parameters import Family, SeriesZ, Theta

logger = logging.getLogger(__name__)

MAX_INTENSITY = 1e12
EXCESS_FLOOR = 1e-10


class Linkage(str, Enum):
    LINEAR = "linear"
    LOG_LINEAR = "log-linear"


class SignProcess(str, Enum):
    IID = "iid"
    BERNOULLI_INGARCH = "bingarch"


@dataclass(frozen=True)
class DgpSpec:
    """A data-generating process.

    Negative binomial draws use either fixed numbers of successes (r1, r2) or a
    fixed success probability nb_p, in which case the number of successes at
    time t is nb_p * m / (1 - nb_p) for base mean m (lambda_1t, or lambda_2t - 1
    on the shifted side).
    """

    theta: Theta
    family: Family = Family.POISSON
    linkage: Linkage = Linkage.LINEAR
    sign: SignProcess = SignProcess.BERNOULLI_INGARCH
    pi: Optional[float] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    nb_p: Optional[float] = None

    def __post_init__(self):
        if self.sign is SignProcess.IID and (self.pi is None or not 0.0 < self.pi < 1.0):
            raise ParameterDomainError(f"i.i.d. sign needs pi in (0, 1), got {self.pi}")
        if self.family is Family.NEG_BINOMIAL:
            fixed_r = self.r1 is not None and self.r2 is not None
            if fixed_r == (self.nb_p is not None):
                raise ParameterDomainError("negative binomial DGP needs either r1 and r2 or nb_p")
            if fixed_r and (self.r1 <= 0 or self.r2 <= 0):
                raise ParameterDomainError(f"r1, r2 must be positive, got {self.r1}, {self.r2}")
            if self.nb_p is not None and not 0.0 < self.nb_p < 1.0:
                raise ParameterDomainError(f"nb_p must lie in (0, 1), got {self.nb_p}")

    @property
    def sign_mode(self) -> SignMode:
        if self.sign is SignProcess.IID:
            return SignMode.iid(self.pi)
        return SignMode.bernoulli_ingarch()

    def to_dict(self) -> dict:
        data = self.theta.to_dict()
        data.update({
            "family": self.family.value,
            "linkage": self.linkage.value,
            "sign": self.sign.value,
            "pi": self.pi,
            "r1": self.r1,
            "r2": self.r2,
            "nb_p": self.nb_p,
        })
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "DgpSpec":
        try:
            return cls(
                theta=Theta.from_dict(data),
                family=Family(data.get("family", Family.POISSON.value)),
                linkage=Linkage(data.get("linkage", Linkage.LINEAR.value)),
                sign=SignProcess(data.get("sign", SignProcess.BERNOULLI_INGARCH.value)),
                pi=data.get("pi"),
                r1=data.get("r1"),
                r2=data.get("r2"),
                nb_p=data.get("nb_p"),
            )
        except ValueError as exc:
            if isinstance(exc, ParameterDomainError):
                raise
            raise DataFormatError(f"malformed DGP document: {exc}") from exc


_REFERENCE_THETA = Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.3, 0.3, 2.0, 0.3, 0.3)

PRESETS: Dict[str, DgpSpec] = {
    "pois": DgpSpec(_REFERENCE_THETA),
    "nb": DgpSpec(_REFERENCE_THETA, family=Family.NEG_BINOMIAL, nb_p=0.5),
    "loglinear": DgpSpec(
        Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.2, 0.2, 2.0, 0.2, 0.2),
        linkage=Linkage.LOG_LINEAR,
    ),
    "loglinear-nb": DgpSpec(
        Theta.linear11(0.2, 0.2, 0.2, 1.0, 0.2, 0.2, 2.0, 0.2, 0.2),
        family=Family.NEG_BINOMIAL,
        linkage=Linkage.LOG_LINEAR,
        nb_p=0.5,
    ),
    "pois-iid": DgpSpec(_REFERENCE_THETA, sign=SignProcess.IID, pi=0.5),
}

# Alternate names of the simulation-study designs
PRESET_ALIASES: Dict[str, str] = {
    "sec6-pois": "pois",
    "sec6-nb": "nb",
    "sec6-loglinear": "loglinear",
}

PRESET_NAMES: Tuple[str, ...] = tuple(sorted([*PRESETS, *PRESET_ALIASES]))


def preset(name: str) -> DgpSpec:
    try:
        return PRESETS[PRESET_ALIASES.get(name, name)]
    except KeyError:
        raise ParameterDomainError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None


def check_simulation_stationarity(spec: DgpSpec):
    """Refuse nonstationary linear DGPs; warn when only the sufficient condition fails."""
    if spec.linkage is not Linkage.LINEAR:
        return None
    report = check_conditions(spec.theta, spec.sign_mode)
    if report.status is StationarityStatus.NONSTATIONARY:
        raise ParameterDomainError(
            f"DGP is not stationary (spectral radius {report.rho:.6g}); refusing to simulate"
        )
    if report.status is StationarityStatus.INCONCLUSIVE:
        logger.warning(
            f"Sufficient stationarity condition fails (spectral radius {report.rho:.6g}); "
            "simulating anyway"
        )
    return report


def _draw(u: float, mean: float, shift: int, spec: DgpSpec, fixed_r: Optional[float]) -> int:
    base_mean = mean - shift
    if spec.family is Family.POISSON:
        return shift + base_quantile(u, base_mean)
    r = fixed_r if spec.nb_p is None else spec.nb_p * base_mean / (1.0 - spec.nb_p)
    return shift + base_quantile(u, base_mean, r)


def simulate(spec: DgpSpec, n: int, burn_in: int = 0, rng: Optional[np.random.Generator] = None,
             check_stationarity: bool = True) -> SeriesZ:
    """Simulate n observations after discarding burn_in; deterministic given rng."""
    if n < 1 or burn_in < 0:
        raise ParameterDomainError(f"need n >= 1 and burn_in >= 0, got n={n}, burn_in={burn_in}")
    if rng is None:
        rng = np.random.default_rng()
    if check_stationarity:
        check_simulation_stationarity(spec)

    theta = spec.theta
    order = theta.order
    total = burn_in + n
    u_sign = rng.random(total)
    u_draw = rng.random(total)
    u_draw[u_draw == 0.0] = SMALLEST_UNIFORM

    c, a, b = theta.phi.as_tuple()
    blocks = (theta.psi1, theta.psi2)
    log_linear = spec.linkage is Linkage.LOG_LINEAR

    # Per-side lag buffers, most recent first: intensities (or log intensities)
    feedback = []
    for psi in blocks:
        start = psi.omega / (1.0 - sum(psi.beta))
        feedback.append(deque([start] * order.p, maxlen=order.p))
    y_lags = deque([0.0] * order.q, maxlen=order.q)

    pi_prev = c / (1.0 - b)
    b_prev = 1
    out = np.empty(total, dtype=np.int64)

    for t in range(total):
        if spec.sign is SignProcess.IID:
            pi_t = spec.pi
        else:
            pi_t = c + a * b_prev + b * pi_prev

        lam = []
        for side, psi in enumerate(blocks):
            if log_linear:
                level = psi.omega + sum(al * math.log(v + 1.0) for al, v in zip(psi.alpha, y_lags))
                level += sum(be * v for be, v in zip(psi.beta, feedback[side]))
                value = math.exp(level) if level < 700.0 else math.inf
            else:
                value = psi.omega + sum(al * v for al, v in zip(psi.alpha, y_lags))
                value += sum(be * v for be, v in zip(psi.beta, feedback[side]))
            if not math.isfinite(value) or value > MAX_INTENSITY:
                raise SimulationDivergedError(t + 1, value)
            lam.append(value)
        lam1 = lam[0]
        lam2 = max(lam[1], 1.0 + EXCESS_FLOOR)

        b_t = 1 if u_sign[t] < pi_t else 0
        if b_t:
            y_t = _draw(u_draw[t], lam1, 0, spec, spec.r1)
        else:
            y_t = -_draw(u_draw[t], lam2, 1, spec, spec.r2)
        out[t] = y_t

        if order.p:
            feedback[0].appendleft(math.log(lam1) if log_linear else lam1)
            feedback[1].appendleft(math.log(lam2) if log_linear else lam2)
        if order.q:
            y_lags.appendleft(float(abs(y_t)))
        pi_prev = pi_t
        b_prev = b_t

    return SeriesZ(out[burn_in:])
