"""
Out-of-sample evaluation of one-step sign forecasts

For t = m..n (1-based) the sign B_t is forecast from B_1..B_{t-1} by

    MAE1: the Bernoulli INGARCH probability pi_t at phi refitted on the prefix
    MAE2: the constant 0.5
    MAE3: the expanding sample mean of B_1..B_{t-1}

and the model losses are compared with each benchmark by a one-sided
Diebold-Mariano test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List

import numpy as np

from mdingarch.core.exceptions import DegenerateDataError, ParameterDomainError
from mdingarch.core.parallel import run_replicates
from mdingarch.estimation.qmle import FitOptions, fit_sign_block
from mdingarch.evaluation.diebold_mariano import DmResult, diebold_mariano
from mdingarch.models.filtering import PROB_FLOOR, sign_filter, sign_start
from mdingarch.models.parameters import SeriesZ

logger = logging.getLogger(__name__)

DEFAULT_REFIT_CADENCE = 1
DESK_REFIT_CADENCE = 25


@dataclass(frozen=True)
class SignEvalReport:
    m: int
    n_forecasts: int
    mae1: float
    mae2: float
    mae3: float
    dm_mae2: DmResult
    dm_mae3: DmResult
    refit_cadence: int = DEFAULT_REFIT_CADENCE

    @property
    def dm_p_mae2(self) -> float:
        return self.dm_mae2.p_value

    @property
    def dm_p_mae3(self) -> float:
        return self.dm_mae3.p_value

    @property
    def approximate(self) -> bool:
        return self.refit_cadence > 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "n_forecasts": self.n_forecasts,
            "mae1": self.mae1,
            "mae2": self.mae2,
            "mae3": self.mae3,
            "dm_p_mae2": self.dm_p_mae2,
            "dm_p_mae3": self.dm_p_mae3,
            "dm_mae2": self.dm_mae2.to_dict(),
            "dm_mae3": self.dm_mae3.to_dict(),
            "refit_cadence": self.refit_cadence,
            "approximate": self.approximate,
        }


def expanding_mean_forecasts(b_ind: np.ndarray, m: int) -> np.ndarray:
    """Mean of B_1..B_{t-1} for t = m..n."""
    cumulative = np.cumsum(b_ind, dtype=float)
    counts = np.arange(m - 1, b_ind.shape[0])
    return cumulative[m - 2:-1] / counts


def model_forecasts(b_ind: np.ndarray, m: int, opts: FitOptions, refit_cadence: int = DEFAULT_REFIT_CADENCE,
                    threads: int = 1) -> np.ndarray:
    """pi_t at phi fitted on B_1..B_{t-1}, refitting every `refit_cadence` forecasts."""
    n = b_ind.shape[0]
    origins = list(range(m - 1, n, refit_cadence))
    warm, _ = fit_sign_block(b_ind[: m - 1], opts)
    forecasts = np.empty(n - m + 1)

    def refit(index: int, _rng) -> np.ndarray:
        start = origins[index]
        stop = min(start + refit_cadence, n)
        train = b_ind[:start]
        phi, report = fit_sign_block(train, opts, warm_start=warm)
        if not report.converged:
            logger.warning(f"Sign refit on {start} observations did not converge: {report.message}")
        pi0 = sign_start(train, phi, opts.init)
        # pi_t uses B_1..B_{t-1} only
        pi, _ = sign_filter(b_ind[:stop], phi, pi0, opts.init, with_gradients=False)
        return np.clip(pi[start:stop], PROB_FLOOR, 1.0 - PROB_FLOOR)

    for index, values in enumerate(run_replicates(refit, len(origins), seed=0, threads=threads)):
        offset = origins[index] - (m - 1)
        forecasts[offset:offset + values.shape[0]] = values
    return forecasts


def evaluate_one(series: SeriesZ, m: int, opts: FitOptions, refit_cadence: int = DEFAULT_REFIT_CADENCE,
                 threads: int = 1) -> SignEvalReport:
    b_ind = series.b.astype(float)
    n = series.n
    if not 2 <= m <= n:
        raise ParameterDomainError(f"training size m must satisfy 2 <= m <= n, got m={m}, n={n}")
    if refit_cadence < 1:
        raise ParameterDomainError(f"refit cadence must be positive, got {refit_cadence}")
    training = b_ind[: m - 1]
    if training.min() == training.max():
        raise DegenerateDataError(f"the first {m - 1} signs are constant; cannot fit the sign model for m={m}")

    logger.info(f"Sign forecast evaluation: m={m}, forecasts={n - m + 1}, refit cadence={refit_cadence}")
    outcomes = b_ind[m - 1:]
    loss1 = np.abs(outcomes - model_forecasts(b_ind, m, opts, refit_cadence, threads))
    loss2 = np.abs(outcomes - 0.5)
    loss3 = np.abs(outcomes - expanding_mean_forecasts(b_ind, m))

    return SignEvalReport(
        m=m,
        n_forecasts=int(outcomes.shape[0]),
        mae1=float(loss1.mean()),
        mae2=float(loss2.mean()),
        mae3=float(loss3.mean()),
        dm_mae2=diebold_mariano(loss1, loss2),
        dm_mae3=diebold_mariano(loss1, loss3),
        refit_cadence=refit_cadence,
    )


def sign_forecast_eval(series: SeriesZ, m_values: Iterable[int], opts: FitOptions = FitOptions(),
                       refit_cadence: int = DEFAULT_REFIT_CADENCE, threads: int = 1) -> List[SignEvalReport]:
    """One report per training size m."""
    reports = [evaluate_one(series, int(m), opts, refit_cadence, threads) for m in m_values]
    if not reports:
        raise ParameterDomainError("at least one training size m is required")
    return reports
