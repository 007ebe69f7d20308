"""
Desk-scale acceptance suite

Each check simulates from the reference data-generating processes, runs the
library end to end and compares the outcome with a fixed threshold. The scale
picks replication counts and sample sizes: ``smoke`` finishes in seconds and is
only a wiring check, ``desk`` is the default acceptance run, and ``full``
matches the replication counts of the reference simulation study.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from mdingarch.analysis.stationarity import (
    SignMode,
    check_conditions,
    closed_form_rho,
    stationary_mean,
)
from mdingarch.core.exceptions import MdIngarchError
from mdingarch.core.logging_config import PerformanceLogger
from mdingarch.core.parallel import run_replicates
from mdingarch.diagnostics.portmanteau import goodness_of_fit
from mdingarch.estimation.covariance import covariance_blocks
from mdingarch.estimation.qmle import FitOptions, FitReport, fit, quasi_loglik, refilter, score
from mdingarch.evaluation.pit import pit_histogram
from mdingarch.models.distributions import (
    MixedDifferenceLaw,
    PosDist,
    cdf,
    mixed_pmf,
    pmf,
    quantile,
    support_upper,
)
from mdingarch.models.parameters import Family, ModelOrder, Theta, parameter_names
from mdingarch.models.simulation import DgpSpec, preset, simulate

logger = logging.getLogger(__name__)

BURN_IN = 500
LEVELS = (0.01, 0.05, 0.10)


class Scale(str, Enum):
    SMOKE = "smoke"
    DESK = "desk"
    FULL = "full"


@dataclass(frozen=True)
class ScaleSettings:
    oracle_draws: int
    mean_n: int
    bias_reps: int
    bias_n: int
    rmse_reps: int
    rmse_n: Tuple[int, int]
    efficiency_n: int
    gof_reps: int
    gof_n: int
    power_n: int
    gof_B: int
    gradient_points: int
    gradient_n: int
    pit_n: int


SCALES: Dict[Scale, ScaleSettings] = {
    Scale.SMOKE: ScaleSettings(
        oracle_draws=200, mean_n=20_000, bias_reps=4, bias_n=600, rmse_reps=3, rmse_n=(300, 1200),
        efficiency_n=1200, gof_reps=3, gof_n=300, power_n=300, gof_B=100, gradient_points=5,
        gradient_n=200, pit_n=5_000,
    ),
    Scale.DESK: ScaleSettings(
        oracle_draws=10_000, mean_n=1_000_000, bias_reps=200, bias_n=3600, rmse_reps=100,
        rmse_n=(1800, 7200), efficiency_n=7200, gof_reps=300, gof_n=600, power_n=900, gof_B=500,
        gradient_points=50, gradient_n=400, pit_n=100_000,
    ),
    Scale.FULL: ScaleSettings(
        oracle_draws=100_000, mean_n=1_000_000, bias_reps=1000, bias_n=3600, rmse_reps=1000,
        rmse_n=(1800, 7200), efficiency_n=7200, gof_reps=1000, gof_n=600, power_n=900, gof_B=500,
        gradient_points=200, gradient_n=400, pit_n=100_000,
    ),
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    metrics: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "seconds": self.seconds,
            "error": self.error,
            "metrics": self.metrics,
        }


@dataclass(frozen=True)
class RunContext:
    settings: ScaleSettings
    seed: int
    threads: int

    def child_seed(self, offset: int) -> int:
        return int(np.random.SeedSequence(self.seed, spawn_key=(10_000 + offset,)).generate_state(1, np.uint64)[0])


def oracle_fit(theta: Theta, n: int) -> FitReport:
    """A FitReport holding known parameters, for evaluating the true model."""
    return FitReport(theta_hat=theta, n=n, loglik=math.nan, loglik_full=math.nan, convergence={},
                     options=FitOptions(compute_covariance=False))


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def _random_linear11(rng: np.random.Generator) -> Tuple[Theta, float]:
    a1, b1, a2, b2 = rng.uniform(0.0, 0.99, size=4)
    theta = Theta.linear11(
        0.2, 0.2, 0.2,
        rng.uniform(0.1, 3.0), a1, b1,
        1.0 - b2 + rng.uniform(0.1, 3.0), a2, b2,
    )
    return theta, float(rng.uniform(0.05, 0.95))


def check_stationarity_oracle(ctx: RunContext) -> CheckResult:
    rng = np.random.default_rng(ctx.child_seed(1))
    worst = 0.0
    counterexamples = 0
    for _ in range(ctx.settings.oracle_draws):
        theta, pi = _random_linear11(rng)
        report = check_conditions(theta, SignMode.iid(pi))
        worst = max(worst, abs(closed_form_rho(theta, pi) - report.rho))
        if not report.equivalence_holds:
            counterexamples += 1
    return CheckResult(
        "stationarity_oracle",
        worst < 1e-10 and counterexamples == 0,
        {"draws": ctx.settings.oracle_draws, "max_abs_diff": worst, "counterexamples": counterexamples},
    )


def _batch_means_se(values: np.ndarray, batches: int = 100) -> float:
    usable = values[: values.size - values.size % batches].reshape(batches, -1).mean(axis=1)
    return float(usable.std(ddof=1) / math.sqrt(batches))


def check_mean_formula(ctx: RunContext) -> CheckResult:
    spec = preset("pois-iid")
    series = simulate(spec, ctx.settings.mean_n, BURN_IN, np.random.default_rng(ctx.child_seed(2)))
    e_abs_y, e_y = stationary_mean(spec.theta, spec.pi)
    abs_y = np.abs(series.y).astype(float)
    se = _batch_means_se(abs_y)
    observed = float(abs_y.mean())
    return CheckResult(
        "mean_formula",
        abs(observed - e_abs_y) <= 3.0 * se,
        {"n": series.n, "analytic_e_abs_y": e_abs_y, "analytic_e_y": e_y, "simulated": observed, "mc_se": se},
    )


def _fit_replicates(ctx: RunContext, spec: DgpSpec, n: int, reps: int, offset: int,
                    opts: FitOptions) -> Tuple[np.ndarray, np.ndarray, int]:
    def task(_index: int, rng: np.random.Generator):
        try:
            series = simulate(spec, n, BURN_IN, rng)
            report = fit(series, ModelOrder(1, 1), opts)
        except MdIngarchError as exc:
            logger.debug(f"Replicate failed: {exc}")
            return None
        se = report.se if report.se is not None else np.full(report.d, np.nan)
        return report.theta_hat.vector(), se

    results = run_replicates(task, reps, ctx.child_seed(offset), ctx.threads, progress_every=max(reps // 10, 1))
    ok = [r for r in results if r is not None]
    if not ok:
        return np.empty((0, 9)), np.empty((0, 9)), reps
    estimates = np.array([r[0] for r in ok])
    errors = np.array([r[1] for r in ok])
    return estimates, errors, reps - len(ok)


def check_estimator_bias(ctx: RunContext) -> List[CheckResult]:
    s = ctx.settings
    spec = preset("pois")
    truth = spec.theta.vector()
    names = parameter_names(spec.theta.order)

    estimates, errors, failed = _fit_replicates(ctx, spec, s.bias_n, s.bias_reps, 3, FitOptions())
    bias = estimates.mean(axis=0) - truth
    sd = estimates.std(axis=0, ddof=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.nanmean(errors, axis=0) / sd

    no_cov = FitOptions(compute_covariance=False)
    small, _, failed_small = _fit_replicates(ctx, spec, s.rmse_n[0], s.rmse_reps, 4, no_cov)
    large, _, failed_large = _fit_replicates(ctx, spec, s.rmse_n[1], s.rmse_reps, 5, no_cov)
    rmse_small = np.sqrt(((small - truth) ** 2).mean(axis=0))
    rmse_large = np.sqrt(((large - truth) ** 2).mean(axis=0))

    bias_ok = bool(estimates.shape[0] > 1 and np.all(np.abs(bias) < 0.05))
    rmse_ok = bool(small.shape[0] and large.shape[0] and np.all(rmse_large < rmse_small))
    se_ok = bool(np.all((ratio >= 0.7) & (ratio <= 1.4)))
    return [
        CheckResult("estimator_bias", bias_ok and rmse_ok, {
            "n": s.bias_n,
            "replications": s.bias_reps,
            "failed": failed,
            "bias": dict(zip(names, bias)),
            "rmse_small_n": dict(zip(names, rmse_small)),
            "rmse_large_n": dict(zip(names, rmse_large)),
            "rmse_sizes": list(s.rmse_n),
            "rmse_failed": failed_small + failed_large,
        }),
        CheckResult("se_calibration", se_ok, {"n": s.bias_n, "se_to_sd_ratio": dict(zip(names, ratio))}),
    ]


def check_poisson_efficiency(ctx: RunContext) -> CheckResult:
    spec = preset("pois")
    series = simulate(spec, ctx.settings.efficiency_n, BURN_IN, np.random.default_rng(ctx.child_seed(6)))
    report = fit(series, ModelOrder(1, 1), FitOptions(compute_covariance=False))
    blocks = covariance_blocks(series, refilter(series, report))
    distances = {
        side: float(np.linalg.norm(i_hat - j_hat) / np.linalg.norm(j_hat))
        for side, i_hat, j_hat in (("1", blocks.I1_hat, blocks.J1_hat), ("2", blocks.I2_hat, blocks.J2_hat))
    }
    return CheckResult(
        "poisson_efficiency",
        all(v < 0.1 for v in distances.values()),
        {"n": series.n, "relative_frobenius": distances},
    )


def _gof_rates(ctx: RunContext, spec: DgpSpec, n: int, offset: int) -> Tuple[Dict[str, Dict[str, float]], int]:
    s = ctx.settings

    def task(_index: int, rng: np.random.Generator):
        try:
            series = simulate(spec, n, BURN_IN, rng)
            report = fit(series, ModelOrder(1, 1), FitOptions(compute_covariance=False))
            gof = goodness_of_fit(series, report, k=10, B=s.gof_B, seed=int(rng.integers(2**63)), threads=1)
        except MdIngarchError as exc:
            logger.debug(f"Replicate failed: {exc}")
            return None
        return gof.p1, gof.p2

    results = [r for r in run_replicates(task, s.gof_reps, ctx.child_seed(offset), ctx.threads,
                                         progress_every=max(s.gof_reps // 10, 1)) if r is not None]
    p = np.array(results, dtype=float).reshape(-1, 2)
    rates = {
        name: {f"{level:.2f}": float(np.nanmean(p[:, col] < level)) if p.size else math.nan for level in LEVELS}
        for col, name in ((0, "p1"), (1, "p2"))
    }
    return rates, s.gof_reps - len(results)


def check_portmanteau(ctx: RunContext) -> CheckResult:
    s = ctx.settings
    size, failed_size = _gof_rates(ctx, preset("pois"), s.gof_n, 7)
    power, failed_power = _gof_rates(ctx, preset("loglinear"), s.power_n, 8)
    p1_size, p2_size = size["p1"]["0.05"], size["p2"]["0.05"]
    passed = (
        0.02 <= p1_size <= 0.09
        and p2_size <= 0.07
        and power["p1"]["0.05"] >= p1_size + 0.10
        and power["p2"]["0.05"] >= p2_size + 0.10
    )
    return CheckResult("portmanteau_size_power", passed, {
        "replications": s.gof_reps,
        "bootstrap": s.gof_B,
        "size_n": s.gof_n,
        "power_n": s.power_n,
        "size": size,
        "power": power,
        "failed": failed_size + failed_power,
    })


def _random_interior_theta(rng: np.random.Generator) -> Theta:
    a, b = rng.uniform(0.05, 0.35, size=2)
    alphas = rng.uniform(0.05, 0.4, size=2)
    betas = rng.uniform(0.05, 0.5, size=2)
    return Theta.linear11(
        rng.uniform(0.1, 0.25), a, b,
        rng.uniform(0.5, 2.0), alphas[0], betas[0],
        1.0 - betas[1] + rng.uniform(0.5, 2.0), alphas[1], betas[1],
    )


def score_gradient_error(series, theta: Theta, step: float = 1e-6) -> float:
    """Largest relative gap between the analytic score and central differences."""
    analytic = score(series, theta)
    base = theta.vector()
    worst = 0.0
    for j in range(base.size):
        h = step * max(1.0, abs(base[j]))
        up, down = base.copy(), base.copy()
        up[j] += h
        down[j] -= h
        numeric = (
            quasi_loglik(series, Theta.from_vector(up, theta.order, validate=False))
            - quasi_loglik(series, Theta.from_vector(down, theta.order, validate=False))
        ) / (2.0 * h)
        worst = max(worst, abs(analytic[j] - numeric) / max(1.0, abs(numeric)))
    return worst


def check_gradients(ctx: RunContext) -> CheckResult:
    rng = np.random.default_rng(ctx.child_seed(9))
    worst = 0.0
    cross_block = 0.0
    for _ in range(ctx.settings.gradient_points):
        theta = _random_interior_theta(rng)
        series = simulate(DgpSpec(theta), ctx.settings.gradient_n, BURN_IN, rng, check_stationarity=False)
        worst = max(worst, score_gradient_error(series, theta))
        shifted = theta.vector()
        shifted[3:] *= 1.01
        moved = score(series, Theta.from_vector(shifted, theta.order, validate=False))
        cross_block = max(cross_block, float(np.max(np.abs(moved[:3] - score(series, theta)[:3]))))
    return CheckResult(
        "gradient_correctness",
        worst < 1e-5 and cross_block == 0.0,
        {"points": ctx.settings.gradient_points, "max_relative_error": worst, "cross_block_change": cross_block},
    )


def check_distribution_kernels(ctx: RunContext) -> CheckResult:
    rng = np.random.default_rng(ctx.child_seed(10))
    worst_norm = 0.0
    round_trip_failures = 0
    order_failures = 0
    worst_mean = 0.0
    for _ in range(50):
        lam = float(rng.uniform(1.05, 30.0))
        r = float(rng.uniform(0.3, 10.0))
        for dist in (PosDist.poisson(lam), PosDist.shifted_poisson(lam), PosDist.neg_binomial(r, lam),
                     PosDist.shifted_neg_binomial(r, lam)):
            upper = support_upper(dist)
            total = sum(pmf(dist, k) for k in range(upper + 1))
            worst_norm = max(worst_norm, abs(total - 1.0))
            for u in rng.uniform(0.01, 0.99, size=5):
                k = quantile(dist, float(u))
                if not (cdf(dist, k) >= u and (k == dist.kind.shift or cdf(dist, k - 1) < u)):
                    round_trip_failures += 1
        # larger intensity gives stochastically larger counts
        lower, higher = PosDist.poisson(lam), PosDist.poisson(lam + 0.5)
        if any(cdf(higher, k) > cdf(lower, k) + 1e-12 for k in range(support_upper(higher) + 1)):
            order_failures += 1
        law = MixedDifferenceLaw(float(rng.uniform(0.1, 0.9)), PosDist.poisson(lam), PosDist.shifted_poisson(lam + 1))
        span = range(-support_upper(law.neg) - 1, support_upper(law.pos) + 1)
        worst_mean = max(worst_mean, abs(sum(y * mixed_pmf(law, y) for y in span) - law.mean))
    return CheckResult(
        "distribution_kernels",
        worst_norm < 1e-9 and round_trip_failures == 0 and order_failures == 0 and worst_mean < 1e-8,
        {
            "max_normalization_error": worst_norm,
            "round_trip_failures": round_trip_failures,
            "stochastic_order_failures": order_failures,
            "max_mixture_mean_error": worst_mean,
        },
    )


def check_pit_calibration(ctx: RunContext) -> CheckResult:
    n = ctx.settings.pit_n
    spec = preset("pois")
    series = simulate(spec, n, BURN_IN, np.random.default_rng(ctx.child_seed(11)))
    calibrated = pit_histogram(series, oracle_fit(spec.theta, n), Family.POISSON)

    overdispersed = DgpSpec(spec.theta, family=Family.NEG_BINOMIAL, r1=0.8, r2=0.8)
    nb_series = simulate(overdispersed, n, BURN_IN, np.random.default_rng(ctx.child_seed(12)))
    misfit = pit_histogram(nb_series, fit(nb_series, ModelOrder(1, 1), FitOptions(compute_covariance=False)))
    inside = int(np.count_nonzero(calibrated.outside))
    outside = int(np.count_nonzero(misfit.outside))
    return CheckResult("pit_calibration", inside == 0 and outside >= 1, {
        "n": n,
        "true_model_heights": calibrated.heights,
        "true_model_bins_outside": inside,
        "poisson_on_nb_heights": misfit.heights,
        "poisson_on_nb_bins_outside": outside,
        "band": [calibrated.band_low, calibrated.band_high],
    })


CHECKS: Tuple[Callable[[RunContext], Any], ...] = (
    check_stationarity_oracle,
    check_mean_formula,
    check_estimator_bias,
    check_poisson_efficiency,
    check_portmanteau,
    check_gradients,
    check_distribution_kernels,
    check_pit_calibration,
)


def run_suite(scale: Scale = Scale.DESK, seed: int = 0, threads: int = 1,
              only: Optional[List[str]] = None) -> List[CheckResult]:
    ctx = RunContext(SCALES[scale], seed, threads)
    perf = PerformanceLogger(logger)
    results: List[CheckResult] = []
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        if only and name not in only:
            continue
        perf.start_timer(name)
        try:
            outcome = check(ctx)
        except MdIngarchError as exc:
            logger.error(f"Check {name} failed with an error: {exc}")
            outcome = CheckResult(name, False, error=str(exc))
        seconds = perf.end_timer(name)
        for result in outcome if isinstance(outcome, list) else [outcome]:
            result.seconds = seconds
            results.append(result)
    perf.log_memory("Memory after acceptance suite")
    return results


def format_table(results: List[CheckResult]) -> str:
    width = max((len(r.name) for r in results), default=10)
    lines = [f"{'check':<{width}}  result  seconds"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.1f}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
