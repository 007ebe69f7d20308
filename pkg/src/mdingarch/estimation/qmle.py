"""
Mixed Poisson quasi-maximum-likelihood estimation

The working likelihood treats X_1t as Poisson(lambda_1t) and X_2t as
1 + Poisson(lambda_2t - 1). Its per-time term

    l_t = [log pi_t - lambda_1t + Y_t log lambda_1t] 1{Y_t >= 0}
        + [log(1 - pi_t) - lambda_2t - (Y_t + 1) log(lambda_2t - 1)] 1{Y_t < 0}

splits into a sign part that depends on phi only and two magnitude parts that
depend on psi1 and psi2 only, so the three blocks are maximised separately.
Each block is optimised with L-BFGS-B in an unconstrained coordinate system
that maps onto the admissible region, followed by a short Fisher-scoring
polish in the original coordinates.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import special
from scipy.optimize import minimize

from mdingarch.analysis.stationarity import ConditionReport, SignMode, check_conditions
from mdingarch.core.exceptions import DegenerateDataError, ParameterDomainError
from mdingarch.models.filtering import (
    EXCESS_FLOOR,
    PROB_FLOOR,
    FilterPath,
    filter_arrays,
    intensity_filter,
    intensity_start,
    sign_filter,
    sign_start,
)
from mdingarch.models.parameters import (
    InitPolicy,
    ModelOrder,
    SeriesZ,
    Side,
    Theta,
)

logger = logging.getLogger(__name__)

ETA_BOUND = 30.0
POLISH_MAX_ITER = 25
POLISH_HALVINGS = 30
MIN_OBS_PER_PARAM = 10

# (alpha, beta) pairs for the deterministic multistart
_PSI_STARTS = ((0.3, 0.3), (0.1, 0.1), (0.2, 0.6), (0.05, 0.85), (0.45, 0.05))
_PHI_STARTS = ((0.2, 0.2), (0.05, 0.05), (0.1, 0.6), (0.4, 0.1), (0.01, 0.01))


@dataclass(frozen=True)
class FitOptions:
    tol: float = 1e-8
    max_iter: int = 1000
    n_starts: int = 5
    alpha_cap: float = 0.999
    beta_cap: float = 0.999
    omega_cap_factor: float = 10.0
    init: InitPolicy = InitPolicy.STATIONARY
    compute_covariance: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1 or not 1 <= self.n_starts <= len(_PSI_STARTS):
            raise ParameterDomainError(
                f"invalid fit options: tol={self.tol}, max_iter={self.max_iter}, n_starts={self.n_starts}"
            )
        if not 0 < self.alpha_cap < 1 or not 0 < self.beta_cap < 1 or self.omega_cap_factor <= 1:
            raise ParameterDomainError("caps need 0 < alpha_cap, beta_cap < 1 and omega_cap_factor > 1")


@dataclass(frozen=True)
class BlockConvergence:
    iterations: int
    gradient_norm: float
    converged: bool
    objective: float
    message: str = ""
    starts: int = 1


@dataclass(frozen=True)
class CovarianceBlocks:
    Pi_hat: np.ndarray
    J1_hat: np.ndarray
    I1_hat: np.ndarray
    J2_hat: np.ndarray
    I2_hat: np.ndarray


@dataclass(frozen=True)
class FitReport:
    theta_hat: Theta
    n: int
    loglik: float
    loglik_full: float
    convergence: Dict[str, BlockConvergence]
    options: FitOptions
    se: Optional[np.ndarray] = None
    cov_blocks: Optional[CovarianceBlocks] = None
    sigma_hat: Optional[np.ndarray] = None
    singular_blocks: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def order(self) -> ModelOrder:
        return self.theta_hat.order

    @property
    def d(self) -> int:
        return self.order.dim

    @property
    def converged(self) -> bool:
        return all(block.converged for block in self.convergence.values())

    @property
    def aic(self) -> float:
        return -2.0 * self.n * self.loglik_full + 2.0 * self.d

    @property
    def bic(self) -> float:
        return -2.0 * self.n * self.loglik_full + self.d * math.log(self.n)

    @property
    def persistence_pos(self) -> float:
        return self.theta_hat.psi1.persistence

    @property
    def persistence_neg(self) -> float:
        return self.theta_hat.psi2.persistence

    @property
    def sign_persistence(self) -> float:
        return self.theta_hat.phi.a + self.theta_hat.phi.b

    def stationarity(self) -> ConditionReport:
        return check_conditions(self.theta_hat, SignMode.bernoulli_ingarch())


# ---------------------------------------------------------------------------
# Per-time likelihood terms and scores
# ---------------------------------------------------------------------------

def log_constants(y: np.ndarray) -> np.ndarray:
    """Terms dropped from the working likelihood: -log y! and 1 - log((-y-1)!)."""
    y = np.asarray(y, dtype=float)
    return np.where(y >= 0, -special.gammaln(y + 1.0), 1.0 - special.gammaln(np.maximum(-y, 1.0)))


def loglik_terms(series: SeriesZ, path: FilterPath, include_constants: bool = False) -> np.ndarray:
    y = series.y.astype(float)
    pos = y >= 0
    with np.errstate(invalid="ignore"):
        terms = np.where(
            pos,
            np.log(path.pi) - path.lam1 + y * np.log(path.lam1),
            np.log1p(-path.pi) - path.lam2 - (y + 1.0) * np.log(path.lam2 - 1.0),
        )
    if include_constants:
        terms = terms + log_constants(y)
    return terms


def score_weights(series: SeriesZ, path: FilterPath) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scalar multipliers of d(pi), d(lambda1) and d(lambda2) in the per-time score."""
    y = series.y.astype(float)
    b = series.b.astype(float)
    pi = path.pi
    w_phi = (b - pi) / (pi * (1.0 - pi))
    w_pos = np.where(y >= 0, y / path.lam1 - 1.0, 0.0)
    w_neg = np.where(y < 0, -(y + 1.0) / (path.lam2 - 1.0) - 1.0, 0.0)
    return w_phi, w_pos, w_neg


def score_terms(series: SeriesZ, path: FilterPath) -> np.ndarray:
    """n x d matrix of per-time scores d l_t / d theta."""
    if not path.has_gradients:
        raise ParameterDomainError("score needs a filter path with gradients")
    w_phi, w_pos, w_neg = score_weights(series, path)
    return np.hstack([
        w_phi[:, None] * path.dpi,
        w_pos[:, None] * path.dlam1,
        w_neg[:, None] * path.dlam2,
    ])


def _filter_theta(series: SeriesZ, theta: Theta, init: InitPolicy, with_gradients: bool) -> FilterPath:
    if series.n < 1:
        raise ParameterDomainError("need at least one observation")
    return filter_arrays(
        series, theta.phi.as_array(), theta.psi1.as_array(), theta.psi2.as_array(),
        theta.order, init, with_gradients,
    )


def quasi_loglik(series: SeriesZ, theta: Theta, init: InitPolicy = InitPolicy.STATIONARY,
                 include_constants: bool = False) -> float:
    """Average working log-likelihood (1/n) sum_t l_t."""
    path = _filter_theta(series, theta, init, with_gradients=False)
    if path.clamped:
        logger.debug(f"quasi_loglik evaluated with {path.clamped} clamped filter values")
    return float(np.mean(loglik_terms(series, path, include_constants)))


def score(series: SeriesZ, theta: Theta, init: InitPolicy = InitPolicy.STATIONARY) -> np.ndarray:
    """Average score (1/n) sum_t d l_t / d theta; block-structured."""
    path = _filter_theta(series, theta, init, with_gradients=True)
    return score_terms(series, path).mean(axis=0)


# ---------------------------------------------------------------------------
# Block objectives in the original coordinates (negated mean log-likelihood)
# ---------------------------------------------------------------------------

def _sign_objective(phi: np.ndarray, b_ind: np.ndarray, init: InitPolicy):
    pi0 = sign_start(b_ind, phi, init)
    pi, dpi = sign_filter(b_ind, phi, pi0, init, with_gradients=True)
    pi = np.clip(pi, PROB_FLOOR, 1.0 - PROB_FLOOR)
    b = b_ind.astype(float)
    value = -np.mean(b * np.log(pi) + (1.0 - b) * np.log1p(-pi))
    weight = (b - pi) / (pi * (1.0 - pi))
    grad = -np.mean(weight[:, None] * dpi, axis=0)
    info = (dpi.T * (1.0 / (pi * (1.0 - pi)))) @ dpi / b.size
    return value, grad, info


def _psi_objective(psi: np.ndarray, y: np.ndarray, abs_y: np.ndarray, order: ModelOrder,
                   side: Side, init: InitPolicy):
    lam0 = intensity_start(y, psi, order, side, init)
    lam, dlam = intensity_filter(abs_y, psi, order, lam0, init, with_gradients=True)
    yf = y.astype(float)
    if side is Side.POSITIVE:
        mask = yf >= 0
        lam = np.maximum(lam, EXCESS_FLOOR)
        terms = np.where(mask, -lam + yf * np.log(lam), 0.0)
        weight = np.where(mask, yf / lam - 1.0, 0.0)
        curvature = np.where(mask, 1.0 / lam, 0.0)
    else:
        mask = yf < 0
        lam = np.maximum(lam, 1.0 + EXCESS_FLOOR)
        excess = lam - 1.0
        terms = np.where(mask, -lam - (yf + 1.0) * np.log(excess), 0.0)
        weight = np.where(mask, -(yf + 1.0) / excess - 1.0, 0.0)
        curvature = np.where(mask, 1.0 / excess, 0.0)
    value = -np.mean(terms)
    grad = -np.mean(weight[:, None] * dlam, axis=0)
    info = (dlam.T * curvature) @ dlam / yf.size
    return value, grad, info


# ---------------------------------------------------------------------------
# Unconstrained coordinates
# ---------------------------------------------------------------------------

def _softmax_with_slack(eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """First len(eta) entries of softmax(eta, 0) and their Jacobian."""
    z = np.append(eta, 0.0)
    z = z - z.max()
    e = np.exp(z)
    s = (e / e.sum())[:-1]
    jac = np.diag(s) - np.outer(s, s)
    return s, jac


def _logits_with_slack(shares: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    shares = np.maximum(np.asarray(shares, dtype=float), floor)
    slack = max(1.0 - shares.sum(), floor)
    return np.log(shares / slack)


def _logit(x: float) -> float:
    x = min(max(x, 1e-10), 1.0 - 1e-10)
    return math.log(x / (1.0 - x))


class PhiTransform:
    """(c, a, b) = first three entries of softmax(eta_c, eta_a, eta_b, 0)."""

    def forward(self, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _softmax_with_slack(eta)

    def inverse(self, phi: np.ndarray) -> np.ndarray:
        return np.clip(_logits_with_slack(phi), -ETA_BOUND, ETA_BOUND)

    def contains(self, phi: np.ndarray) -> bool:
        return bool(phi[0] > 0 and phi[1] >= 0 and phi[2] >= 0 and phi.sum() < 1.0)


class PsiTransform:
    """Maps eta to (omega, alpha, beta) inside the compact parameter box.

    alpha_i = alpha_cap * sigmoid(eta); beta = beta_cap * softmax(eta_beta, 0);
    omega runs over (lower, omega_cap) through a sigmoid, where lower is 0 on the
    positive side and 1 - sum(beta) on the negative side.
    """

    def __init__(self, order: ModelOrder, side: Side, opts: FitOptions, omega_cap: float):
        self.order = order
        self.side = side
        self.alpha_cap = opts.alpha_cap
        self.beta_cap = opts.beta_cap
        self.omega_cap = omega_cap

    def forward(self, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        q, p = self.order.q, self.order.p
        k = self.order.psi_dim
        jac = np.zeros((k, k))

        sig_alpha = special.expit(eta[1:1 + q])
        alpha = self.alpha_cap * sig_alpha
        jac[1:1 + q, 1:1 + q] = np.diag(self.alpha_cap * sig_alpha * (1.0 - sig_alpha))

        if p:
            shares, share_jac = _softmax_with_slack(eta[1 + q:])
            beta = self.beta_cap * shares
            jac[1 + q:, 1 + q:] = self.beta_cap * share_jac
        else:
            beta = np.zeros(0)

        s = float(special.expit(eta[0]))
        if self.side is Side.POSITIVE:
            lower = 0.0
            d_lower = np.zeros(p)
        else:
            lower = 1.0 - beta.sum()
            d_lower = -jac[1 + q:, 1 + q:].sum(axis=0)
        omega = lower + (self.omega_cap - lower) * s
        jac[0, 0] = (self.omega_cap - lower) * s * (1.0 - s)
        jac[0, 1 + q:] = d_lower * (1.0 - s)
        return np.concatenate(([omega], alpha, beta)), jac

    def inverse(self, psi: np.ndarray) -> np.ndarray:
        q = self.order.q
        alpha = psi[1:1 + q]
        beta = psi[1 + q:]
        lower = 0.0 if self.side is Side.POSITIVE else 1.0 - beta.sum()
        eta = np.empty(self.order.psi_dim)
        eta[0] = _logit((psi[0] - lower) / (self.omega_cap - lower))
        eta[1:1 + q] = [_logit(v / self.alpha_cap) for v in alpha]
        if beta.size:
            eta[1 + q:] = _logits_with_slack(beta / self.beta_cap)
        return np.clip(eta, -ETA_BOUND, ETA_BOUND)

    def contains(self, psi: np.ndarray) -> bool:
        q = self.order.q
        alpha = psi[1:1 + q]
        beta = psi[1 + q:]
        if np.any(alpha < 0) or np.any(alpha >= self.alpha_cap) or np.any(beta < 0):
            return False
        if beta.sum() >= self.beta_cap or psi[0] >= self.omega_cap:
            return False
        lower = 0.0 if self.side is Side.POSITIVE else 1.0 - beta.sum()
        return bool(psi[0] > lower)


# ---------------------------------------------------------------------------
# Block optimisation
# ---------------------------------------------------------------------------

@dataclass
class _BlockProblem:
    name: str
    objective: Callable[[np.ndarray], Tuple[float, np.ndarray, np.ndarray]]
    transform: object
    starts: List[np.ndarray]


def _fisher_polish(problem: _BlockProblem, theta: np.ndarray, tol: float):
    """Scoring steps theta += info^{-1} (-grad) with step halving inside the region."""
    value, grad, info = problem.objective(theta)
    iterations = 0
    for _ in range(POLISH_MAX_ITER):
        if np.linalg.norm(grad) < tol:
            break
        try:
            direction = -np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            break
        step = 1.0
        improved = False
        for _ in range(POLISH_HALVINGS):
            candidate = theta + step * direction
            if problem.transform.contains(candidate):
                cand_value, cand_grad, cand_info = problem.objective(candidate)
                if cand_value <= value:
                    theta, value, grad, info = candidate, cand_value, cand_grad, cand_info
                    improved = True
                    break
            step *= 0.5
        iterations += 1
        if not improved:
            break
    return theta, value, grad, iterations


def _optimize_block(problem: _BlockProblem, opts: FitOptions) -> Tuple[np.ndarray, BlockConvergence]:
    transform = problem.transform

    def eta_objective(eta):
        theta, jac = transform.forward(eta)
        value, grad, _ = problem.objective(theta)
        return value, jac.T @ grad

    best = None
    for start in problem.starts[: opts.n_starts]:
        eta0 = transform.inverse(start)
        result = minimize(
            eta_objective,
            eta0,
            jac=True,
            method="L-BFGS-B",
            bounds=[(-ETA_BOUND, ETA_BOUND)] * eta0.size,
            options={"maxiter": opts.max_iter, "gtol": opts.tol, "ftol": 1e-15},
        )
        if best is None or result.fun < best.fun:
            best = result

    theta_opt, _ = transform.forward(best.x)
    theta_opt, value, grad, polish_iter = _fisher_polish(problem, theta_opt, opts.tol)
    gradient_norm = float(np.linalg.norm(grad))
    converged = bool(best.success) or gradient_norm < opts.tol
    if not converged:
        logger.warning(
            f"Block {problem.name} did not converge: gradient norm {gradient_norm:.3e} ({best.message})"
        )
    else:
        logger.info(f"Block {problem.name} converged: objective {value:.10g}, gradient norm {gradient_norm:.3e}")
    return theta_opt, BlockConvergence(
        iterations=int(best.nit) + polish_iter,
        gradient_norm=gradient_norm,
        converged=converged,
        objective=float(value),
        message=str(best.message),
        starts=min(opts.n_starts, len(problem.starts)),
    )


def _phi_starts(b_ind: np.ndarray) -> List[np.ndarray]:
    m = float(np.clip(np.mean(b_ind), 0.05, 0.95))
    return [np.array([m * (1.0 - a - b), a, b]) for a, b in _PHI_STARTS]


def _psi_starts(y: np.ndarray, order: ModelOrder, side: Side, transform: PsiTransform) -> List[np.ndarray]:
    abs_mean = float(np.mean(np.abs(y)))
    if side is Side.POSITIVE:
        values = y[y >= 0]
        level = max(float(values.mean()) if values.size else 1.0, 0.1)
    else:
        values = -y[y < 0]
        level = max(float(values.mean()) if values.size else 2.0, 1.1)

    starts = []
    for alpha_total, beta_total in _PSI_STARTS:
        alpha = np.full(order.q, alpha_total / max(order.q, 1))
        beta = np.full(order.p, beta_total / max(order.p, 1))
        slack = 1.0 - beta.sum()
        lower = 0.0 if side is Side.POSITIVE else slack
        omega = level * slack - alpha.sum() * abs_mean
        span = transform.omega_cap - lower
        omega = min(max(omega, lower + 0.05 * min(span, level)), transform.omega_cap - 0.01 * span)
        starts.append(np.concatenate(([omega], alpha, beta)))
    return starts


def fit_sign_block(b_ind: np.ndarray, opts: FitOptions = FitOptions(),
                   warm_start: Optional[np.ndarray] = None) -> Tuple[np.ndarray, BlockConvergence]:
    """Maximise the Bernoulli part over phi = (c, a, b) using sign indicators only."""
    b_ind = np.asarray(b_ind)
    starts = _phi_starts(b_ind)
    if warm_start is not None:
        starts = [np.asarray(warm_start, dtype=float)] + starts
    problem = _BlockProblem(
        name="phi",
        objective=lambda phi: _sign_objective(phi, b_ind, opts.init),
        transform=PhiTransform(),
        starts=starts,
    )
    return _optimize_block(problem, opts)


def _psi_problem(series: SeriesZ, order: ModelOrder, side: Side, opts: FitOptions) -> _BlockProblem:
    y = series.y
    abs_y = np.abs(y).astype(float)
    omega_cap = opts.omega_cap_factor * max(float(abs_y.max()), 1.0)
    transform = PsiTransform(order, side, opts, omega_cap)
    name = "psi1" if side is Side.POSITIVE else "psi2"
    return _BlockProblem(
        name=name,
        objective=lambda psi: _psi_objective(psi, y, abs_y, order, side, opts.init),
        transform=transform,
        starts=_psi_starts(y, order, side, transform),
    )


def validate_for_fit(series: SeriesZ, order: ModelOrder) -> None:
    if series.n < MIN_OBS_PER_PARAM * order.dim:
        raise DegenerateDataError(
            f"need at least {MIN_OBS_PER_PARAM * order.dim} observations for d={order.dim}, got {series.n}"
        )
    if series.n_nonnegative == 0 or series.n_negative == 0:
        raise DegenerateDataError("series must contain both nonnegative and negative observations")


def fit(series: SeriesZ, order: ModelOrder = ModelOrder(1, 1), opts: FitOptions = FitOptions()) -> FitReport:
    """Fit the three blocks separately and attach the asymptotic covariance."""
    validate_for_fit(series, order)
    logger.info(f"Fitting order (p={order.p}, q={order.q}) on n={series.n} observations")

    tasks = {
        "phi": lambda: fit_sign_block(series.b, opts),
        "psi1": lambda: _optimize_block(_psi_problem(series, order, Side.POSITIVE, opts), opts),
        "psi2": lambda: _optimize_block(_psi_problem(series, order, Side.NEGATIVE, opts), opts),
    }
    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=min(3, opts.threads)) as executor:
            futures = {name: executor.submit(task) for name, task in tasks.items()}
            results = {name: future.result() for name, future in futures.items()}
    else:
        results = {name: task() for name, task in tasks.items()}

    vector = np.concatenate([results["phi"][0], results["psi1"][0], results["psi2"][0]])
    theta_hat = Theta.from_vector(vector, order)
    path = _filter_theta(series, theta_hat, opts.init, with_gradients=False)
    report = FitReport(
        theta_hat=theta_hat,
        n=series.n,
        loglik=float(np.mean(loglik_terms(series, path))),
        loglik_full=float(np.mean(loglik_terms(series, path, include_constants=True))),
        convergence={name: result[1] for name, result in results.items()},
        options=opts,
    )
    if opts.compute_covariance:
        from mdingarch.estimation.covariance import asymptotic_covariance

        report = asymptotic_covariance(series, report)
    return report


def refilter(series: SeriesZ, report: FitReport, with_gradients: bool = True) -> FilterPath:
    """Filter path at the fitted parameters under the fit's initial-value policy."""
    return _filter_theta(series, report.theta_hat, report.options.init, with_gradients)

