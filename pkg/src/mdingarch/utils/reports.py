"""JSON report builders; key order here is the key order on disk."""

from __future__ import annotations

from dataclasses import asdict
from typing import Any, Dict, List, Optional

from mdingarch import __version__
from mdingarch.analysis.stationarity import ConditionReport
from mdingarch.diagnostics.portmanteau import GofReport
from mdingarch.estimation.dispersion import DispersionEstimates
from mdingarch.estimation.qmle import FitReport
from mdingarch.evaluation.pit import PitHistogram
from mdingarch.evaluation.sign_forecast import SignEvalReport
from mdingarch.models.parameters import parameter_names

SCHEMA_VERSION = "1.0"


def envelope(command: str, **fields: Any) -> Dict[str, Any]:
    report: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "command": command, "version": __version__}
    report.update(fields)
    return report


def condition_dict(report: ConditionReport) -> Dict[str, Any]:
    """Report keys: sufficient_37 is rho < 1, necessary_38a the beta-sum condition and
    necessary_38b the weighted persistence condition (i.i.d. signs only)."""
    return {
        "rho": report.rho,
        "sufficient_37": report.sufficient,
        "necessary_38a": report.necessary_beta,
        "necessary_38b": report.necessary_mean,
        "status": report.status.value,
        "sign_mode": report.sign_mode,
        "bounds": list(report.bounds),
        "equivalence_holds": report.equivalence_holds,
        "notes": list(report.notes),
    }


def fit_dict(fit: FitReport, dispersion: Optional[DispersionEstimates] = None) -> Dict[str, Any]:
    names = parameter_names(fit.order)
    estimates = fit.theta_hat.vector()
    se = [None] * len(names) if fit.se is None else list(fit.se)
    data: Dict[str, Any] = {
        "n": fit.n,
        "order": {"p": fit.order.p, "q": fit.order.q},
        "init": fit.options.init.value,
        "parameter_names": names,
        "theta_hat": list(estimates),
        "se": se,
        "estimates": {name: {"value": value, "se": err} for name, value, err in zip(names, estimates, se)},
        "theta": fit.theta_hat.to_dict(),
        "loglik": fit.loglik,
        "loglik_full": fit.loglik_full,
        "aic": fit.aic,
        "bic": fit.bic,
        "persistence_pos": fit.persistence_pos,
        "persistence_neg": fit.persistence_neg,
        "sign_persistence": fit.sign_persistence,
        "stationarity": condition_dict(fit.stationarity()),
        "converged": fit.converged,
        "convergence": {name: asdict(block) for name, block in fit.convergence.items()},
    }
    if fit.cov_blocks is not None:
        blocks = fit.cov_blocks
        data["covariance"] = {
            "Pi_hat": blocks.Pi_hat,
            "J1_hat": blocks.J1_hat,
            "I1_hat": blocks.I1_hat,
            "J2_hat": blocks.J2_hat,
            "I2_hat": blocks.I2_hat,
            "sigma_hat": fit.sigma_hat,
        }
        data["singular_blocks"] = list(fit.singular_blocks)
    if dispersion is not None:
        data["dispersion"] = {
            "r1_hat": dispersion.r1_hat,
            "r2_hat": dispersion.r2_hat,
            "r1_infinite": dispersion.r1_infinite,
            "r2_infinite": dispersion.r2_infinite,
        }
    return data


def gof_dict(report: GofReport) -> Dict[str, Any]:
    return report.to_dict()


def pit_dict(hist: PitHistogram) -> Dict[str, Any]:
    data = hist.to_dict()
    data["bins"] = [
        {"bin_low": low, "bin_high": high, "height": height, "outside": bool(outside)}
        for low, high, height, _, _, outside in hist.table_rows()
    ]
    return data


def sign_eval_dict(reports: List[SignEvalReport]) -> Dict[str, Any]:
    return {"evaluations": [report.to_dict() for report in reports]}
