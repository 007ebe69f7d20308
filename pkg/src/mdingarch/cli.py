"""Command-line interface for mdingarch."""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from mdingarch.analysis.stationarity import (
    SignMode,
    StationarityStatus,
    check_conditions,
    closed_form_rho,
    stationary_mean,
)
from mdingarch.core.config import config, resolve_seed, resolve_threads
from mdingarch.core.exceptions import (
    EXIT_OK,
    EXIT_WARNING,
    DataFormatError,
    MdIngarchError,
    ParameterDomainError,
)
from mdingarch.core.logging_config import setup_cli_logging, setup_monte_carlo_logging
from mdingarch.diagnostics.bootstrap import DEFAULT_REPLICATES, WeightDistribution
from mdingarch.diagnostics.portmanteau import DEFAULT_LAGS, goodness_of_fit
from mdingarch.estimation.dispersion import estimate_dispersion
from mdingarch.estimation.qmle import FitOptions, FitReport, fit, refilter
from mdingarch.evaluation.pit import DEFAULT_BINS, TABLE_HEADER, pit_histogram
from mdingarch.evaluation.sign_forecast import DEFAULT_REFIT_CADENCE, sign_forecast_eval
from mdingarch.models.filtering import conditional_moment_paths
from mdingarch.models.parameters import Family, InitPolicy, ModelOrder, Theta
from mdingarch.models.simulation import PRESET_NAMES, DgpSpec, check_simulation_stationarity, preset, simulate
from mdingarch.monte_carlo import reproduce
from mdingarch.utils import reports, show_config
from mdingarch.utils.series_io import STDIO, read_series, write_csv_table, write_json, write_series

logger = logging.getLogger("mdingarch.cli")

DEFAULT_BURN_IN = 500
MOMENTS_HEADER = ("t", "y", "pi", "lambda1", "lambda2", "mean", "variance")


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=path) from exc
    except OSError as exc:
        raise DataFormatError(f"cannot read file: {exc.strerror}", path=path) from exc


def _fit_options(args: argparse.Namespace, compute_covariance: bool = True) -> FitOptions:
    return FitOptions(
        init=InitPolicy(args.init),
        compute_covariance=compute_covariance,
        threads=min(3, resolve_threads(args.threads)),
    )


def _fit_input(args: argparse.Namespace, compute_covariance: bool = True):
    series = read_series(args.input)
    order = ModelOrder(args.p, args.q)
    return series, fit(series, order, _fit_options(args, compute_covariance))


def _warn_unconverged(report: FitReport) -> None:
    for name, block in report.convergence.items():
        if not block.converged:
            logger.warning(f"Block {name} did not converge: {block.message}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def handle_simulate_command(args: argparse.Namespace) -> int:
    """Simulate a trajectory from a preset or a DGP document."""
    if (args.preset is None) == (args.params is None):
        raise ParameterDomainError("give exactly one of --preset or --params")
    spec = preset(args.preset) if args.preset else DgpSpec.from_dict(_read_json(args.params))
    seed = resolve_seed(args.seed)

    # Raises on a nonstationary linear DGP; None for log-linear ones
    condition = check_simulation_stationarity(spec)
    status = None if condition is None else condition.status
    stationarity = None if condition is None else reports.condition_dict(condition)

    series = simulate(spec, args.n, args.burn_in, np.random.default_rng(seed), check_stationarity=False)
    write_series(args.out, series, header=not args.no_header)

    if args.out != STDIO:
        meta_path = Path(args.out).with_suffix(".meta.json")
        write_json(meta_path, reports.envelope(
            "simulate",
            seed=seed,
            n=args.n,
            burn_in=args.burn_in,
            preset=args.preset,
            spec=spec.to_dict(),
            stationarity=stationarity,
        ))
        logger.info(f"Wrote {series.n} observations to {args.out} and metadata to {meta_path}")
    return EXIT_WARNING if status is StationarityStatus.INCONCLUSIVE else EXIT_OK


def handle_fit_command(args: argparse.Namespace) -> int:
    """Fit the model by mixed Poisson QMLE and report estimates and standard errors."""
    series, report = _fit_input(args)
    _warn_unconverged(report)
    family = Family(args.family)
    dispersion = estimate_dispersion(series, report) if family is Family.NEG_BINOMIAL else None
    write_json(args.out, reports.envelope("fit", family=family.value, **reports.fit_dict(report, dispersion)))

    if args.moments:
        path = refilter(series, report, with_gradients=False)
        mean, var = conditional_moment_paths(path, family, None if dispersion is None else dispersion.as_tuple())
        rows = (
            (t + 1, int(series.y[t]), path.pi[t], path.lam1[t], path.lam2[t], mean[t], var[t])
            for t in range(series.n)
        )
        write_csv_table(args.moments, MOMENTS_HEADER, rows)
    return EXIT_OK


def handle_gof_command(args: argparse.Namespace) -> int:
    """Portmanteau test with the random-weighting bootstrap."""
    series, report = _fit_input(args, compute_covariance=False)
    _warn_unconverged(report)
    seed = resolve_seed(args.seed)
    gof = goodness_of_fit(
        series,
        report,
        k=args.lags,
        B=args.bootstrap,
        seed=seed,
        weights=WeightDistribution(args.weights),
        threads=resolve_threads(args.threads),
    )
    write_json(args.out, reports.envelope("gof", order={"p": args.p, "q": args.q}, **reports.gof_dict(gof)))
    return EXIT_OK


def handle_pit_command(args: argparse.Namespace) -> int:
    """PIT histogram of the fitted model with its reference band."""
    series, report = _fit_input(args, compute_covariance=False)
    family = Family(args.family)
    dispersion = None
    if args.r1 is not None or args.r2 is not None:
        if args.r1 is None or args.r2 is None or args.r1 <= 0 or args.r2 <= 0:
            raise ParameterDomainError("--r1 and --r2 must be given together and be positive")
        dispersion = (args.r1, args.r2)
    hist = pit_histogram(series, report, family, J=args.bins, dispersion=dispersion)
    write_json(args.out, reports.envelope("pit", **reports.pit_dict(hist)))
    if args.table:
        write_csv_table(args.table, TABLE_HEADER, hist.table_rows())
    return EXIT_OK


def handle_eval_sign_command(args: argparse.Namespace) -> int:
    """Expanding-window sign forecasts against the 0.5 and sample-mean benchmarks."""
    series = read_series(args.input)
    opts = FitOptions(init=InitPolicy(args.init), compute_covariance=False)
    evaluations = sign_forecast_eval(
        series,
        args.m,
        opts,
        refit_cadence=args.refit_cadence,
        threads=resolve_threads(args.threads),
    )
    write_json(args.out, reports.envelope("eval-sign", n=series.n, **reports.sign_eval_dict(evaluations)))
    return EXIT_OK


def _sign_mode(args: argparse.Namespace) -> SignMode:
    if args.sign == "iid":
        if args.pi is None:
            raise ParameterDomainError("--sign iid needs --pi")
        return SignMode.iid(args.pi)
    if args.sign == "bounds":
        if args.pi1 is None or args.pi0 is None:
            raise ParameterDomainError("--sign bounds needs --pi1 and --pi0")
        return SignMode.bounds(args.pi1, args.pi0)
    if args.sign == "markov":
        if args.transition is None:
            raise ParameterDomainError("--sign markov needs --transition p00 p01 p10 p11")
        return SignMode.markov(*args.transition)
    return SignMode.bernoulli_ingarch()


def handle_stationarity_command(args: argparse.Namespace) -> int:
    """Spectral-radius and explicit stationarity conditions for a parameter document."""
    theta = Theta.from_dict(_read_json(args.params), validate=False)
    mode = _sign_mode(args)
    result = reports.condition_dict(check_conditions(theta, mode))

    if args.sign == "iid":
        if (theta.order.p, theta.order.q) == (1, 1):
            result["closed_form_rho"] = closed_form_rho(theta, args.pi)
        if result["status"] == StationarityStatus.STATIONARY.value:
            result["e_abs_y"], result["e_y"] = stationary_mean(theta, args.pi)
        else:
            result["e_abs_y"] = result["e_y"] = None
    write_json(args.out, reports.envelope("stationarity", theta=theta.to_dict(), **result))
    return EXIT_WARNING if result["status"] == StationarityStatus.INCONCLUSIVE.value else EXIT_OK


def handle_reproduce_command(args: argparse.Namespace) -> int:
    """Run the acceptance suite and print a pass/fail table."""
    scale = reproduce.Scale(args.scale)
    seed = resolve_seed(args.seed)
    if args.log_dir:
        setup_monte_carlo_logging(args.log_dir, logging.INFO)
    results = reproduce.run_suite(scale, seed, resolve_threads(args.threads), args.only)

    out = args.out
    if out is None:
        config.ensure_directories()
        out = config.output_directory / f"reproduce-{scale.value}.json"
    write_json(out, reports.envelope(
        "reproduce",
        scale=scale.value,
        seed=seed,
        passed=all(r.passed for r in results),
        checks=[r.to_dict() for r in results],
    ))
    print(reproduce.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_WARNING


def handle_config_command(args: argparse.Namespace) -> int:
    """Display current configuration information."""
    return show_config.main(create=args.create_dirs)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="Series CSV, one integer per line ('-' for stdin)")
    parser.add_argument("--p", type=int, default=1, help="Intensity feedback order (default 1)")
    parser.add_argument("--q", type=int, default=1, help="Lagged |Y| order (default 1)")
    parser.add_argument("--init", choices=[p.value for p in InitPolicy], default=InitPolicy.STATIONARY.value,
                        help="Filter starting values")
    parser.add_argument("--threads", type=int, default=None, help="Worker cap (default MDINGARCH_THREADS)")
    parser.add_argument("--out", default=STDIO, help="Output path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdingarch", description="Mixed difference INGARCH models for integer series")
    parser.add_argument("--log-level", default=None, help="Logging level (default MDINGARCH_LOG_LEVEL or WARNING)")
    parser.add_argument("--log-dir", default=None, help="Also write a rotating log file to this directory")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sim = subparsers.add_parser("simulate", help="Simulate a trajectory")
    sim.add_argument("--preset", choices=PRESET_NAMES, default=None, help="Named data-generating process")
    sim.add_argument("--params", default=None, help="DGP parameter JSON document")
    sim.add_argument("--n", type=int, required=True, help="Number of observations")
    sim.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN, help="Discarded initial observations")
    sim.add_argument("--seed", type=int, default=None, help="Seed (default MDINGARCH_SEED)")
    sim.add_argument("--out", default=STDIO, help="Series CSV path ('-' for stdout)")
    sim.add_argument("--no-header", action="store_true", help="Omit the 'y' header line")

    fit_parser = subparsers.add_parser("fit", help="Fit by mixed Poisson QMLE")
    _add_model_flags(fit_parser)
    fit_parser.add_argument("--family", choices=[f.value for f in Family], default=Family.POISSON.value,
                            help="'nb' adds moment estimates of the dispersion")
    fit_parser.add_argument("--moments", default=None, help="Write conditional mean/variance paths to this CSV")

    gof = subparsers.add_parser("gof", help="Portmanteau goodness-of-fit test")
    _add_model_flags(gof)
    gof.add_argument("--lags", type=int, default=DEFAULT_LAGS, help="Number of residual autocorrelations")
    gof.add_argument("--bootstrap", type=int, default=DEFAULT_REPLICATES, help="Bootstrap replicates")
    gof.add_argument("--weights", choices=[w.value for w in WeightDistribution],
                     default=WeightDistribution.EXPONENTIAL.value, help="Bootstrap weight distribution")
    gof.add_argument("--seed", type=int, default=None, help="Seed (default MDINGARCH_SEED)")

    pit = subparsers.add_parser("pit", help="Non-randomized PIT histogram")
    _add_model_flags(pit)
    pit.add_argument("--family", choices=[f.value for f in Family], default=Family.POISSON.value)
    pit.add_argument("--bins", type=int, default=DEFAULT_BINS, help="Number of PIT bins")
    pit.add_argument("--r1", type=float, default=None, help="NB dispersion on the nonnegative side")
    pit.add_argument("--r2", type=float, default=None, help="NB dispersion on the negative side")
    pit.add_argument("--table", default=None, help="Write the plot-ready bin table to this CSV")

    sign = subparsers.add_parser("eval-sign", help="Out-of-sample sign forecast evaluation")
    sign.add_argument("--input", required=True, help="Series CSV ('-' for stdin)")
    sign.add_argument("--m", type=int, action="append", required=True, help="Training size (repeatable)")
    sign.add_argument("--refit-cadence", type=int, default=DEFAULT_REFIT_CADENCE,
                      help="Refit every k forecasts (1 = every step)")
    sign.add_argument("--init", choices=[p.value for p in InitPolicy], default=InitPolicy.STATIONARY.value)
    sign.add_argument("--threads", type=int, default=None)
    sign.add_argument("--out", default=STDIO)

    stat = subparsers.add_parser("stationarity", help="Stationarity conditions for a parameter document")
    stat.add_argument("--params", required=True, help="Parameter JSON document")
    stat.add_argument("--sign", choices=["iid", "bingarch", "bounds", "markov"], default="bingarch")
    stat.add_argument("--pi", type=float, default=None, help="P(B_t = 1) for --sign iid")
    stat.add_argument("--pi1", type=float, default=None, help="Upper bound of P(B_t = 1) for --sign bounds")
    stat.add_argument("--pi0", type=float, default=None, help="Upper bound of P(B_t = 0) for --sign bounds")
    stat.add_argument("--transition", type=float, nargs=4, default=None, metavar=("P00", "P01", "P10", "P11"))
    stat.add_argument("--out", default=STDIO)

    rep = subparsers.add_parser("reproduce", help="Run the acceptance suite")
    rep.add_argument("--scale", choices=[s.value for s in reproduce.Scale], default=reproduce.Scale.DESK.value)
    rep.add_argument("--seed", type=int, default=None)
    rep.add_argument("--threads", type=int, default=None)
    rep.add_argument("--only", action="append", default=None, help="Run only the named check (repeatable)")
    rep.add_argument("--out", default=None, help="Summary JSON path (default under the output directory)")

    cfg = subparsers.add_parser("config", help="Show configuration information")
    cfg.add_argument("--create-dirs", action="store_true", help="Create missing directories")
    return parser


HANDLERS = {
    "simulate": handle_simulate_command,
    "fit": handle_fit_command,
    "gof": handle_gof_command,
    "pit": handle_pit_command,
    "eval-sign": handle_eval_sign_command,
    "stationarity": handle_stationarity_command,
    "reproduce": handle_reproduce_command,
    "config": handle_config_command,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point for the mdingarch command."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        level = logging.getLevelName(args.log_level.upper()) if args.log_level else config.log_level
        if not isinstance(level, int):
            raise ParameterDomainError(f"unknown log level {args.log_level!r}")
        setup_cli_logging(level, args.log_dir)
        return HANDLERS[args.command](args)
    except MdIngarchError as exc:
        logger.error(str(exc))
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
