"""
Command-line interface.

    twint dist --family twin-t --nu 4 --action cdf --x 0 --x 1.5
    twint fit regress --data d.csv --family twin-t --response y --covariates x
    twint fit curve --data d.csv --column y --family twin-t --skew two-piece
    twint simulate --n 100 --df-true inf --replicates 200 --out results/

Errors print a single ``error[<code>]: <message>`` line on stderr.  Exit
codes: 0 success, 2 usage error, 3 data error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from twint._random import DEFAULT_SEED
from twint.core import ConvergenceError, LocationScale, TwinT
from twint.data import DataError, fmt, read_csv
from twint.estimation import (
    CurveFitSpec,
    ErrorFamily,
    FitConfig,
    FitReport,
    RegressionSpec,
    Skew,
    fit_curve,
    fit_regression,
)
from twint.extended import GeneralizedTwinT, MultivariateTwinT
from twint.simulation import (
    DEFAULT_DFS,
    DEFAULT_NS,
    ScenarioConfig,
    run_scenario,
    write_scenario_outputs,
)
from twint.skew import AzzaliniTwinT, JonesTwinT, TwoPieceTwinT

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

FAMILIES = ("twin-t", "two-piece", "jones", "azzalini", "generalized", "multivariate")
ACTIONS = ("pdf", "logpdf", "cdf", "quantile", "sample")
_ERROR_FAMILIES = {
    "normal": ErrorFamily.NORMAL,
    "t": ErrorFamily.STUDENT_T,
    "student-t": ErrorFamily.STUDENT_T,
    "twin-t": ErrorFamily.TWIN_T,
}


class CliError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message, EXIT_USAGE)


def _usage(message: str) -> CliError:
    return CliError("usage", message, EXIT_USAGE)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise _usage(f"not a list of numbers: {text!r}") from None


def _matrix(text: str) -> np.ndarray:
    rows = [_floats(r) for r in text.split(";")]
    if len({len(r) for r in rows}) != 1:
        raise _usage("matrix rows must have equal length")
    return np.array(rows)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = "--" + name.replace("_", "-")
            raise _usage(f"{flag} is required for --family {args.family}")


def _build_dist(args):
    fam = args.family
    if fam == "twin-t":
        _require(args, "nu")
        return TwinT(args.nu)
    if fam == "two-piece":
        _require(args, "nu", "gamma")
        return TwoPieceTwinT(args.nu, args.gamma)
    if fam == "jones":
        _require(args, "a", "b")
        return JonesTwinT(args.a, args.b)
    if fam == "azzalini":
        _require(args, "nu", "phi")
        if not -1 < args.phi < 1:
            raise ValueError("phi must lie in (-1, 1)")
        return AzzaliniTwinT(args.nu, args.phi)
    if fam == "generalized":
        _require(args, "beta", "gamma_param")
        return GeneralizedTwinT(args.beta, args.gamma_param)
    _require(args, "nu")
    mu = np.array(_floats(args.mu)) if args.mu else None
    V = _matrix(args.V) if args.V else None
    if mu is None and V is None:
        raise _usage("--mu or --V is required for --family multivariate")
    if mu is None:
        mu = np.zeros(V.shape[0])
    if V is None:
        V = np.eye(mu.size)
    return MultivariateTwinT(args.nu, mu, V)


def cmd_dist(args, out) -> int:
    try:
        dist = _build_dist(args)
    except ValueError as exc:
        raise CliError("invalid-parameter", str(exc), EXIT_USAGE) from None
    multivariate = args.family == "multivariate"
    if not multivariate and (args.loc != 0.0 or args.scale != 1.0):
        try:
            dist = LocationScale(dist, args.loc, args.scale)
        except ValueError as exc:
            raise CliError("invalid-parameter", str(exc), EXIT_USAGE) from None

    if args.action == "sample":
        if args.n is None or args.n < 0:
            raise _usage("--n (>= 0) is required for --action sample")
        draws = dist.sample(args.n, args.seed)
        for row in np.atleast_1d(draws):
            line = ",".join(fmt(v) for v in row) if multivariate else fmt(row)
            out.write(line + "\n")
        return EXIT_OK

    if multivariate and args.action not in ("pdf", "logpdf"):
        raise _usage("multivariate supports --action pdf, logpdf and sample")
    if not args.x:
        raise _usage(f"--x is required for --action {args.action}")
    fn = getattr(dist, args.action)
    for item in args.x:
        if multivariate:
            value = fn(np.array(_floats(item)))
        else:
            (x,) = _floats(item) or [math.nan]
            try:
                value = fn(x)
            except ValueError as exc:
                raise CliError("invalid-input", f"{item}: {exc}", EXIT_USAGE) from None
        out.write(fmt(value) + "\n")
    return EXIT_OK


def format_report(report: FitReport) -> str:
    lines = [
        f"model={report.model}",
        f"n_obs={report.n_obs}",
        f"n_params={report.n_params}",
        f"loglik={fmt(report.loglik)}",
        f"aic={fmt(report.aic)}",
        f"converged={fmt(report.converged)}",
        f"iterations={report.iterations}",
        f"hessian_ok={fmt(report.hessian_ok)}",
        f"normal_limit={fmt(report.normal_limit)}",
    ]
    lines += [f"estimate.{k}={fmt(v)}" for k, v in report.estimates.items()]
    lines += [f"se.{k}={fmt(v)}" for k, v in report.std_errors.items()]
    lines += [f"bootstrap_se.{k}={fmt(v)}" for k, v in report.bootstrap_se.items()]
    if report.nu_ci is not None:
        lines += [f"nu_ci95_low={fmt(report.nu_ci[0])}", f"nu_ci95_high={fmt(report.nu_ci[1])}"]
    lines += [f"note={n}" for n in report.notes]
    return "\n".join(lines) + "\n"


def _emit_report(report: FitReport, args, out) -> int:
    text = json.dumps(report.to_dict(), indent=2) + "\n" if args.json else format_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK if report.converged else EXIT_CONVERGENCE


def _load(args):
    if not args.data:
        raise _usage("--data is required")
    try:
        return read_csv(args.data)
    except OSError as exc:
        raise CliError("io", f"{args.data}: {exc.strerror or exc}", EXIT_DATA) from None


def cmd_fit_regress(args, out) -> int:
    data = _load(args)
    covs = [c.strip() for c in args.covariates.split(",") if c.strip()]
    spec = RegressionSpec(
        _ERROR_FAMILIES[args.family],
        heteroscedastic=args.hetero,
        response_column=args.response,
        covariate_columns=tuple(covs),
        dispersion_column=args.dispersion,
    )
    y = data.column(spec.response_column)
    X = data.matrix(spec.covariate_columns)
    z = data.column(spec.dispersion_column) if spec.dispersion_column else None
    report = fit_regression(spec, y, X, z=z, config=FitConfig(seed=args.seed))
    return _emit_report(report, args, out)


def cmd_fit_curve(args, out) -> int:
    data = _load(args)
    family = _ERROR_FAMILIES[args.family]
    try:
        spec = CurveFitSpec(family, Skew(args.skew.replace("-", "_")), args.column)
    except ValueError as exc:
        raise _usage(str(exc)) from None
    y = data.column(spec.column)
    config = FitConfig(bootstrap=args.bootstrap, seed=args.seed)
    report = fit_curve(spec, y, config)
    return _emit_report(report, args, out)


def _parse_df(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity", "normal"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise _usage(f"--df-true: not a number: {text!r}") from None


def cmd_simulate(args, out) -> int:
    if not args.out:
        raise _usage("--out (output directory) is required")
    ns = args.n or list(DEFAULT_NS)
    dfs = [_parse_df(d) for d in args.df_true] if args.df_true else list(DEFAULT_DFS)
    try:
        configs = [ScenarioConfig(n, df, args.replicates, args.seed) for n in ns for df in dfs]
    except ValueError as exc:
        raise CliError("invalid-parameter", str(exc), EXIT_USAGE) from None
    for cfg in configs:
        table = run_scenario(cfg, workers=args.workers)
        paths = write_scenario_outputs(table, args.out)
        out.write(f"scenario={cfg.label} replicates={cfg.replicates} failed={table.n_failed} files={len(paths)}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twint", description="Twin-t distributions and robust fitting.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("dist", help="evaluate or sample a distribution")
    d.add_argument("--family", choices=FAMILIES, default="twin-t")
    d.add_argument("--action", choices=ACTIONS, required=True)
    d.add_argument("--nu", type=float)
    d.add_argument("--gamma", type=float, help="2-piece asymmetry")
    d.add_argument("--a", type=float)
    d.add_argument("--b", type=float)
    d.add_argument("--phi", type=float)
    d.add_argument("--beta", type=float, help="generalized tail-shape power")
    d.add_argument("--gamma-param", type=float, help="generalized gamma")
    d.add_argument("--mu", help="multivariate location, comma separated")
    d.add_argument("--V", help="multivariate scale matrix, rows separated by ';'")
    d.add_argument("--loc", type=float, default=0.0)
    d.add_argument("--scale", type=float, default=1.0)
    d.add_argument("--x", action="append", help="evaluation point (repeatable)")
    d.add_argument("--n", type=int)
    d.add_argument("--seed", type=int, default=DEFAULT_SEED)
    d.set_defaults(func=cmd_dist)

    f = sub.add_parser("fit", help="maximum-likelihood fitting")
    fsub = f.add_subparsers(dest="fit_command", parser_class=_Parser)
    for name, func in (("regress", cmd_fit_regress), ("curve", cmd_fit_curve)):
        p = fsub.add_parser(name)
        p.add_argument("--data", required=True)
        p.add_argument("--family", choices=sorted(_ERROR_FAMILIES), default="twin-t")
        p.add_argument("--out")
        p.add_argument("--json", action="store_true", help="structured JSON report")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.set_defaults(func=func)
        if name == "regress":
            p.add_argument("--response", default="y")
            p.add_argument("--covariates", default="x")
            p.add_argument("--hetero", action="store_true")
            p.add_argument("--dispersion", help="covariate driving log sigma^2")
        else:
            p.add_argument("--column", default="y")
            p.add_argument("--skew", choices=[s.value.replace("_", "-") for s in Skew], default="none")
            p.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates")

    s = sub.add_parser("simulate", help="run the regression simulation study")
    s.add_argument("--n", type=int, action="append")
    s.add_argument("--df-true", action="append")
    s.add_argument("--replicates", type=int, default=200)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise _usage("a command is required: dist, fit regress, fit curve, simulate")
        return args.func(args, out)
    except CliError as exc:
        err.write(f"error[{exc.code}]: {exc}\n")
        return exc.status
    except DataError as exc:
        err.write(f"error[data]: {exc}\n")
        return EXIT_DATA
    except ConvergenceError as exc:
        err.write(f"error[convergence]: {exc}\n")
        return EXIT_CONVERGENCE
    except ValueError as exc:
        err.write(f"error[invalid-parameter]: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
