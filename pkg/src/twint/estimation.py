"""
Maximum-likelihood fitting.

Two model types are supported:

* linear regression with normal, Student-t or twin-t errors, optionally
  heteroscedastic with log σ_i² = λ0 + λ1 z_i;
* location-scale curve fitting of a univariate sample with a twin-t or t
  density, optionally skewed (2-piece, Jones-style or Azzalini-style).

Parameters are optimised on unconstrained scales (log σ, log ν, log γ,
logit(a/ν), atanh φ) and reported on their natural scales.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import optimize as _sopt
from scipy.special import expit

from twint._random import substream
from twint.core import ConvergenceError, TwinT
from twint.special import log_gamma_ratio
from twint.skew import AzzaliniTwinT, JonesTwinT, TwoPieceTwinT

__all__ = [
    "CurveFitSpec",
    "ErrorFamily",
    "FitConfig",
    "FitReport",
    "OptimizeResult",
    "RegressionSpec",
    "Skew",
    "bootstrap_se",
    "fit_curve",
    "fit_regression",
    "numerical_hessian",
    "optimize",
    "regress_loglik",
]

log = logging.getLogger(__name__)

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_Z975 = 1.959963984540054


class ErrorFamily(str, enum.Enum):
    NORMAL = "normal"
    STUDENT_T = "student_t"
    TWIN_T = "twin_t"


class Skew(str, enum.Enum):
    NONE = "none"
    TWO_PIECE = "two_piece"
    JONES = "jones"
    AZZALINI = "azzalini"


@dataclass(frozen=True)
class RegressionSpec:
    error_family: ErrorFamily = ErrorFamily.TWIN_T
    heteroscedastic: bool = False
    response_column: str = "y"
    covariate_columns: tuple[str, ...] = ("x",)
    # Covariate driving log σ²; defaults to the first covariate.
    dispersion_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "error_family", ErrorFamily(self.error_family))
        object.__setattr__(self, "covariate_columns", tuple(self.covariate_columns))
        if not self.covariate_columns:
            raise ValueError("at least one covariate column is required")
        if self.dispersion_column is not None and self.dispersion_column not in self.covariate_columns:
            raise ValueError("dispersion_column must be one of the covariate columns")

    @property
    def param_names(self) -> list[str]:
        names = ["beta0"] + [f"beta{i + 1}" for i in range(len(self.covariate_columns))]
        names += ["lambda0", "lambda1"] if self.heteroscedastic else ["log_sigma"]
        if self.error_family is not ErrorFamily.NORMAL:
            names.append("log_nu")
        return names


@dataclass(frozen=True)
class CurveFitSpec:
    family: ErrorFamily = ErrorFamily.TWIN_T
    skew: Skew = Skew.NONE
    column: str = "y"

    def __post_init__(self):
        object.__setattr__(self, "family", ErrorFamily(self.family))
        object.__setattr__(self, "skew", Skew(self.skew))
        if self.family is ErrorFamily.NORMAL:
            raise ValueError("curve fitting supports the twin_t and student_t families")
        if self.skew is not Skew.NONE and self.family is not ErrorFamily.TWIN_T:
            raise ValueError("skewed variants are only defined for the twin_t family")

    @property
    def param_names(self) -> list[str]:
        names = ["mu", "log_sigma", "log_nu"]
        extra = {
            Skew.TWO_PIECE: "log_gamma",
            Skew.JONES: "logit_a_frac",
            Skew.AZZALINI: "atanh_phi",
        }.get(self.skew)
        return names + ([extra] if extra else [])


@dataclass(frozen=True)
class FitConfig:
    nm_maxiter: int = 5000
    qn_maxiter: int = 500
    fatol: float = 1e-10
    xatol: float = 1e-8
    log_nu_starts: tuple[float, ...] = (math.log(5), math.log(1), math.log(10), math.log(100))
    nu_cap: float = 1e4
    nu_floor: float = 0.05
    bootstrap: int = 0
    seed: int = 0


@dataclass
class FitReport:
    estimates: dict[str, float]
    std_errors: dict[str, float]
    loglik: float
    aic: float
    n_obs: int
    converged: bool
    iterations: int
    hessian_ok: bool
    n_params: int = 0
    model: str = ""
    nu_ci: tuple[float, float] | None = None
    normal_limit: bool = False
    notes: list[str] = field(default_factory=list)
    bootstrap_se: dict[str, float] = field(default_factory=dict)
    # unconstrained optimum, used for refits and bootstrap
    theta: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "n_obs": self.n_obs,
            "n_params": self.n_params,
            "loglik": self.loglik,
            "aic": self.aic,
            "converged": self.converged,
            "iterations": self.iterations,
            "hessian_ok": self.hessian_ok,
            "normal_limit": self.normal_limit,
            "estimates": dict(self.estimates),
            "std_errors": dict(self.std_errors),
        }
        if self.nu_ci is not None:
            out["nu_ci95"] = list(self.nu_ci)
        if self.bootstrap_se:
            out["bootstrap_se"] = dict(self.bootstrap_se)
        if self.notes:
            out["notes"] = list(self.notes)
        return out


# ---------------------------------------------------------------------------
# Optimisation primitives
# ---------------------------------------------------------------------------


@dataclass
class OptimizeResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def optimize(objective: Callable[[np.ndarray], float], x0, config: FitConfig | None = None) -> OptimizeResult:
    """Maximise ``objective``: Nelder-Mead, then a BFGS polish.

    BFGS uses finite-difference gradients and its result is kept only if it
    improves on the simplex optimum.  Non-finite objective values are treated
    as −inf.
    """
    config = config or FitConfig()
    x0 = np.asarray(x0, dtype=float)
    f0 = objective(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")

    def neg(x):
        v = objective(x)
        return -v if np.isfinite(v) else np.inf

    nm = _sopt.minimize(
        neg,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": config.nm_maxiter,
            "maxfev": 4 * config.nm_maxiter,
            "xatol": config.xatol,
            "fatol": config.fatol * max(1.0, abs(f0)),
            "adaptive": x0.size > 3,
        },
    )
    best_x, best_f = nm.x, nm.fun
    iterations = int(nm.nit)
    converged = bool(nm.success)
    with np.errstate(all="ignore"):
        qn = _sopt.minimize(
            neg, best_x, method="BFGS", options={"maxiter": config.qn_maxiter, "gtol": 1e-6}
        )
    iterations += int(qn.nit)
    if np.isfinite(qn.fun) and qn.fun < best_f:
        best_x, best_f = qn.x, qn.fun
    return OptimizeResult(np.asarray(best_x, dtype=float), float(-best_f), iterations, converged)


def numerical_hessian(objective: Callable[[np.ndarray], float], x, rel_step: float = 1e-4):
    """Central-difference Hessian with steps h_j = max(1e-4, 1e-4·|x_j|).

    Returns ``(H, ok)`` where ``ok`` says whether −H is positive definite
    (i.e. ``x`` looks like a strict local maximum).
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    h = np.maximum(rel_step, rel_step * np.abs(x))
    f0 = objective(x)
    H = np.empty((k, k))
    eye = np.eye(k)
    for i in range(k):
        ei = eye[i] * h[i]
        H[i, i] = (objective(x + ei) - 2 * f0 + objective(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = eye[j] * h[j]
            H[i, j] = (
                objective(x + ei + ej)
                - objective(x + ei - ej)
                - objective(x - ei + ej)
                + objective(x - ei - ej)
            ) / (4 * h[i] * h[j])
    H = np.tril(H) + np.tril(H, -1).T
    H = 0.5 * (H + H.T)
    ok = bool(np.all(np.isfinite(H)))
    if ok:
        try:
            np.linalg.cholesky(-H)
        except np.linalg.LinAlgError:
            ok = False
    return H, ok


# ---------------------------------------------------------------------------
# Standardised log densities
# ---------------------------------------------------------------------------


def _normal_logpdf(z):
    return -_LOG_SQRT_2PI - 0.5 * z * z


def _t_logpdf(z, nu):
    return (
        log_gamma_ratio(nu / 2, 0.5)
        - 0.5 * math.log(nu * math.pi)
        - 0.5 * (nu + 1) * np.log1p(z * z / nu)
    )


def _std_logpdf(family: ErrorFamily, z, nu):
    if family is ErrorFamily.NORMAL:
        return _normal_logpdf(z)
    if family is ErrorFamily.STUDENT_T:
        return _t_logpdf(z, nu)
    return TwinT(nu).logpdf(z)


def _nu_from_log(log_nu: float, config: FitConfig) -> float:
    return math.exp(min(max(log_nu, math.log(config.nu_floor)), math.log(config.nu_cap)))


# ---------------------------------------------------------------------------
# Regression
# ---------------------------------------------------------------------------


def _design(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(X.shape[0]), X])


def regress_loglik(spec: RegressionSpec, params, y, X, z=None, config: FitConfig | None = None) -> float:
    """Log-likelihood Σ[−ln σ_i + ln f((y_i − x_iᵀβ)/σ_i)].

    ``params`` follow ``spec.param_names``: β0, β1.., then ln σ (or λ0, λ1
    with σ_i = exp((λ0 + λ1 z_i)/2)), then ln ν unless the family is normal.
    ``X`` holds the covariates without the intercept column; ``z`` is the
    dispersion covariate (default: first column of ``X``).  Non-finite
    values come back as −inf.
    """
    config = config or FitConfig()
    params = np.asarray(params, dtype=float)
    y = np.asarray(y, dtype=float)
    D = _design(X)
    k = D.shape[1]
    beta = params[:k]
    if spec.heteroscedastic:
        if z is None:
            z = D[:, 1]
        log_sigma = 0.5 * (params[k] + params[k + 1] * np.asarray(z, dtype=float))
        rest = params[k + 2:]
    else:
        log_sigma = params[k]
        rest = params[k + 1:]
    nu = _nu_from_log(rest[0], config) if spec.error_family is not ErrorFamily.NORMAL else None
    with np.errstate(all="ignore"):
        resid = (y - D @ beta) * np.exp(-log_sigma)
        total = float(np.sum(_std_logpdf(spec.error_family, resid, nu) - log_sigma))
    return total if np.isfinite(total) else -math.inf


def _natural(name: str, value: float, se: float | None):
    """Map an unconstrained parameter to (natural name, value, se)."""
    if name.startswith("log_"):
        nat = math.exp(value)
        return name[4:], nat, None if se is None else nat * se
    if name == "logit_a_frac":
        frac = float(expit(value))
        return "a_frac", frac, None if se is None else frac * (1 - frac) * se
    if name == "atanh_phi":
        phi = math.tanh(value)
        return "phi", phi, None if se is None else (1 - phi * phi) * se
    return name, value, se


def _finish(
    model: str,
    names: Sequence[str],
    objective: Callable[[np.ndarray], float],
    res: OptimizeResult,
    n_obs: int,
    config: FitConfig,
) -> FitReport:
    theta = res.x.copy()
    k = len(names)
    normal_limit = False
    free = list(range(k))
    if "log_nu" in names:
        j = names.index("log_nu")
        if theta[j] >= math.log(config.nu_cap) - 1e-6:
            normal_limit = True
            theta[j] = math.log(config.nu_cap)
            free.remove(j)
        elif theta[j] <= math.log(config.nu_floor):
            theta[j] = math.log(config.nu_floor)

    def sub_objective(v):
        full = theta.copy()
        full[free] = v
        return objective(full)

    H, ok = numerical_hessian(sub_objective, theta[free])
    se_raw: dict[str, float] = {}
    if ok:
        cov = np.linalg.inv(-H)
        diag = np.diag(cov)
        if np.all(diag > 0):
            for idx, d in zip(free, diag):
                se_raw[names[idx]] = math.sqrt(d)
        else:
            ok = False

    estimates: dict[str, float] = {}
    std_errors: dict[str, float] = {}
    for i, name in enumerate(names):
        nat_name, val, se = _natural(name, float(theta[i]), se_raw.get(name) if ok else None)
        estimates[nat_name] = val
        if se is not None:
            std_errors[nat_name] = se

    notes = []
    nu_ci = None
    if normal_limit:
        notes.append(f"nu reached the cap {config.nu_cap:g}: normal limit")
    elif ok and "log_nu" in se_raw:
        lnu, s = theta[names.index("log_nu")], se_raw["log_nu"]
        # clipped to the admissible range; an upper end at the cap means
        # the data do not bound ν from above
        top = math.log(config.nu_cap)
        nu_ci = tuple(
            min(max(math.exp(min(end, top)), config.nu_floor), config.nu_cap)
            for end in (lnu - _Z975 * s, lnu + _Z975 * s)
        )
    if "log_gamma" in names:
        notes.append("two-piece density: Hessian-based standard errors are unreliable; prefer bootstrap")
    if not ok:
        notes.append("Hessian not negative definite: standard errors omitted")

    loglik = float(objective(theta))
    return FitReport(
        estimates=estimates,
        std_errors=std_errors,
        loglik=loglik,
        aic=2 * k - 2 * loglik,
        n_obs=n_obs,
        converged=res.converged,
        iterations=res.iterations,
        hessian_ok=ok,
        n_params=k,
        model=model,
        nu_ci=nu_ci,
        normal_limit=normal_limit,
        notes=notes,
        theta=theta,
    )


def _multistart(objective, starts, config: FitConfig) -> OptimizeResult:
    best = None
    iterations = 0
    for x0 in starts:
        if not np.isfinite(objective(x0)):
            continue
        res = optimize(objective, x0, config)
        iterations += res.iterations
        if best is None or res.value > best.value:
            best = res
    if best is None:
        raise ValueError("log-likelihood is not finite at any starting point")
    best.iterations = iterations
    return best


def fit_regression(
    spec: RegressionSpec,
    y,
    X,
    z=None,
    config: FitConfig | None = None,
    starts: Sequence[np.ndarray] | None = None,
) -> FitReport:
    """Maximum-likelihood linear regression under ``spec``.

    Starts from OLS; for t and twin-t errors the fit is repeated from each
    ``config.log_nu_starts`` value and the best optimum kept.
    """
    config = config or FitConfig()
    y = np.asarray(y, dtype=float)
    D = _design(X)
    n, k = D.shape
    names = spec.param_names
    if n <= len(names):
        raise ValueError(f"need more than {len(names)} observations, got {n}")
    beta_ols, *_ = np.linalg.lstsq(D, y, rcond=None)
    resid = y - D @ beta_ols
    model = f"regress:{spec.error_family.value}" + (":hetero" if spec.heteroscedastic else "")

    scale = max(float(np.max(np.abs(y))), 1.0)
    if float(np.sqrt(np.mean(resid**2))) <= 1e-12 * scale:
        # Exact fit: the likelihood is unbounded as σ -> 0.
        est = {f"beta{i}": float(b) for i, b in enumerate(beta_ols)}
        if spec.heteroscedastic:
            est.update(lambda0=-math.inf, lambda1=0.0)
        else:
            est["sigma"] = 0.0
        if spec.error_family is not ErrorFamily.NORMAL:
            est["nu"] = math.nan
        return FitReport(
            estimates=est,
            std_errors={},
            loglik=math.inf,
            aic=-math.inf,
            n_obs=n,
            converged=True,
            iterations=0,
            hessian_ok=False,
            n_params=len(names),
            model=model,
            notes=["exact fit: residuals are zero and the likelihood is unbounded"],
        )

    def objective(theta):
        return regress_loglik(spec, theta, y, D[:, 1:], z, config)

    if starts is None:
        log_sigma0 = math.log(float(np.sqrt(np.sum(resid**2) / (n - k))))
        disp = [2 * log_sigma0, 0.0] if spec.heteroscedastic else [log_sigma0]
        base = list(beta_ols) + disp
        if spec.error_family is ErrorFamily.NORMAL:
            starts = [np.array(base)]
        else:
            starts = [np.array(base + [ln]) for ln in config.log_nu_starts]
    res = _multistart(objective, starts, config)
    return _finish(model, names, objective, res, n, config)


# ---------------------------------------------------------------------------
# Curve fitting
# ---------------------------------------------------------------------------


# γ = e^{±1/2}, a/ν = expit(±1), φ = ±1/2
_SKEW_START = {Skew.TWO_PIECE: 0.5, Skew.JONES: 1.0, Skew.AZZALINI: math.atanh(0.5)}


def _curve_dist(spec: CurveFitSpec, nu: float, extra: float | None):
    if spec.family is ErrorFamily.STUDENT_T:
        return None
    if spec.skew is Skew.NONE:
        return TwinT(nu)
    if spec.skew is Skew.TWO_PIECE:
        return TwoPieceTwinT(nu, math.exp(extra))
    if spec.skew is Skew.JONES:
        return JonesTwinT.from_skew(nu, float(expit(extra)))
    return AzzaliniTwinT(nu, math.tanh(extra))


def curve_loglik(spec: CurveFitSpec, params, y, config: FitConfig | None = None) -> float:
    """Location-scale(-skew) log-likelihood; params follow ``spec.param_names``."""
    config = config or FitConfig()
    params = np.asarray(params, dtype=float)
    mu, log_sigma = params[0], params[1]
    nu = _nu_from_log(params[2], config)
    extra = params[3] if params.size > 3 else None
    try:
        with np.errstate(all="ignore"):
            z = (np.asarray(y, dtype=float) - mu) * math.exp(-log_sigma)
            if spec.family is ErrorFamily.STUDENT_T:
                lp = _t_logpdf(z, nu)
            else:
                lp = _curve_dist(spec, nu, extra).logpdf(z)
            total = float(np.sum(lp)) - z.size * log_sigma
    except (ConvergenceError, ValueError, OverflowError):
        return -math.inf
    return total if np.isfinite(total) else -math.inf


def fit_curve(
    spec: CurveFitSpec,
    y,
    config: FitConfig | None = None,
    starts: Sequence[np.ndarray] | None = None,
) -> FitReport:
    """Fit μ, σ, ν (and a skew parameter) to a univariate sample."""
    config = config or FitConfig()
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 8:
        raise ValueError("curve fitting needs a 1-d sample of at least 8 observations")
    names = spec.param_names

    def objective(theta):
        return curve_loglik(spec, theta, y, config)

    if starts is None:
        mu0 = float(np.median(y))
        mad = float(np.median(np.abs(y - mu0))) * 1.4826
        sigma0 = mad if mad > 0 else float(np.std(y)) or 1.0
        tail = [0.0] if len(names) > 3 else []
        starts = [np.array([mu0, math.log(sigma0), ln] + tail) for ln in config.log_nu_starts]
        if tail:
            # the symmetric point can be a saddle or a lesser mode, so also
            # start from moderate skew either way
            step = _SKEW_START[spec.skew]
            lead = config.log_nu_starts[0]
            starts += [np.array([mu0, math.log(sigma0), lead, sgn * step]) for sgn in (1.0, -1.0)]
    res = _multistart(objective, starts, config)
    model = f"curve:{spec.family.value}" + ("" if spec.skew is Skew.NONE else f":{spec.skew.value}")
    report = _finish(model, names, objective, res, y.size, config)
    if spec.skew is Skew.JONES:
        nu, frac = report.estimates["nu"], report.estimates["a_frac"]
        report.estimates["a"], report.estimates["b"] = nu * frac, nu * (1 - frac)
    if config.bootstrap > 0:
        report.bootstrap_se = bootstrap_se(
            lambda sample, x0: fit_curve(spec, sample, replace(config, bootstrap=0), starts=[x0]),
            y,
            report,
            config.bootstrap,
            config.seed,
        )
    return report


def bootstrap_se(refit, data, report: FitReport, n_boot: int = 200, seed: int = 0) -> dict[str, float]:
    """Bootstrap standard errors by resampling rows and refitting.

    ``refit(resampled_data, x0)`` must return a :class:`FitReport`; it is
    started from the original optimum.  Resample ``i`` uses the stream
    ``(seed, i)``, so results do not depend on execution order.
    """
    data = np.asarray(data)
    draws: dict[str, list[float]] = {k: [] for k in report.estimates}
    for i in range(n_boot):
        rng = substream(seed, i)
        idx = rng.integers(0, data.shape[0], data.shape[0])
        try:
            rep = refit(data[idx], report.theta)
        except ValueError:
            continue
        for k in draws:
            draws[k].append(rep.estimates[k])
    return {k: float(np.std(v, ddof=1)) for k, v in draws.items() if len(v) > 1}
