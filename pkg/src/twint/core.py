"""
The symmetric twin-t distribution and a location-scale wrapper.

The standard twin-t density with ``nu`` degrees of freedom is

    f(x) = k (S + C)^{-(nu+1)/2},   S = x^2/nu,   C = sqrt(1 + S^2),

which behaves like a normal density near the origin and like a Student-t with
the same ``nu`` in the tails.  Since ``S + C = exp(asinh(S))`` everything is
evaluated through ``asinh`` to stay finite for very large ``|x|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

from twint._random import as_generator
from twint.special import log_beta, log_gamma_ratio, reg_inc_beta

__all__ = [
    "NU_MIN",
    "NU_NORMAL_LIMIT",
    "ConvergenceError",
    "KernelTerms",
    "LocationScale",
    "TwinT",
    "TwinTMoments",
    "kernel_terms",
    "log_norm_const",
    "rejection_sample",
]

NU_MIN = 1e-3
NU_NORMAL_LIMIT = 1e7

_LN2 = math.log(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ConvergenceError(ArithmeticError):
    """An iterative numerical routine failed to reach its tolerance."""


def check_nu(nu) -> float:
    nu = float(nu)
    if math.isnan(nu) or nu <= 0:
        raise ValueError("nu must be > 0")
    if nu < NU_MIN:
        raise ValueError(f"nu must be >= {NU_MIN} (supported range)")
    return nu


def _scalar(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def asinh_from_log(log_s):
    """asinh(exp(log_s)) for s >= 0 given as a logarithm; safe when s overflows."""
    log_s = np.asarray(log_s, dtype=float)
    with np.errstate(over="ignore"):
        big = log_s > 345.0
        out = np.arcsinh(np.exp(np.where(big, 0.0, log_s)))
    return np.where(big, _LN2 + log_s, out)


def log_sc(x, nu):
    """ln(S + C) = asinh(x^2/nu), with no overflow for huge |x|."""
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        return asinh_from_log(2.0 * np.log(x) - math.log(nu))


def log_norm_const(nu) -> float:
    """ln k for the standard twin-t density.

    k = 2^{5/2} Γ(ν/4+3/2) / (√(πν) Γ(ν/4) (ν+1)), evaluated in the equivalent
    form 2^{3/2} / (√ν (ν+1) B(ν/4, 3/2)).  Beyond ``NU_NORMAL_LIMIT`` the
    standard normal constant is returned.
    """
    nu = check_nu(nu)
    if nu > NU_NORMAL_LIMIT:
        return -_LOG_SQRT_2PI
    return 1.5 * _LN2 - 0.5 * math.log(nu) - math.log1p(nu) - log_beta(nu / 4, 1.5)


class KernelTerms(NamedTuple):
    S: np.ndarray
    C: np.ndarray
    p: np.ndarray


def kernel_terms(x, nu) -> KernelTerms:
    """S = x²/ν, C = √(1+S²) and p = (C+S)^{-2} at ``x``."""
    nu = check_nu(nu)
    x = np.asarray(x, dtype=float)
    S = x * x / nu
    C = np.hypot(1.0, S)
    p = np.exp(-2.0 * log_sc(x, nu))
    return KernelTerms(S, C, p)


@dataclass(frozen=True)
class TwinTMoments:
    """Closed-form moments; ``None`` where the moment does not exist."""

    variance: float | None
    fourth: float | None
    abs_mean: float | None


# asinh(s) = Σ (−1)^n C(2n, n) s^{2n+1} / (4^n (2n+1)); 60 terms reach
# double precision for s < 1/2
_ASINH_TERMS = 60
_ASINH_COEFS = np.array(
    [(-1) ** k * math.comb(2 * k, k) / (4**k * (2 * k + 1)) for k in range(_ASINH_TERMS)]
)


def rejection_sample(nu: float, n: int, rng: np.random.Generator, sign=None):
    """Draw ``n`` standard twin-t variates by rejection from t(ν).

    A t(ν) proposal X is accepted with probability
    ((1 + X²/ν) / (C + X²/ν))^{(ν+1)/2}.  Returns the draws and the number
    of proposals consumed.

    If ``sign`` is given it is called as ``sign(rng, m)`` on each batch and
    must return +1/-1 multipliers; proposals then use |t|.  This is how the
    2-piece sampler chooses signs before the acceptance step.
    """
    out = np.empty(n)
    filled = 0
    proposed = 0
    # Expected proposals per draw, with a little head-room.
    ratio = math.exp(log_norm_const(nu) - _t_log_norm_const(nu)) if nu <= NU_NORMAL_LIMIT else 1.0
    while filled < n:
        need = n - filled
        m = int(need * ratio * 1.05) + 16
        z = rng.standard_normal(m)
        if nu > NU_NORMAL_LIMIT:
            x = z
            keep = np.ones(m, dtype=bool)
        else:
            x = z / np.sqrt(rng.chisquare(nu, m) / nu)
            s = x * x / nu
            log_acc = 0.5 * (nu + 1) * (np.log1p(s) - log_sc(x, nu))
            keep = np.log(rng.uniform(size=m)) < log_acc
        if sign is not None:
            x = np.abs(x) * sign(rng, m)
        idx = np.flatnonzero(keep)
        if idx.size > need:
            # Count proposals only up to the last one actually used.
            idx = idx[:need]
            proposed += int(idx[-1]) + 1
        else:
            proposed += m
        out[filled:filled + idx.size] = x[idx]
        filled += idx.size
    return out, proposed


def _t_log_norm_const(nu: float) -> float:
    return log_gamma_ratio(nu / 2, 0.5) - 0.5 * math.log(nu * math.pi)


@dataclass(frozen=True)
class TwinT:
    """Standard (location 0, scale 1) twin-t distribution.

    Parameters
    ----------
    nu : float
        Degrees of freedom, ``nu >= 1e-3``.  Values above ``1e7`` (including
        ``inf``) are treated as the exact standard normal limit.
    """

    nu: float

    def __post_init__(self):
        object.__setattr__(self, "nu", check_nu(self.nu))

    @property
    def is_normal(self) -> bool:
        return self.nu > NU_NORMAL_LIMIT

    @property
    def log_norm_const(self) -> float:
        return log_norm_const(self.nu)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_normal:
            return _scalar(-_LOG_SQRT_2PI - 0.5 * x * x)
        return _scalar(self.log_norm_const - 0.5 * (self.nu + 1) * log_sc(x, self.nu))

    def pdf(self, x):
        return _scalar(np.exp(self.logpdf(x)))

    def cdf(self, x):
        """Distribution function, using a single incomplete beta for x > 0."""
        x = np.asarray(x, dtype=float)
        if self.is_normal:
            return _scalar(ndtr(x))
        nu = self.nu
        ax = np.abs(x)
        lsc = log_sc(ax, nu)
        with np.errstate(invalid="ignore"):
            first = np.where(
                np.isinf(ax), 0.0, ax * np.exp(self.log_norm_const - 0.5 * (nu + 1) * lsc)
            )
        # P(X > |x|), formed directly so the far left tail keeps its precision
        tail = np.maximum(0.5 * reg_inc_beta(np.exp(-2.0 * lsc), nu / 4, 1.5) - first, 0.0)
        out = np.where(x >= 0, 1.0 - tail, tail)
        out = np.where(x == 0, 0.5, out)
        return _scalar(np.clip(out, 0.0, 1.0))

    def sf(self, x):
        return _scalar(self.cdf(-np.asarray(x, dtype=float)))

    def quantile(self, u, tol: float = 1e-10, maxiter: int = 200):
        """Inverse distribution function by Newton's method started at 0.

        Elements where Newton does not settle within ``maxiter`` steps (or
        produces a non-finite step) are finished by bisection.
        """
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u < 1))):
            raise ValueError("u must lie strictly between 0 and 1")
        if self.is_normal:
            return _scalar(ndtri(u))
        flat = u.ravel()
        x = np.zeros_like(flat)
        active = np.arange(flat.size)
        for _ in range(maxiter):
            if active.size == 0:
                break
            xa = x[active]
            step = (self.cdf(xa) - flat[active]) / self.pdf(xa)
            bad = ~np.isfinite(step)
            xn = xa - np.where(bad, 0.0, step)
            x[active] = xn
            done = bad | (np.abs(step) <= tol)
            # Non-finite steps go straight to bisection.
            x[active[bad]] = np.nan
            active = active[~done]
        failed = np.flatnonzero(np.isnan(x))
        failed = np.union1d(failed, active)
        for i in failed:
            x[i] = self._bisect(flat[i])
        return _scalar(x.reshape(u.shape))

    def _bisect(self, u: float) -> float:
        hi = 1.0
        while self.cdf(hi) < u or self.cdf(-hi) > u:
            hi *= 2.0
            if hi > 1e300:
                raise ConvergenceError(f"cannot bracket quantile for u={u}")
        lo, hi = -hi, hi
        for _ in range(2000):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < u:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)

    def sample(self, n: int, seed=None) -> np.ndarray:
        """``n`` i.i.d. draws; reproducible for a given integer ``seed``."""
        return self.sample_with_count(n, seed)[0]

    def sample_with_count(self, n: int, seed=None):
        """Draws plus the number of t(ν) proposals the rejection step used."""
        if n < 0:
            raise ValueError("n must be >= 0")
        return rejection_sample(self.nu, int(n), as_generator(seed))

    def abs_moment(self, r: float) -> float:
        """E|X|^r for real ``r >= 0``; ``inf`` when ``r >= nu``."""
        if r < 0:
            raise ValueError("r must be >= 0")
        if r == 0:
            return 1.0
        nu = self.nu
        if self.is_normal:
            return math.exp(0.5 * r * _LN2 + math.lgamma((r + 1) / 2) - 0.5 * math.log(math.pi))
        if r >= nu:
            return math.inf
        # From the incomplete-beta substitution q = (C+S)^{-2}.
        log_m = (
            0.5 * r * math.log(nu / 2)
            + math.log((nu + 2) / (nu + r + 2))
            + log_beta(nu / 4 - r / 4, (r + 1) / 2) - log_beta(nu / 4, 0.5)
        )
        return math.exp(log_m)

    def even_moment(self, m: int) -> float:
        """E(X^{2m}); ``inf`` when ``nu <= 2m``."""
        m = int(m)
        if m < 0:
            raise ValueError("m must be >= 0")
        if m == 0:
            return 1.0
        nu = self.nu
        if self.is_normal:
            return math.exp(math.lgamma(2 * m + 1) - m * _LN2 - math.lgamma(m + 1))
        if nu <= 2 * m:
            return math.inf
        q = nu / 4
        log_m = (
            (3 - 3 * m) * _LN2
            + m * math.log(nu)
            + math.lgamma(2 * m)
            - math.lgamma(m)
            + log_gamma_ratio(q, 1.5)
            - log_gamma_ratio(q - m / 2, m + 0.5)
            - math.log(nu + 2 * m + 2)
        )
        return math.exp(log_m)

    def variance(self) -> float:
        nu = self.nu
        if self.is_normal:
            return 1.0
        if nu <= 2:
            return math.inf
        return 4 * (nu + 2) / ((nu + 4) * (nu - 2)) * math.exp(2 * log_gamma_ratio(nu / 4, 0.5))

    def fourth_moment(self) -> float:
        nu = self.nu
        if self.is_normal:
            return 3.0
        if nu <= 4:
            return math.inf
        return 3 * nu * nu / ((nu - 4) * (nu + 6))

    def abs_mean(self) -> float:
        nu = self.nu
        if self.is_normal:
            return math.sqrt(2 / math.pi)
        if nu <= 1:
            return math.inf
        log_m = (
            3.5 * _LN2
            + 0.5 * math.log(nu)
            + log_gamma_ratio(nu / 4, 1.5)
            - 0.5 * math.log(math.pi)
            - math.log((nu - 1) * (nu + 3))
        )
        return math.exp(log_m)

    def moments(self) -> TwinTMoments:
        nu = self.nu
        return TwinTMoments(
            variance=self.variance() if nu > 2 else None,
            fourth=self.fourth_moment() if nu > 4 else None,
            abs_mean=self.abs_mean() if nu > 1 else None,
        )

    def logpdf_series(self, x, terms: int = 1):
        """Truncated expansion of ln f in powers of S = x²/ν (at most 3 terms).

        Only meaningful for S < 1; intended as a diagnostic of the near-normal
        centre, whose first departure from the Gaussian shape is O(x⁶).
        """
        if not 0 <= terms <= 3:
            raise ValueError("terms must be between 0 and 3")
        s = np.asarray(x, dtype=float) ** 2 / self.nu
        series = [s, -s**3 / 6, 3 * s**5 / 40][:terms]
        return _scalar(self.log_norm_const - 0.5 * (self.nu + 1) * sum(series, np.zeros_like(s)))


    def logpdf_series_remainder(self, x, terms: int = 1):
        """ln f(x) − logpdf_series(x, terms), evaluated without cancellation.

        For S < 1/2 the tail of the asinh series is summed directly, so the
        O(x^{4·terms+2}) remainder keeps full relative precision even where
        it is far below the resolution of ln f itself.
        """
        if not 0 <= terms <= 3:
            raise ValueError("terms must be between 0 and 3")
        s = np.asarray(x, dtype=float) ** 2 / self.nu
        if self.is_normal:
            return _scalar(np.zeros_like(s))
        n = np.arange(_ASINH_TERMS)
        coef = _ASINH_COEFS
        small = s < 0.5
        ss = np.where(small, s, 0.0)[..., None]
        tail = np.sum(np.where(n >= terms, coef * ss ** (2 * n + 1), 0.0), axis=-1)
        head = np.sum(np.where(n < terms, coef * s[..., None] ** (2 * n + 1), 0.0), axis=-1)
        rem = np.where(small, tail, np.arcsinh(s) - head)
        return _scalar(-0.5 * (self.nu + 1) * rem)

@dataclass(frozen=True)
class LocationScale:
    """Shift-and-scale wrapper: density(y) = base.pdf((y − mu)/sigma)/sigma.

    ``base`` may be any standardised distribution object exposing
    ``logpdf``, ``cdf``, ``quantile`` and ``sample``.
    """

    base: object
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be > 0")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")

    def _z(self, y):
        return (np.asarray(y, dtype=float) - self.mu) / self.sigma

    def logpdf(self, y):
        return _scalar(self.base.logpdf(self._z(y)) - math.log(self.sigma))

    def pdf(self, y):
        return _scalar(np.exp(self.logpdf(y)))

    def cdf(self, y):
        return self.base.cdf(self._z(y))

    def quantile(self, u):
        return _scalar(self.mu + self.sigma * np.asarray(self.base.quantile(u)))

    def sample(self, n: int, seed=None) -> np.ndarray:
        return self.mu + self.sigma * self.base.sample(n, seed)
