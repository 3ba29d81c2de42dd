"""
Multivariate and generalized twin-t distributions.

:class:`MultivariateTwinT` is the elliptical extension with location ``mu``
and scale matrix ``V``.  :class:`GeneralizedTwinT` replaces x²/ν in the
kernel by |x|^β/γ, mirroring the McDonald-Newey generalized t;
:class:`GeneralizedMultivariateTwinT` combines the two.

Radii are sampled exactly.  Under q = (C+S)^{-2} the squared-radius variable
S = r²/ν has q-density proportional to (1+q) q^{α−1} (1−q)^{δ−1}, a
two-component beta mixture, so no rejection step is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from twint._random import as_generator
from twint.core import NU_NORMAL_LIMIT, asinh_from_log, check_nu
from twint.special import log_beta, log_gamma_ratio, reg_inc_beta

__all__ = [
    "GeneralizedMultivariateTwinT",
    "GeneralizedTwinT",
    "MultivariateTwinT",
    "SingularCovarianceError",
    "gen_mv_log_pdf",
    "mv_mom_init",
    "mv_second_moment_coef",
]

_LN2 = math.log(2.0)


class SingularCovarianceError(ValueError):
    """Sample covariance is rank deficient."""


def _scalar(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _log_beta_variate(a: float, b: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """ln of Beta(a, b) draws, robust to shapes far below 1."""
    # Gamma(a) = Gamma(a+1) * U^{1/a}, done in logs so tiny a cannot underflow.
    log_g1 = np.log(rng.standard_gamma(a + 1.0, size)) + np.log(rng.uniform(size=size)) / a
    log_g2 = np.log(rng.standard_gamma(b + 1.0, size)) + np.log(rng.uniform(size=size)) / b
    return log_g1 - np.logaddexp(log_g1, log_g2)


def sample_log_s(alpha: float, delta: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """ln S where q = (C+S)^{-2} has density ∝ (1+q) q^{α−1}(1−q)^{δ−1}.

    The density is the mixture of Beta(α, δ) and Beta(α+1, δ) with weights
    B(α, δ) : B(α+1, δ) = 1 : α/(α+δ).
    """
    w_first = (alpha + delta) / (2 * alpha + delta)
    first = rng.uniform(size=size) < w_first
    log_q = np.where(
        first,
        _log_beta_variate(alpha, delta, size, rng),
        _log_beta_variate(alpha + 1.0, delta, size, rng),
    )
    # S = (q^{-1/2} − q^{1/2})/2 = sinh(−ln q / 2)
    h = -0.5 * log_q
    with np.errstate(over="ignore"):
        return np.where(h > 20, h - _LN2, np.log(np.sinh(np.maximum(h, 1e-300))))


def _cholesky(V) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError("V must be a square matrix")
    if not np.allclose(V, V.T, rtol=1e-12, atol=0):
        raise ValueError("V must be symmetric")
    try:
        return np.linalg.cholesky(V)
    except np.linalg.LinAlgError as exc:
        raise ValueError("V must be positive definite") from exc


class _Elliptical:
    """Shared location / scale-matrix plumbing."""

    def _setup(self, mu, V):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        chol = _cholesky(V)
        if chol.shape[0] != mu.size:
            raise ValueError(f"mu has length {mu.size} but V is {chol.shape[0]}x{chol.shape[0]}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "V", chol @ chol.T)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "log_det_half", float(np.sum(np.log(np.diag(chol)))))

    @property
    def dim(self) -> int:
        return self.mu.size

    def mahalanobis2(self, x) -> np.ndarray:
        """Q = (x−μ)ᵀ V⁻¹ (x−μ) via a triangular solve."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected vectors of length {self.dim}, got {x.shape[-1]}")
        z = solve_triangular(self.chol, (x - self.mu).reshape(-1, self.dim).T, lower=True)
        q = np.sum(z * z, axis=0)
        return q.reshape(x.shape[:-1])

    def _directions(self, n: int, rng) -> np.ndarray:
        g = rng.standard_normal((n, self.dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class MultivariateTwinT(_Elliptical):
    """p-variate twin-t with location ``mu`` and scale matrix ``V``."""

    nu: float
    mu: np.ndarray
    V: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    log_det_half: float = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nu", check_nu(self.nu))
        self._setup(self.mu, self.V)

    @property
    def log_norm_const(self) -> float:
        nu, p = self.nu, self.dim
        if nu > NU_NORMAL_LIMIT:
            return -0.5 * p * math.log(2 * math.pi) - self.log_det_half
        return (
            (2 + p / 2) * _LN2
            + log_gamma_ratio(nu / 4, p / 2 + 1)
            - self.log_det_half
            - 0.5 * p * math.log(nu * math.pi)
            - math.log(nu + p)
        )

    def logpdf(self, x):
        q = self.mahalanobis2(x)
        if self.nu > NU_NORMAL_LIMIT:
            return _scalar(self.log_norm_const - 0.5 * q)
        with np.errstate(divide="ignore"):
            lsc = asinh_from_log(np.log(q) - math.log(self.nu))
        return _scalar(self.log_norm_const - 0.5 * (self.nu + self.dim) * lsc)

    def pdf(self, x):
        return _scalar(np.exp(self.logpdf(x)))

    def second_moment(self):
        """E{(x−μ)(x−μ)ᵀ}; ``None`` when ν <= 2 (the moment does not exist)."""
        coef = mv_second_moment_coef(self.nu, self.dim)
        return None if coef is None else coef * self.V

    def sample(self, n: int, seed=None) -> np.ndarray:
        """``n`` draws as an (n, p) array: radius × uniform direction, then μ + L·y."""
        if n < 0:
            raise ValueError("n must be >= 0")
        rng = as_generator(seed)
        n = int(n)
        if self.nu > NU_NORMAL_LIMIT:
            y = rng.standard_normal((n, self.dim))
        else:
            log_s = sample_log_s(self.nu / 4, self.dim / 2, n, rng)
            r = np.sqrt(self.nu) * np.exp(0.5 * log_s)
            y = r[:, None] * self._directions(n, rng)
        return self.mu + y @ self.chol.T


def mv_second_moment_coef(nu: float, p: int):
    """c with E{(x−μ)(x−μ)ᵀ} = c·V, or ``None`` when ν <= 2."""
    nu = check_nu(nu)
    if nu > NU_NORMAL_LIMIT:
        return 1.0
    if nu <= 2:
        return None
    return nu / (nu - 2) * math.exp(
        log_gamma_ratio(nu / 4, 0.5) - log_gamma_ratio(nu / 4 + p / 2 + 1, 0.5)
    )


def mv_mom_init(data, nu_fixed: float):
    """Method-of-moments (μ, V) at fixed ν > 2, for seeding a likelihood fit."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n, p = data.shape
    if n <= p:
        raise ValueError("need more rows than columns")
    if not nu_fixed > 2:
        raise ValueError("nu_fixed must be > 2")
    mu = data.mean(axis=0)
    cov = np.atleast_2d(np.cov(data, rowvar=False))
    if np.linalg.matrix_rank(cov) < p:
        raise SingularCovarianceError("sample covariance is singular")
    return mu, cov / mv_second_moment_coef(nu_fixed, p)


@dataclass(frozen=True)
class GeneralizedTwinT:
    """Standard generalized twin-t with tail shape ``beta`` and power ``gam``.

    f(x) ∝ (|x|^β/γ + √(1 + (|x|^β/γ)²))^{−γ−1/β}.  With β = 2 and γ = ν/2 this
    is the twin-t(ν) scaled down by √2.
    """

    beta: float
    gam: float

    def __post_init__(self):
        for name in ("beta", "gam"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be > 0")

    @property
    def log_norm_const(self) -> float:
        b, g = self.beta, self.gam
        return -math.log(g / 2) / b - math.log(g + 1 / b) - log_beta(g / 2, 1 / b + 1)

    def _lsc(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            return asinh_from_log(self.beta * np.log(x) - math.log(self.gam))

    def logpdf(self, x):
        return _scalar(self.log_norm_const - (self.gam + 1 / self.beta) * self._lsc(x))

    def pdf(self, x):
        return _scalar(np.exp(self.logpdf(x)))

    def cdf(self, x):
        """F(x) = 1 + x f(x) − ½ I(q(x); γ/2, 1/β + 1) for x > 0, by symmetry below."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        lsc = self._lsc(ax)
        with np.errstate(invalid="ignore"):
            first = np.where(
                np.isinf(ax),
                0.0,
                ax * np.exp(self.log_norm_const - (self.gam + 1 / self.beta) * lsc),
            )
        tail = np.maximum(
            0.5 * reg_inc_beta(np.exp(-2.0 * lsc), self.gam / 2, 1 / self.beta + 1) - first, 0.0
        )
        out = np.where(x >= 0, 1.0 - tail, tail)
        out = np.where(x == 0, 0.5, out)
        return _scalar(np.clip(out, 0.0, 1.0))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u < 1))):
            raise ValueError("u must lie strictly between 0 and 1")

        def one(v):
            if v == 0.5:
                return 0.0
            # solve on the lower tail, P(X < -x) = min(v, 1 - v)
            w = min(v, 1 - v)
            hi = 1.0
            while self.cdf(-hi) > w:
                hi *= 2.0
            root = optimize.brentq(lambda x: self.cdf(-x) - w, 0.0, hi, xtol=1e-300, rtol=1e-14)
            return root if v > 0.5 else -root

        return _scalar(np.vectorize(one, otypes=[float])(u))

    def abs_moment(self, r: float) -> float:
        """E|X|^r; ``inf`` when r >= βγ."""
        b, g = self.beta, self.gam
        if r < 0:
            raise ValueError("r must be >= 0")
        if r >= b * g:
            return math.inf
        log_m = (
            (r / b) * math.log(g / 2)
            + math.log(g + 2 / b)
            + log_beta(g / 2 - r / (2 * b), (r + 1) / b)
            - math.log(g + r / b + 2 / b)
            - log_beta(g / 2, 1 / b)
        )
        return math.exp(log_m)

    def sample(self, n: int, seed=None) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be >= 0")
        rng = as_generator(seed)
        n = int(n)
        log_s = sample_log_s(self.gam / 2, 1 / self.beta, n, rng)
        mag = np.exp((log_s + math.log(self.gam)) / self.beta)
        return np.where(rng.uniform(size=n) < 0.5, -mag, mag)


@dataclass(frozen=True, eq=False)
class GeneralizedMultivariateTwinT(_Elliptical):
    """Multivariate generalized twin-t: kernel in Q^{β/2}/γ with power −γ − p/β."""

    beta: float
    gam: float
    mu: np.ndarray
    V: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    log_det_half: float = field(init=False, repr=False)

    def __post_init__(self):
        GeneralizedTwinT(self.beta, self.gam)
        self._setup(self.mu, self.V)

    @property
    def log_norm_const(self) -> float:
        b, g, p = self.beta, self.gam, self.dim
        return (
            math.log(b)
            + float(gammaln(p / 2 + 1))
            + math.log(g + 2 * p / b)
            - math.log(g + p / b)
            - (p / b) * math.log(g / 2)
            - math.log(p)
            - 0.5 * p * math.log(math.pi)
            - log_beta(g / 2, p / b)
            - self.log_det_half
        )

    def logpdf(self, x):
        q = self.mahalanobis2(x)
        with np.errstate(divide="ignore"):
            lsc = asinh_from_log(0.5 * self.beta * np.log(q) - math.log(self.gam))
        return _scalar(self.log_norm_const - (self.gam + self.dim / self.beta) * lsc)

    def pdf(self, x):
        return _scalar(np.exp(self.logpdf(x)))


def gen_mv_log_pdf(beta, gam, mu, V, x):
    """Log density of the multivariate generalized twin-t at ``x``."""
    return GeneralizedMultivariateTwinT(beta, gam, mu, V).logpdf(x)
