"""
Skewed twin-t distributions.

Three constructions are provided, all standardised (location 0, scale 1):

* :class:`TwoPieceTwinT` -- different scales either side of the mode at 0.
* :class:`JonesTwinT` -- the factors p(x) and 1-p(x) of the twin-t kernel
  raised to different powers.
* :class:`AzzaliniTwinT` -- the density multiplied by 2 G(x), where
  G(x) = (1-phi)/2 + phi p(x).

Here p(x) is the skewing weight returned by :func:`skew_weight`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp

from twint._random import as_generator
from twint.core import TwinT, check_nu, log_sc, rejection_sample
from twint.special import log_beta, reg_inc_beta

__all__ = [
    "AzzaliniTwinT",
    "EnvelopeError",
    "JonesTwinT",
    "TwoPieceTwinT",
    "log_skew_weights",
    "skew_generic_sample",
    "skew_weight",
]

_LN2 = math.log(2.0)


class EnvelopeError(ValueError):
    """The rejection envelope does not dominate the target density."""


def _scalar(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def log_skew_weights(x, nu):
    """(ln p(x), ln(1 − p(x))), accurate in both tails.

    With W = C + S the smaller weight is 1/(2 W³ (√C + √S)²), which follows
    from C − S = 1/W and needs no subtraction; the larger is its complement.
    """
    nu = check_nu(nu)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    lsc = log_sc(ax, nu)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        log_s = 2.0 * np.log(ax) - math.log(nu)
        big = log_s > 300.0
        s = np.exp(np.where(big, 0.0, log_s))
        # ln(√C + √S), with √C ≈ √S once S is huge
        log_root_sum = np.where(
            big, _LN2 + 0.5 * log_s, np.log(np.sqrt(np.hypot(1.0, s)) + np.sqrt(s))
        )
    log_small = -_LN2 - 3.0 * lsc - 2.0 * log_root_sum
    log_big = np.log1p(-np.exp(log_small))
    pos = x >= 0
    return np.where(pos, log_big, log_small), np.where(pos, log_small, log_big)


def skew_weight(x, nu):
    """p(x) = 1/2 + C^{1/2}(x/√ν)/(C + x²/ν), with p(−x) = 1 − p(x)."""
    lp, _ = log_skew_weights(x, nu)
    return _scalar(np.exp(lp))


def _to_line(t):
    """Map t in (−1, 1) to the real line; returns x and dx/dt."""
    t = np.asarray(t, dtype=float)
    one_m = 1.0 - t * t
    return t / one_m, (1.0 + t * t) / (one_m * one_m)


def _quad_line(fn, epsabs=1e-12, epsrel=1e-12):
    """∫ fn(x) dx over the real line via x = t/(1−t²), split at 0."""

    def integrand(t):
        x, jac = _to_line(t)
        return fn(x) * jac

    total = 0.0
    err = 0.0
    for lo, hi in ((-1.0, 0.0), (0.0, 1.0)):
        val, e = integrate.quad(integrand, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=400)
        total += val
        err += e
    return total, err


def numeric_moment(logpdf, r: int) -> float:
    """E(X^r) by quadrature of x^r·exp(logpdf(x))."""
    val, _ = _quad_line(lambda x: x**r * math.exp(logpdf(x)) if abs(x) < 1e300 else 0.0)
    return val


# (√u + √(1−u))³ = Σ c u^{s} (1−u)^{r}
_CUBE = ((1.0, 1.5, 0.0), (3.0, 1.0, 0.5), (3.0, 0.5, 1.0), (1.0, 0.0, 1.5))


def _cube_beta_terms(alpha: float, beta: float):
    """Shapes, weights and log total of ∫₀¹ (√u + √(1−u))³ u^{α−1}(1−u)^{β−1} du.

    Under u = p(x) the twin-t family of kernels maps to this integrand, so
    normalising constants and cdfs become finite sums of (incomplete) beta
    functions.
    """
    shapes = [(alpha + s, beta + r) for _, s, r in _CUBE]
    logs = np.array([math.log(c) + float(log_beta(a, b)) for (c, _, _), (a, b) in zip(_CUBE, shapes)])
    log_total = float(logsumexp(logs))
    return shapes, np.exp(logs - log_total), log_total


def _cube_beta_cdf(x, nu: float, alpha: float, beta: float):
    """P(X ≤ x) when u = p(X) has density ∝ (√u + √(1−u))³ u^{α−1}(1−u)^{β−1}.

    Returns the cdf and the upper tail, each summed directly so neither
    tail loses relative precision.
    """
    shapes, weights, _ = _cube_beta_terms(alpha, beta)
    lp, lr = log_skew_weights(x, nu)
    lower = sum(w * reg_inc_beta(np.exp(lp), a, b) for w, (a, b) in zip(weights, shapes))
    upper = sum(w * reg_inc_beta(np.exp(lr), b, a) for w, (a, b) in zip(weights, shapes))
    neg = np.asarray(x) < 0
    return np.where(neg, lower, 1.0 - upper), np.where(neg, 1.0 - lower, upper)


def _quantile_by_cdf(cdf, u, sf=None):
    """Invert ``cdf`` by bracketing and Brent's method; the upper half uses ``sf``."""
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("u must lie strictly between 0 and 1")

    def one(v):
        if sf is not None and v > 0.5:
            tail = 1.0 - v  # exact for v in [1/2, 1]

            def fn(x):
                return tail - float(sf(x))
        else:

            def fn(x):
                return float(cdf(x)) - v
        hi = 1.0
        while fn(hi) < 0:
            hi *= 2.0
        lo = -1.0
        while fn(lo) > 0:
            lo *= 2.0
        return optimize.brentq(fn, lo, hi, xtol=1e-300, rtol=1e-14)

    return _scalar(np.vectorize(one, otypes=[float])(u))


def skew_generic_sample(
    logpdf,
    proposal: TwinT,
    m: float,
    n: int,
    seed=None,
    scale: float = 1.0,
    grid=None,
    return_count: bool = False,
):
    """Rejection sampling from ``logpdf`` under a scaled twin-t envelope.

    The envelope is ``m * proposal.pdf(x/scale)/scale``.  Domination is
    checked on ``grid`` (by default ±logspace(−6, 8) and 0) before any
    draws are made; :class:`EnvelopeError` is raised if it fails.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not m > 0:
        raise ValueError("m must be > 0")
    log_m = math.log(m)
    log_scale = math.log(scale)

    def log_env(x):
        return log_m + proposal.logpdf(x / scale) - log_scale

    if grid is None:
        g = np.logspace(-6, 8, 4001)
        grid = np.concatenate([-g[::-1], [0.0], g])
    excess = logpdf(grid) - log_env(grid)
    if np.any(excess > 1e-10):
        worst = grid[int(np.argmax(excess))]
        raise EnvelopeError(f"envelope violated near x={worst:.6g}")

    rng = as_generator(seed)
    out = np.empty(int(n))
    filled = 0
    proposed = 0
    while filled < n:
        need = n - filled
        k = int(need * m * 1.05) + 16
        x = scale * rejection_sample(proposal.nu, k, rng)[0]
        keep = np.log(rng.uniform(size=k)) < logpdf(x) - log_env(x)
        idx = np.flatnonzero(keep)
        if idx.size > need:
            idx = idx[:need]
            proposed += int(idx[-1]) + 1
        else:
            proposed += k
        out[filled:filled + idx.size] = x[idx]
        filled += idx.size
    if return_count:
        return out, proposed
    return out


def _envelope_constant(logpdf, proposal: TwinT, scale: float = 1.0) -> float:
    """Smallest m dominating on a dense grid, with a 2% margin."""
    g = np.logspace(-6, 8, 20001)
    grid = np.concatenate([-g[::-1], [0.0], g])
    ratio = logpdf(grid) - (proposal.logpdf(grid / scale) - math.log(scale))
    return 1.02 * math.exp(float(np.max(ratio)))


@dataclass(frozen=True)
class TwoPieceTwinT:
    """2-piece twin-t: scale ``gamma`` right of 0 and ``1/gamma`` left of it.

    ``P(X > 0) = gamma**2 / (1 + gamma**2)``; ``gamma = 1`` is the symmetric
    distribution.
    """

    nu: float
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError("gamma must be > 0")
        object.__setattr__(self, "base", TwinT(self.nu))
        object.__setattr__(self, "nu", self.base.nu)

    @property
    def prob_positive(self) -> float:
        g2 = self.gamma**2
        return g2 / (1 + g2)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        g = self.gamma
        z = np.where(x > 0, x / g, x * g)
        return _scalar(_LN2 - math.log(g + 1 / g) + self.base.logpdf(z))

    def pdf(self, x):
        return _scalar(np.exp(self.logpdf(x)))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        g2 = self.gamma**2
        left = 2.0 / (1 + g2) * self.base.cdf(x * self.gamma)
        right = 1.0 - 2.0 * g2 / (1 + g2) * self.base.sf(x / self.gamma)
        return _scalar(np.where(x < 0, left, right))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u < 1))):
            raise ValueError("u must lie strictly between 0 and 1")
        g, g2 = self.gamma, self.gamma**2
        split = 1.0 / (1 + g2)
        ul = np.clip(u * (1 + g2) / 2, 1e-300, 0.5)
        ur = np.clip(1 - (1 - u) * (1 + g2) / (2 * g2), 0.5, 1 - 1e-16)
        left = np.asarray(self.base.quantile(ul)) / g
        right = np.asarray(self.base.quantile(ur)) * g
        return _scalar(np.where(u <= split, left, right))

    def moment(self, r: int) -> float:
        """E(X^r) = M_r (γ^{r+1} − (−1/γ)^{r+1}) / (γ + 1/γ), M_r = E|X_base|^r.

        Returns ``nan`` when the moment does not exist (``nu <= r``).
        """
        if r < 0 or int(r) != r:
            raise ValueError("r must be a non-negative integer")
        if self.nu <= r and not self.base.is_normal:
            return math.nan
        g = self.gamma
        return self.base.abs_moment(r) * (g ** (r + 1) - (-1 / g) ** (r + 1)) / (g + 1 / g)

    def mean(self) -> float:
        return self.moment(1)

    def sample(self, n: int, seed=None) -> np.ndarray:
        """|t(ν)| proposal, sign + with prob γ²/(1+γ²), twin-t acceptance, rescale."""
        if n < 0:
            raise ValueError("n must be >= 0")
        pos = self.prob_positive

        def sign(rng, m):
            return np.where(rng.uniform(size=m) < pos, 1.0, -1.0)

        x, _ = rejection_sample(self.nu, int(n), as_generator(seed), sign=sign)
        return np.where(x > 0, self.gamma * x, x / self.gamma)


@dataclass(frozen=True)
class JonesTwinT:
    """Twin-t skewed by unequal powers of p(x) and 1 − p(x).

    f(x) = c 2^{(ν+1)/4} p(x)^{(a+1/2)/4} (1 − p(x))^{(b+1/2)/4},  ν = a + b.

    With u = p(x) the kernel becomes a sum of four beta densities, which
    gives c and the cdf in closed form.  ``a > b`` gives the heavier right
    tail (it decays like x^{-(2b+1)}).
    """

    a: float
    b: float
    log_norm: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be > 0")
        object.__setattr__(self, "base", TwinT(self.a + self.b))
        object.__setattr__(self, "log_norm", self._compute_log_norm())

    @property
    def nu(self) -> float:
        return self.a + self.b

    @classmethod
    def from_skew(cls, nu: float, frac: float) -> "JonesTwinT":
        """Build from ν and a/ν in (0, 1)."""
        return cls(nu * frac, nu * (1 - frac))

    def _log_kernel(self, x):
        lp, lr = log_skew_weights(x, self.nu)
        return 0.25 * (self.nu + 1) * _LN2 + 0.25 * (self.a + 0.5) * lp + 0.25 * (self.b + 0.5) * lr

    def _compute_log_norm(self) -> float:
        # ∫ kernel dx = √ν 2^{ν/4 − 7/2} Σ c B(a/4 + s, b/4 + r)
        _, _, log_total = _cube_beta_terms(self.a / 4, self.b / 4)
        return -(0.5 * math.log(self.nu) + (self.nu / 4 - 3.5) * _LN2 + log_total)

    def logpdf(self, x):
        return _scalar(self.log_norm + self._log_kernel(x))

    def pdf(self, x):
        return _scalar(np.exp(self.logpdf(x)))

    def cdf(self, x):
        return _scalar(_cube_beta_cdf(x, self.nu, self.a / 4, self.b / 4)[0])

    def sf(self, x):
        return _scalar(_cube_beta_cdf(x, self.nu, self.a / 4, self.b / 4)[1])

    def quantile(self, u):
        return _quantile_by_cdf(self.cdf, u, self.sf)

    def moment(self, r: int) -> float:
        if min(self.a, self.b) * 2 <= r:
            return math.nan
        return numeric_moment(self.logpdf, r)

    def envelope(self):
        """Proposal and constant used by :meth:`sample`."""
        proposal = TwinT(2 * min(self.a, self.b))
        return proposal, _envelope_constant(self.logpdf, proposal)

    def sample(self, n: int, seed=None) -> np.ndarray:
        proposal, m = self.envelope()
        return skew_generic_sample(self.logpdf, proposal, m, n, seed)


@dataclass(frozen=True)
class AzzaliniTwinT:
    """Twin-t with density 2 G(x) f(x), G(x) = (1 − φ)/2 + φ p(x).

    ``phi`` is normally in (−1, 1); the boundary values ±1 are accepted for
    studying the limiting tail behaviour.
    """

    nu: float
    phi: float

    def __post_init__(self):
        if not -1 <= self.phi <= 1:
            raise ValueError("phi must lie in [-1, 1]")
        object.__setattr__(self, "base", TwinT(self.nu))
        object.__setattr__(self, "nu", self.base.nu)

    def log_skew_factor(self, x):
        """ln 2G(x; φ); G = p(1+φ)/2 + (1−p)(1−φ)/2 avoids cancellation."""
        lp, lr = log_skew_weights(x, self.nu)
        with np.errstate(divide="ignore"):
            return np.logaddexp(lp + np.log1p(self.phi), lr + np.log1p(-self.phi))

    def logpdf(self, x):
        return _scalar(self.log_skew_factor(x) + self.base.logpdf(x))

    def pdf(self, x):
        return _scalar(np.exp(self.logpdf(x)))

    def _cdf_sf(self, x):
        # 2G = (1 + φ) p + (1 − φ)(1 − p); under u = p(X₀) each part of the
        # density is a beta sum, with shapes (ν/8 + 1, ν/8) and (ν/8, ν/8 + 1)
        x = np.asarray(x, dtype=float)
        if self.base.is_normal:
            return self.base.cdf(x), self.base.cdf(-x)
        a = self.nu / 8
        hi_cdf, hi_sf = _cube_beta_cdf(x, self.nu, a + 1, a)
        lo_cdf, lo_sf = _cube_beta_cdf(x, self.nu, a, a + 1)
        w_hi, w_lo = 0.5 * (1 + self.phi), 0.5 * (1 - self.phi)
        return w_hi * hi_cdf + w_lo * lo_cdf, w_hi * hi_sf + w_lo * lo_sf

    def cdf(self, x):
        return _scalar(self._cdf_sf(x)[0])

    def sf(self, x):
        return _scalar(self._cdf_sf(x)[1])

    def quantile(self, u):
        return _quantile_by_cdf(self.cdf, u, self.sf)

    def moment(self, r: int) -> float:
        """Even moments equal the symmetric ones; odd ones are by quadrature."""
        if self.nu <= r and not self.base.is_normal:
            return math.nan
        if r % 2 == 0:
            return self.base.even_moment(r // 2)
        return numeric_moment(self.logpdf, r)

    def sample(self, n: int, seed=None, return_count: bool = False):
        # 2G <= 1 + |φ|
        return skew_generic_sample(
            self.logpdf, self.base, 1 + abs(self.phi), n, seed, return_count=return_count
        )
