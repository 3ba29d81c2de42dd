import math

import numpy as np
import pytest
from scipy import integrate, stats

from oracles import polar_integral, quad_cdf, quad_line
from twint.core import TwinT
from twint.extended import (
    GeneralizedMultivariateTwinT,
    GeneralizedTwinT,
    MultivariateTwinT,
    SingularCovarianceError,
    gen_mv_log_pdf,
    mv_mom_init,
    mv_second_moment_coef,
    sample_log_s,
)

V2 = np.array([[2.0, 0.5], [0.5, 1.0]])


# --- multivariate -----------------------------------------------------------

def test_mv_p1_reduces_to_univariate():
    rng = np.random.default_rng(1)
    for nu in [0.7, 4.0, 19.0]:
        mv, uv = MultivariateTwinT(nu, [0.0], [[1.0]]), TwinT(nu)
        for x in rng.normal(0, 5, 20):
            assert mv.logpdf([x]) == pytest.approx(uv.logpdf(x), rel=1e-12, abs=1e-12)


def test_mv_p2_normalised():
    d = MultivariateTwinT(4.0, [0.3, -1.0], V2)
    assert polar_integral(d.pdf, d.mu, V2) == pytest.approx(1.0, abs=1e-6)
    iso = MultivariateTwinT(4.0, [0.0, 0.0], np.eye(2))
    assert polar_integral(iso.pdf, iso.mu, np.eye(2)) == pytest.approx(1.0, abs=1e-6)


def test_mv_constant_on_ellipsoids():
    d = MultivariateTwinT(3.0, [1.0, 2.0], V2)
    L = np.linalg.cholesky(V2)
    u1, u2 = np.array([0.6, 0.8]), np.array([-1.0, 0.0])
    x1, x2 = d.mu + 2.5 * L @ u1, d.mu + 2.5 * L @ u2
    assert d.mahalanobis2(x1) == pytest.approx(6.25)
    assert d.logpdf(x1) == pytest.approx(d.logpdf(x2), rel=1e-14)


def test_mv_vectorised_and_finite_far_out():
    d = MultivariateTwinT(2.0, [0.0, 0.0], np.eye(2))
    pts = np.array([[0.0, 0.0], [1e50, 0.0], [3.0, -4.0]])
    out = d.logpdf(pts)
    assert out.shape == (3,) and np.all(np.isfinite(out))
    assert np.isfinite(d.logpdf([1e100, 1e100]))


def test_mv_validation():
    with pytest.raises(ValueError, match="positive definite"):
        MultivariateTwinT(4.0, [0, 0], [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ValueError, match="symmetric"):
        MultivariateTwinT(4.0, [0, 0], [[1.0, 0.2], [0.0, 1.0]])
    with pytest.raises(ValueError, match="length"):
        MultivariateTwinT(4.0, [0, 0, 0], np.eye(2))
    with pytest.raises(ValueError):
        MultivariateTwinT(4.0, [0, 0], np.eye(2)).logpdf([1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="nu must be > 0"):
        MultivariateTwinT(-1.0, [0.0], [[1.0]])


def test_second_moment_coefficients():
    bivariate = 4**2 * (4 + 4) / ((4 + 6) * (4 + 2) * (4 - 2))
    assert bivariate == pytest.approx(128 / 120)
    assert mv_second_moment_coef(4.0, 2) == pytest.approx(bivariate, rel=1e-12)
    for nu in [5, 9, 30]:
        nu = float(nu)
        assert mv_second_moment_coef(nu, 2) == pytest.approx(
            nu**2 * (nu + 4) / ((nu + 6) * (nu + 2) * (nu - 2)), rel=1e-12
        )
        assert mv_second_moment_coef(nu, 1) == pytest.approx(TwinT(nu).variance(), rel=1e-12)
    assert mv_second_moment_coef(2.0, 3) is None
    assert MultivariateTwinT(1.5, [0.0], [[1.0]]).second_moment() is None


def test_mv_sampler_mean_and_covariance():
    d = MultivariateTwinT(8.0, [1.0, -2.0], V2)
    x = d.sample(1_000_000, seed=17)
    assert x.shape == (1_000_000, 2)
    se_mean = x.std(axis=0) / math.sqrt(x.shape[0])
    assert np.all(np.abs(x.mean(axis=0) - d.mu) < 3 * se_mean)
    y = x - d.mu
    target = d.second_moment()
    for i in range(2):
        for j in range(2):
            prod = y[:, i] * y[:, j]
            se = prod.std() / math.sqrt(prod.size)
            assert abs(prod.mean() - target[i, j]) < 3 * se


def test_mv_sampler_p1_ks():
    d = MultivariateTwinT(3.0, [0.0], [[1.0]])
    x = d.sample(200_000, seed=2)[:, 0]
    assert stats.kstest(x, TwinT(3.0).cdf).pvalue > 0.01


def test_mv_sampler_affine_consistency():
    d = MultivariateTwinT(5.0, [3.0, -1.0], V2)
    std = MultivariateTwinT(5.0, [0.0, 0.0], np.eye(2))
    qa = d.mahalanobis2(d.sample(50_000, seed=6))
    qb = std.mahalanobis2(std.sample(50_000, seed=7))
    assert stats.ks_2samp(qa, qb).pvalue > 0.01


def test_mv_sampler_radius_against_quadrature_cdf():
    # radial law of Q for p = 3, checked against 1-d quadrature of its density
    nu, p = 2.5, 3
    d = MultivariateTwinT(nu, np.zeros(p), np.eye(p))
    q = d.mahalanobis2(d.sample(100_000, seed=8))
    log_c = d.log_norm_const + math.log(math.pi ** (p / 2) / math.gamma(p / 2))
    dens = lambda t: math.exp(log_c + (p / 2 - 1) * math.log(t) - (nu + p) / 2 * math.asinh(t / nu)) if t > 0 else 0.0
    total = quad_line(dens, 0, math.inf)
    assert total == pytest.approx(1.0, abs=1e-8)
    cdf = lambda t: quad_line(dens, 0, t) if t > 0 else 0.0
    grid = np.quantile(q, [0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
    emp = [np.mean(q <= g) for g in grid]
    for g, e in zip(grid, emp):
        assert cdf(g) == pytest.approx(e, abs=0.006)


def test_mv_sampler_deterministic():
    d = MultivariateTwinT(4.0, [0.0, 0.0], V2)
    assert d.sample(300, seed=5).tobytes() == d.sample(300, seed=5).tobytes()


def test_mom_init_recovers_truth():
    d = MultivariateTwinT(8.0, [1.0, 2.0], V2)
    mu, V = mv_mom_init(d.sample(100_000, seed=30), nu_fixed=8.0)
    assert np.allclose(mu, d.mu, atol=0.03)
    assert np.all(np.abs(V - V2) <= 0.05 * np.abs(V2))


def test_mom_init_p1_and_errors():
    x = TwinT(6.0).sample(5000, seed=1)
    mu, V = mv_mom_init(x, 6.0)
    assert V[0, 0] == pytest.approx(np.var(x, ddof=1) / TwinT(6.0).variance(), rel=1e-12)
    data = np.column_stack([x, np.full_like(x, 3.0)])
    with pytest.raises(SingularCovarianceError):
        mv_mom_init(data, 6.0)
    with pytest.raises(ValueError):
        mv_mom_init(x, 2.0)


# --- generalized ------------------------------------------------------------

@pytest.mark.parametrize("beta, gam", [(1, 3), (2, 2), (4, 1.5), (0.7, 5)])
def test_gen_normalised(beta, gam):
    assert quad_line(GeneralizedTwinT(beta, gam).pdf) == pytest.approx(1.0, abs=1e-8)


def test_gen_beta2_is_rescaled_twin_t():
    # the twin-t variate is √2 times the generalized one
    for nu in [1.0, 4.0, 9.0]:
        g, t = GeneralizedTwinT(2.0, nu / 2), TwinT(nu)
        for x in [-7.0, -0.5, 0.0, 0.8, 30.0]:
            assert g.pdf(x) == pytest.approx(math.sqrt(2) * t.pdf(math.sqrt(2) * x), rel=1e-12)
            assert g.cdf(x) == pytest.approx(t.cdf(math.sqrt(2) * x), abs=1e-10)


def test_gen_even():
    g = GeneralizedTwinT(1.3, 2.0)
    assert g.pdf(-2.2) == g.pdf(2.2)


def test_gen_cdf_against_quadrature():
    g = GeneralizedTwinT(1.5, 2.5)
    assert g.cdf(0.0) == 0.5
    for x in np.linspace(-25, 25, 50):
        assert g.cdf(x) == pytest.approx(quad_cdf(g.pdf, x), abs=1e-8)


def test_gen_quantile_round_trip():
    g = GeneralizedTwinT(1.5, 2.5)
    for u in [1e-10, 0.2, 0.5, 0.77, 0.999]:
        assert g.cdf(g.quantile(u)) == pytest.approx(u, rel=1e-9)


@pytest.mark.parametrize("beta, gam, r", [(2, 2, 2), (1, 3, 1), (1.5, 2.5, 0.5), (0.8, 6, 3)])
def test_gen_abs_moment_against_quadrature(beta, gam, r):
    g = GeneralizedTwinT(beta, gam)
    ref = quad_line(lambda x: abs(x) ** r * g.pdf(x))
    assert g.abs_moment(r) == pytest.approx(ref, rel=1e-8)


def test_gen_abs_moment_limits():
    g = GeneralizedTwinT(1.0, 3.0)
    assert g.abs_moment(1e-12) == pytest.approx(1.0, abs=1e-10)
    assert g.abs_moment(3.0) == math.inf


@pytest.mark.parametrize("beta, gam", [(1, 3), (2, 2)])
def test_gen_tail_exponent(beta, gam):
    g = GeneralizedTwinT(beta, gam)
    x = 1e4
    slope = (g.logpdf(1.1 * x) - g.logpdf(x / 1.1)) / (2 * math.log(1.1))
    assert slope == pytest.approx(-beta * gam - 1, abs=0.2)


def test_gen_sampler_ks():
    g = GeneralizedTwinT(1.2, 2.0)
    x = g.sample(100_000, seed=4)
    assert stats.kstest(x, g.cdf).pvalue > 0.01


def test_gen_validation():
    with pytest.raises(ValueError):
        GeneralizedTwinT(0.0, 1.0)
    with pytest.raises(ValueError):
        GeneralizedTwinT(1.0, -2.0)


# --- generalized multivariate ----------------------------------------------

def test_gen_mv_p1_reduces():
    g = GeneralizedTwinT(1.4, 2.2)
    for x in np.linspace(-9, 9, 20):
        assert gen_mv_log_pdf(1.4, 2.2, [0.0], [[1.0]], [x]) == pytest.approx(g.logpdf(x), rel=1e-12, abs=1e-12)


def test_gen_mv_beta2_relates_to_mv():
    nu = 6.0
    mu = np.array([0.5, -0.5])
    mv = MultivariateTwinT(nu, mu, V2 / 2)
    for x in [[0.0, 0.0], [1.0, 3.0], [-4.0, 2.5]]:
        assert gen_mv_log_pdf(2.0, nu / 2, mu, V2, x) == pytest.approx(mv.logpdf(x), rel=1e-12)


def test_gen_mv_p2_normalised():
    d = GeneralizedMultivariateTwinT(2.0, 3.0, [0.0, 0.0], V2)
    assert polar_integral(d.pdf, d.mu, V2) == pytest.approx(1.0, abs=1e-6)
    d1 = GeneralizedMultivariateTwinT(1.0, 4.0, [0.0, 0.0], np.eye(2))
    assert polar_integral(d1.pdf, d1.mu, np.eye(2)) == pytest.approx(1.0, abs=1e-6)


def test_gen_mv_finite_far_out():
    assert np.isfinite(gen_mv_log_pdf(1.0, 2.0, [0.0, 0.0], np.eye(2), [1e100, 0.0]))


# --- radial mixture sampler ------------------------------------------------

def test_radial_mixture_against_density():
    # q = (C+S)^{-2} has density ∝ (1+q) q^{α−1} (1−q)^{δ−1}
    alpha, delta = 0.6, 1.5
    rng = np.random.default_rng(0)
    log_s = sample_log_s(alpha, delta, 200_000, rng)
    s = np.exp(log_s)
    q = (np.hypot(1, s) - s) ** 2
    dens = lambda v: (1 + v) * v ** (alpha - 1) * (1 - v) ** (delta - 1)
    total = integrate.quad(dens, 0, 1)[0]
    cdf = lambda v: integrate.quad(dens, 0, v)[0] / total
    assert stats.kstest(q, np.vectorize(cdf)).pvalue > 0.01
