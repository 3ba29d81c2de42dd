import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import quad_cdf, quad_line, quad_tail
from twint.core import TwinT, kernel_terms
from twint.skew import (
    AzzaliniTwinT,
    EnvelopeError,
    JonesTwinT,
    TwoPieceTwinT,
    log_skew_weights,
    skew_generic_sample,
    skew_weight,
)

NUS = [2, 4, 8]


# --- skew weight ------------------------------------------------------------

def test_skew_weight_at_zero():
    assert skew_weight(0.0, 3.0) == 0.5


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(0.05, 100))
def test_skew_weight_antisymmetry(x, nu):
    assert skew_weight(-x, nu) == pytest.approx(1 - skew_weight(x, nu), abs=1e-15)
    assert 0 <= skew_weight(x, nu) <= 1
    assert skew_weight(-abs(x), nu) <= 0.5 <= skew_weight(abs(x), nu)


def test_skew_weight_product_identity():
    # (p(1−p))^{1/4} = 2^{−1/2}/(C+S)
    rng = np.random.default_rng(8)
    for x, nu in zip(rng.normal(0, 4, 50), rng.uniform(0.5, 20, 50)):
        t = kernel_terms(x, nu)
        p = skew_weight(x, nu)
        assert (p * (1 - p)) ** 0.25 == pytest.approx(2**-0.5 / (t.C + t.S), rel=1e-12)


def test_skew_weight_direct_formula():
    for x, nu in [(0.7, 2.0), (-3.0, 5.0), (12.0, 1.0)]:
        t = kernel_terms(x, nu)
        direct = 0.5 + math.sqrt(t.C) * (x / math.sqrt(nu)) / (t.C + t.S)
        assert skew_weight(x, nu) == pytest.approx(direct, rel=1e-14)


def test_log_skew_weights_tail_precision():
    # ln(1 − p) must keep its precision where 1 − p underflows the naive form
    lp, lr = log_skew_weights(1e6, 2.0)
    t = kernel_terms(1e6, 2.0)
    assert lr == pytest.approx(-math.log(4) - 4 * math.log(t.C + t.S) - lp, rel=1e-14)
    assert lp == pytest.approx(0.0, abs=1e-15)


# --- 2-piece ----------------------------------------------------------------

def test_two_piece_reduces_to_symmetric():
    d, base = TwoPieceTwinT(3.0, 1.0), TwinT(3.0)
    for x in [-4.0, -0.2, 0.0, 1.0, 9.0]:
        assert d.pdf(x) == pytest.approx(base.pdf(x), rel=1e-15)
        assert d.cdf(x) == pytest.approx(base.cdf(x), abs=1e-15)


@pytest.mark.parametrize("gamma", [0.5, 0.67, 2.0])
def test_two_piece_normalised_and_cdf(gamma):
    d = TwoPieceTwinT(4.0, gamma)
    assert quad_line(d.pdf) == pytest.approx(1.0, abs=1e-10)
    assert d.cdf(0.0) == pytest.approx(1 / (1 + gamma**2), abs=1e-15)
    assert d.cdf(0.0) == pytest.approx(quad_line(d.pdf, -math.inf, 0.0), abs=1e-10)
    for x in [-5.0, -0.3, 0.4, 6.0]:
        assert d.cdf(x) == pytest.approx(quad_cdf(d.pdf, x), abs=1e-10)
        h = 1e-5
        assert (d.cdf(x + h) - d.cdf(x - h)) / (2 * h) == pytest.approx(d.pdf(x), abs=1e-6)


def test_two_piece_probability_positive():
    assert TwoPieceTwinT(5.0, 2.0).prob_positive == pytest.approx(0.8)


def test_two_piece_continuity_and_second_derivative_jump():
    d = TwoPieceTwinT(4.0, 2.0)
    h = 1e-4
    assert d.pdf(h) == pytest.approx(d.pdf(-h), rel=1e-6)
    f0 = d.pdf(0.0)
    right = (d.pdf(2 * h) - 2 * d.pdf(h) + f0) / h**2
    left = (d.pdf(-2 * h) - 2 * d.pdf(-h) + f0) / h**2
    # one-sided curvatures are f''(0)/γ² and f''(0)γ², distinct for γ ≠ 1
    assert right / left == pytest.approx(1 / 16, rel=1e-2)


def test_two_piece_mirror():
    a, b = TwoPieceTwinT(3.0, 2.0), TwoPieceTwinT(3.0, 0.5)
    for x in [-3.0, -0.1, 0.5, 7.0]:
        assert a.pdf(x) == pytest.approx(b.pdf(-x), rel=1e-14)


def test_two_piece_moments():
    assert TwoPieceTwinT(4.0, 1.0).moment(1) == pytest.approx(0.0, abs=1e-15)
    d = TwoPieceTwinT(4.0, 0.67)
    assert d.mean() == pytest.approx((0.67 - 1 / 0.67) * TwinT(4).abs_mean(), rel=1e-14)
    assert d.mean() == pytest.approx(quad_line(lambda x: x * d.pdf(x)), rel=1e-9)
    d2 = TwoPieceTwinT(6.0, 2.0)
    assert d2.moment(2) == pytest.approx(quad_line(lambda x: x * x * d2.pdf(x)), rel=1e-9)
    assert math.isnan(TwoPieceTwinT(2.0, 2.0).moment(2))


def test_two_piece_quantile_round_trip():
    d = TwoPieceTwinT(3.0, 0.6)
    for u in [1e-6, 0.1, 1 / (1 + 0.36), 0.5, 0.95, 1 - 1e-7]:
        assert d.cdf(d.quantile(u)) == pytest.approx(u, rel=1e-9)


def test_two_piece_sampler_sign_frequency():
    x = TwoPieceTwinT(4.0, 2.0).sample(1_000_000, seed=12)
    assert np.mean(x > 0) == pytest.approx(0.8, abs=0.002)


def test_two_piece_sampler_symmetric_ks():
    d = TwoPieceTwinT(5.0, 1.0)
    x = d.sample(100_000, seed=5)
    assert stats.kstest(x, TwinT(5.0).cdf).pvalue > 0.01


def test_two_piece_sampler_mean():
    d = TwoPieceTwinT(4.0, 0.67)
    x = d.sample(400_000, seed=9)
    se = math.sqrt((d.moment(2) - d.mean() ** 2) / x.size)
    assert abs(x.mean() - d.mean()) < 3 * se
    assert stats.kstest(x, d.cdf).pvalue > 0.01


# --- Jones ------------------------------------------------------------------

@pytest.mark.parametrize("nu", NUS)
def test_jones_symmetric_point(nu):
    d, base = JonesTwinT(nu / 2, nu / 2), TwinT(nu)
    assert d.log_norm == pytest.approx(base.log_norm_const, abs=1e-10)
    for x in [-20.0, -1.0, 0.0, 0.3, 5.0]:
        assert d.pdf(x) == pytest.approx(base.pdf(x), rel=1e-10)


@pytest.mark.parametrize("a, b", [(1, 3), (2, 2), (3, 1), (0.5, 7.5)])
def test_jones_normalised(a, b):
    assert quad_line(JonesTwinT(a, b).pdf) == pytest.approx(1.0, abs=1e-9)


def test_jones_mirror_and_asymmetry():
    d, m = JonesTwinT(1.0, 3.0), JonesTwinT(3.0, 1.0)
    assert d.log_norm == pytest.approx(m.log_norm, abs=1e-12)
    for x in [-6.0, -1.0, 0.5, 4.0]:
        assert d.pdf(x) == pytest.approx(m.pdf(-x), rel=1e-12)
    assert d.pdf(1.0) != pytest.approx(d.pdf(-1.0), rel=1e-3)
    # a > b: right tail heavier, and increasingly so
    r50, r100 = m.pdf(50.0) / m.pdf(-50.0), m.pdf(100.0) / m.pdf(-100.0)
    assert r100 > r50 > 1


def test_jones_cdf_against_quadrature():
    d = JonesTwinT(1.0, 3.0)
    for x in [-40.0, -3.0, -0.5, 0.0, 0.7, 2.0, 15.0]:
        assert d.cdf(x) == pytest.approx(quad_cdf(d.pdf, x), abs=1e-10)
    assert d.cdf(d.quantile(0.3)) == pytest.approx(0.3, abs=1e-12)


@pytest.mark.parametrize("a, b", [(0.1, 0.3), (1, 3), (10, 0.3), (60, 140)])
def test_jones_constant_against_quadrature(a, b):
    d = JonesTwinT(a, b)
    assert quad_line(lambda x: math.exp(d._log_kernel(x))) == pytest.approx(
        math.exp(-d.log_norm), rel=1e-10
    )


@pytest.mark.parametrize("a, b", [(1, 3), (10, 0.3), (0.2, 0.2)])
@pytest.mark.parametrize("x", [1e3, 1e6])
def test_jones_tails_relative_precision(a, b, x):
    d = JonesTwinT(a, b)
    assert d.sf(x) == pytest.approx(quad_tail(d.pdf, x), rel=1e-12)
    assert d.cdf(-x) == pytest.approx(quad_tail(lambda t: d.pdf(-t), x), rel=1e-12)


@pytest.mark.parametrize("u", [1e-12, 0.01, 0.5, 0.93, 1 - 1e-9])
def test_jones_quantile_round_trip_both_tails(u):
    d = JonesTwinT(3.0, 1.5)
    q = d.quantile(u)
    if u > 0.5:
        assert d.sf(q) == pytest.approx(1 - u, rel=1e-10)
    else:
        assert d.cdf(q) == pytest.approx(u, rel=1e-10)


def test_jones_moments():
    d = JonesTwinT(3.0, 2.0)
    assert d.moment(1) == pytest.approx(quad_line(lambda x: x * d.pdf(x)), rel=1e-8)
    assert math.isnan(JonesTwinT(3.0, 1.0).moment(2))


def test_jones_from_skew():
    d = JonesTwinT.from_skew(4.0, 0.25)
    assert (d.a, d.b) == (1.0, 3.0)


def test_jones_sampler_ks():
    d = JonesTwinT(1.0, 3.0)
    x = d.sample(100_000, seed=21)
    assert stats.kstest(x, d.cdf).pvalue > 0.01


def test_jones_validation():
    with pytest.raises(ValueError):
        JonesTwinT(0.0, 2.0)


# --- Azzalini ---------------------------------------------------------------

def test_azzalini_phi_zero_is_symmetric():
    d, base = AzzaliniTwinT(3.0, 0.0), TwinT(3.0)
    for x in [-5.0, 0.0, 2.0]:
        assert d.pdf(x) == pytest.approx(base.pdf(x), rel=1e-15)


def test_azzalini_density_definition():
    d = AzzaliniTwinT(5.0, 0.4)
    for x in [-3.0, 0.2, 8.0]:
        G = 0.3 + 0.4 * skew_weight(x, 5.0)
        assert d.pdf(x) == pytest.approx(2 * G * TwinT(5.0).pdf(x), rel=1e-14)


@pytest.mark.parametrize("phi", [-0.878, 0.5, 0.99])
def test_azzalini_normalised(phi):
    assert quad_line(AzzaliniTwinT(4.0, phi).pdf) == pytest.approx(1.0, abs=1e-10)


def test_azzalini_even_moments_unchanged():
    d = AzzaliniTwinT(6.0, 0.7)
    assert d.moment(2) == pytest.approx(TwinT(6.0).variance(), rel=1e-14)
    assert quad_line(lambda x: x * x * d.pdf(x)) == pytest.approx(TwinT(6.0).variance(), rel=1e-9)
    odd = d.moment(1)
    assert odd == pytest.approx(quad_line(lambda x: x * d.pdf(x)), rel=1e-8) and odd > 0


def test_azzalini_mirror():
    a, b = AzzaliniTwinT(3.0, 0.6), AzzaliniTwinT(3.0, -0.6)
    for x in [-4.0, 0.3, 9.0]:
        assert a.pdf(x) == pytest.approx(b.pdf(-x), rel=1e-13)


def test_azzalini_cdf_against_quadrature():
    d = AzzaliniTwinT(2.5, -0.8)
    for x in [-30.0, -1.0, 0.0, 1.2, 40.0]:
        assert d.cdf(x) == pytest.approx(quad_cdf(d.pdf, x), abs=1e-10)


@pytest.mark.parametrize("phi", [-1.0, -0.6, 1.0])
@pytest.mark.parametrize("x", [1e3, 1e6])
def test_azzalini_tails_relative_precision(phi, x):
    d = AzzaliniTwinT(0.5, phi)
    assert d.sf(x) == pytest.approx(quad_tail(d.pdf, x), rel=1e-12)
    assert d.cdf(-x) == pytest.approx(quad_tail(lambda t: d.pdf(-t), x), rel=1e-12)
    assert d.cdf(x) + d.sf(x) == pytest.approx(1.0, abs=1e-15)


def _slope(fn, x):
    return (math.log(fn(1.1 * x)) - math.log(fn(x / 1.1))) / (2 * math.log(1.1))


@pytest.mark.parametrize("x", [1e3, 1e4])
def test_azzalini_boundary_tail_exponents(x):
    nu = 3.0
    d = AzzaliniTwinT(nu, 1.0)
    # density slopes; tail probabilities are one power lighter
    assert _slope(d.pdf, x) == pytest.approx(-(nu + 1), abs=0.3)
    assert _slope(lambda v: d.pdf(-v), x) == pytest.approx(-(nu + 9), abs=0.3)
    right = lambda v: quad_tail(d.pdf, v)
    left = lambda v: quad_tail(lambda u: d.pdf(-u), v)
    assert _slope(right, x) == pytest.approx(-nu, abs=0.3)
    assert _slope(left, x) == pytest.approx(-nu - 8, abs=0.3)
    m = AzzaliniTwinT(nu, -1.0)
    assert _slope(m.pdf, x) == pytest.approx(-(nu + 9), abs=0.3)


def test_azzalini_sampler_acceptance_at_boundary():
    d = AzzaliniTwinT(4.0, 1.0)
    x, proposals = d.sample(200_000, seed=31, return_count=True)
    assert x.size / proposals == pytest.approx(0.5, abs=0.01)
    assert stats.kstest(x[:50_000], d.cdf).pvalue > 0.01


def test_azzalini_validation():
    with pytest.raises(ValueError):
        AzzaliniTwinT(3.0, 1.5)


# --- parameter grid ---------------------------------------------------------

@pytest.mark.parametrize("nu", NUS)
def test_skew_grid_normalisation(nu):
    dists = [TwoPieceTwinT(nu, g) for g in (0.5, 1.0, 2.0)]
    dists += [JonesTwinT(f * nu, (1 - f) * nu) for f in (0.25, 0.5, 0.75)]
    dists += [AzzaliniTwinT(nu, phi) for phi in (-0.9, 0.0, 0.9)]
    for d in dists:
        assert quad_line(d.pdf) == pytest.approx(1.0, abs=1e-8)


# --- generic sampler --------------------------------------------------------

def test_generic_sampler_exact_envelope():
    base = TwinT(3.0)
    x, proposals = skew_generic_sample(base.logpdf, base, 1.0, 10_000, seed=4, return_count=True)
    assert proposals == x.size


def test_generic_sampler_rejects_bad_envelope():
    heavy = TwinT(1.0)
    with pytest.raises(EnvelopeError):
        skew_generic_sample(heavy.logpdf, TwinT(5.0), 3.0, 10, seed=1)


def test_generic_sampler_deterministic():
    d = JonesTwinT(1.5, 2.5)
    assert d.sample(500, seed=3).tobytes() == d.sample(500, seed=3).tobytes()
