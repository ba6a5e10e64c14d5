import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from gcsel.exceptions import DomainError
from gcsel.specfun import (
    beta_cdf,
    beta_quantile,
    beta_sf,
    chisq_cdf,
    chisq_sf,
    f_cdf,
    f_quantile,
    f_sf,
    gamma_p,
    gamma_q,
    lbeta,
    log_beta_cdf,
)


def mp_beta_cdf(x, a, b):
    """Regularized incomplete beta at 40 digits, series taken on the short side."""
    # x**a / (a B(a, b)) bounds the tails; beyond double range they are 0 or 1
    if a * math.log(x) < -800:
        return mp.mpf(0)
    if b * math.log1p(-x) < -800:
        return mp.mpf(1)
    with mp.workdps(40):
        x = mp.mpf(float(x))
        if x <= mp.mpf(a) / (a + b):
            return mp.betainc(a, b, 0, x, regularized=True)
        return 1 - mp.betainc(b, a, 0, 1 - x, regularized=True)


class TestBetaCdf:
    def test_boundaries(self):
        for a, b in [(0.5, 0.5), (2, 3), (1e4, 0.5)]:
            assert beta_cdf(0.0, a, b) == 0.0
            assert beta_cdf(1.0, a, b) == 1.0

    def test_uniform(self):
        assert beta_cdf(0.5, 1, 1) == pytest.approx(0.5, abs=1e-15)

    def test_quadrature_oracle(self):
        ref, _ = integrate.quad(lambda t: 12 * t * (1 - t) ** 2, 0, 0.3, epsabs=1e-15)
        assert abs(beta_cdf(0.3, 2, 3) - ref) <= 1e-13

    @pytest.mark.parametrize(
        "a,b",
        [(0.5, 0.5), (2.0, 3.0), (0.5, 499.5), (499.5, 0.5), (50.0, 0.5), (1e5, 0.5), (3.0, 1e4), (0.1, 7.0)],
    )
    def test_against_reference(self, a, b):
        m = a / (a + b)
        x = np.concatenate([np.linspace(0.02, 0.98, 25), m * np.linspace(0.1, 1.0, 10), 1 - (1 - m) * np.linspace(0.1, 3.0, 15)])
        x = x[(x > 0) & (x < 1)]
        ref = np.array([mp_beta_cdf(t, a, b) for t in x])
        assert np.max(np.abs(beta_cdf(x, a, b) - ref.astype(float))) <= 1e-13
        assert np.max(np.abs(beta_sf(x, a, b) - (1 - ref).astype(float))) <= 1e-13

    def test_matches_scipy(self):
        x = np.linspace(0.01, 0.99, 99)
        assert np.allclose(beta_cdf(x, 2.5, 7.0), stats.beta.cdf(x, 2.5, 7.0), rtol=0, atol=1e-14)

    def test_monotone_and_bounded(self, rng):
        a, b = 17.5, 0.5
        x = np.sort(rng.random(500))
        v = beta_cdf(x, a, b)
        assert np.all(np.diff(v) >= 0)
        assert np.all((v >= 0) & (v <= 1))

    def test_log_cdf_deep_tail(self):
        # far below the smallest double
        lc = log_beta_cdf(1e-5, 200.0, 0.5)
        with mp.workdps(40):
            ref = float(mp.log(mp.betainc(200.0, 0.5, 0, mp.mpf("1e-5"), regularized=True)))
        assert lc < -700
        assert lc == pytest.approx(ref, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            beta_cdf(1.5, 1, 1)
        with pytest.raises(DomainError):
            beta_cdf(0.5, 0, 1)
        with pytest.raises(DomainError):
            beta_cdf(float("nan"), 1, 1)

    def test_scalar_in_scalar_out(self):
        assert isinstance(beta_cdf(0.2, 2, 2), float)
        assert np.shape(beta_cdf(np.array([0.2, 0.4]), 2, 2)) == (2,)

    def test_lbeta(self):
        for a, b in [(0.5, 0.5), (1e5, 0.5), (3, 4)]:
            with mp.workdps(40):
                ref = float(mp.log(mp.beta(a, b)))
            assert lbeta(a, b) == pytest.approx(ref, rel=1e-13, abs=1e-13)

    def test_scalar_matches_vector(self, rng):
        a, b = rng.uniform(0.1, 3000, (2, 300))
        x = rng.random(300)
        one_by_one = [beta_cdf(float(u), float(p), float(r)) for u, p, r in zip(x, a, b)]
        assert np.allclose(one_by_one, beta_cdf(x, a, b), rtol=1e-14, atol=1e-15)


class TestBetaQuantile:
    def test_uniform_median(self):
        assert beta_quantile(0.5, 1, 1) == pytest.approx(0.5, abs=1e-15)

    def test_boundaries(self):
        assert beta_quantile(0.0, 2, 3) == 0.0
        assert beta_quantile(1.0, 2, 3) == 1.0

    @pytest.mark.parametrize("a,b", [(0.5, 0.5), (2, 3), (10, 0.5), (0.5, 10), (250, 0.5), (3, 300)])
    def test_round_trip(self, a, b):
        # skip points where the c.d.f. is too flat for x to be recoverable
        for x in np.round(np.arange(0.01, 1.0, 0.01), 2):
            p = beta_cdf(x, a, b)
            if 1e-6 < p < 1 - 1e-6:
                assert beta_quantile(p, a, b) == pytest.approx(x, abs=1e-9)

    def test_bisection_oracle(self):
        target = 0.99
        ref = optimize.bisect(lambda x: stats.beta.cdf(x, 0.5, 499.5) - target, 0, 1, xtol=1e-16)
        assert beta_quantile(target, 0.5, 499.5) == pytest.approx(ref, rel=1e-9)

    def test_cdf_of_quantile(self, rng):
        for p in rng.random(50):
            for a, b in [(64.0, 0.5), (0.5, 24400.5), (24400.5, 0.5)]:
                assert beta_cdf(beta_quantile(p, a, b), a, b) == pytest.approx(p, abs=1e-10)

    def test_extreme_upper_probability(self):
        # 1 - 1/q with q around 1e5
        p = 1 - 1 / 48802
        x = beta_quantile(p, 0.5, 63.5)
        assert beta_cdf(x, 0.5, 63.5) == pytest.approx(p, abs=1e-12)


class TestF:
    def test_zero(self):
        assert f_cdf(0.0, 3, 7) == 0.0

    def test_beta_identity(self, rng):
        for _ in range(200):
            k, l = rng.integers(1, 200, size=2)
            x = rng.exponential(2.0)
            lhs = 1 - f_cdf(x, k, l)
            rhs = beta_cdf(1 / ((k / l) * x + 1), l / 2, k / 2)
            assert abs(lhs - rhs) <= 1e-13

    def test_equal_df_median(self):
        assert f_cdf(1.0, 10, 10) == pytest.approx(0.5, abs=1e-14)

    def test_reference(self):
        x = np.array([0.1, 0.5, 1.0, 2.5, 10.0])
        assert np.allclose(f_sf(x, 3, 17), stats.f.sf(x, 3, 17), rtol=1e-12, atol=0)
        assert f_quantile(0.95, 4, 45) == pytest.approx(stats.f.ppf(0.95, 4, 45), rel=1e-10)

    def test_negative(self):
        with pytest.raises(DomainError):
            f_cdf(-1.0, 1, 1)


class TestChisqGamma:
    def test_zero(self):
        assert chisq_cdf(0.0, 3) == 0.0

    def test_exponential_case(self):
        assert chisq_cdf(2 * math.log(2), 2) == pytest.approx(0.5, abs=1e-15)

    def test_normal_oracle(self):
        x = optimize.bisect(lambda t: 2 * stats.norm.cdf(math.sqrt(t)) - 1 - 0.95, 1, 10, xtol=1e-15)
        assert x == pytest.approx(3.841458820694124, rel=1e-12)
        assert chisq_cdf(x, 1) == pytest.approx(0.95, abs=1e-13)

    def test_reference(self):
        x = np.array([0.01, 0.5, 3.0, 25.0, 80.0])
        for df in (1, 2, 5.5, 40):
            assert np.allclose(chisq_cdf(x, df), stats.chi2.cdf(x, df), rtol=0, atol=1e-13)
            assert np.allclose(chisq_sf(x, df), stats.chi2.sf(x, df), rtol=1e-11, atol=1e-300)

    def test_gamma_pq_complement(self):
        for a, x in [(0.5, 0.3), (3.0, 7.0), (50.0, 49.0)]:
            assert gamma_p(a, x) + gamma_q(a, x) == pytest.approx(1.0, abs=1e-14)


class TestDistributionalLemmas:
    def test_gamma_ratio_is_beta(self):
        gen = np.random.default_rng(1)
        a, b = 2.5, 0.5
        ya = gen.gamma(a, size=100_000)
        yb = gen.gamma(b, size=100_000)
        res = stats.kstest(ya / (ya + yb), lambda t: beta_cdf(np.clip(t, 0, 1), a, b))
        assert res.pvalue > 0.001

    def test_beta_products(self):
        gen = np.random.default_rng(2)
        a, delta, k = 3.0, 0.5, 4
        prod = np.ones(100_000)
        for j in range(1, k + 1):
            prod *= gen.beta(a + (j - 1) * delta, delta, size=prod.size)
        res = stats.kstest(prod, lambda t: beta_cdf(np.clip(t, 0, 1), a, k * delta))
        assert res.pvalue > 0.001


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(
        k=st.integers(1, 2**30 - 1),
        a=st.floats(0.05, 5e4),
        b=st.floats(0.05, 5e4),
    )
    def test_reflection(self, k, a, b):
        # dyadic x keeps 1 - x exact
        x = k / 2**30
        assert beta_cdf(x, a, b) + beta_cdf(1 - x, b, a) == pytest.approx(1.0, abs=1e-12)
        assert beta_cdf(x, a, b) + beta_sf(x, a, b) == pytest.approx(1.0, abs=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(p=st.floats(1e-12, 1 - 1e-9), a=st.floats(0.1, 2000), b=st.floats(0.1, 2000))
    def test_quantile_inverts(self, p, a, b):
        # near 0 or 1 one ulp of x can move the cdf more than any fixed tolerance
        x = beta_quantile(p, a, b)
        lo = beta_cdf(np.nextafter(x, 0.0), a, b)
        hi = beta_cdf(np.nextafter(x, 1.0), a, b)
        slack = 1e-9 * p
        assert lo - slack <= p <= hi + slack

    @settings(max_examples=300, deadline=None)
    @given(x=st.floats(1e-300, 1 - 1e-12), b=st.floats(0.01, 1e5))
    def test_unit_shape_closed_form(self, x, b):
        # I_x(1, b) = 1 - (1 - x)^b, relative accuracy on both tails
        ref = -math.expm1(b * math.log1p(-x))
        assert beta_cdf(x, 1.0, b) == pytest.approx(ref, rel=1e-12)
        assert beta_sf(x, 1.0, b) == pytest.approx(math.exp(b * math.log1p(-x)), rel=1e-11)

    @settings(max_examples=300, deadline=None)
    @given(x=st.floats(1e-12, 1 - 1e-12), a=st.floats(0.01, 1e5))
    def test_unit_second_shape_closed_form(self, x, a):
        # I_x(a, 1) = x^a
        ref = math.exp(a * math.log(x))
        assert beta_cdf(x, a, 1.0) == pytest.approx(ref, rel=1e-11, abs=1e-300)
        assert beta_sf(x, a, 1.0) == pytest.approx(-math.expm1(a * math.log(x)), rel=1e-11)
