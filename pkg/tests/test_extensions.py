import math
import warnings

import numpy as np
import pytest
from scipy import integrate, optimize, stats

from gcsel import Dataset
from gcsel.exceptions import DomainError, SeparationError
from gcsel.extensions import (
    IDENTITY,
    LOGISTIC,
    MAD_FACTOR,
    HuberLoss,
    initial_scale,
    kl_logistic_pvalue,
    kl_stepwise,
    logistic_fit,
    m_fit,
    m_step_pvalue,
    nonlinear_fit,
    nonlinear_step_pvalue,
    robust_stepwise,
    scale_update,
)
from gcsel.selection import stepwise


def chi2_power(stat, pool):
    return 1 - (1 - stats.chi2.sf(stat, 1)) ** pool


class TestHuberLoss:
    @pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 1.345, 2.0, 5.0])
    def test_consistency_factor(self, c):
        loss = HuberLoss(c)
        ref, _ = integrate.quad(lambda z: float(loss.psi(z)) ** 2 * stats.norm.pdf(z), -np.inf, np.inf, epsabs=1e-14)
        assert loss.c_f == pytest.approx(ref, abs=1e-10)

    def test_large_c_is_least_squares(self):
        assert HuberLoss(1e6).c_f == pytest.approx(1.0, abs=1e-12)
        u = np.linspace(-5, 5, 11)
        assert np.allclose(HuberLoss(1e6).rho(u), 0.5 * u * u)

    def test_pieces(self):
        loss = HuberLoss(1.0)
        u = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
        assert np.allclose(loss.rho(u), [2.5, 0.125, 0.0, 0.125, 2.5])
        assert np.allclose(loss.psi(u), [-1, -0.5, 0, 0.5, 1])
        assert np.allclose(loss.psi_prime(u), [0, 1, 1, 1, 0])
        assert np.allclose(loss.weight(u), [1 / 3, 1, 1, 1, 1 / 3])

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            HuberLoss(0.0)


class TestMFit:
    def test_location_matches_scalar_minimizer(self, rng):
        y = np.concatenate([rng.standard_normal(50), [8.0, 9.0, 15.0]])
        d = Dataset(np.zeros((53, 1)) + rng.standard_normal((53, 1)), y)
        loss = HuberLoss(1.0)
        fit = m_fit(d, [0], loss, sigma=1.0)
        ref = optimize.minimize_scalar(lambda m: float(np.mean(loss.rho(y - m))), bracket=(-1, 1), tol=1e-12).x
        assert fit.coefficients[0] == pytest.approx(ref, abs=1e-7)
        assert abs(fit.coefficients[0] - np.median(y)) < abs(y.mean() - np.median(y))

    def test_regression_matches_generic_optimizer(self, rng):
        X = rng.standard_normal((80, 3))
        y = X @ np.array([1.0, -0.5, 0.2]) + rng.standard_t(2, 80)
        d = Dataset(X, y)
        loss = HuberLoss(1.345)
        fit = m_fit(d, [0, 1, 2, 3], loss, sigma=0.8)
        A = np.column_stack([np.ones(80), X])
        ref = optimize.minimize(lambda b: float(np.mean(loss.rho((y - A @ b) / 0.8))), np.zeros(4), method="BFGS", options={"gtol": 1e-12})
        assert np.allclose(fit.coefficients, ref.x, atol=1e-5)
        assert fit.s0 <= ref.fun + 1e-12

    def test_large_c_is_least_squares(self, rng):
        X = rng.standard_normal((40, 2))
        y = X @ np.array([2.0, 1.0]) + rng.standard_normal(40)
        fit = m_fit(Dataset(X, y), [0, 1, 2], HuberLoss(1e6), sigma=1.0)
        ref, *_ = np.linalg.lstsq(np.column_stack([np.ones(40), X]), y, rcond=None)
        assert np.allclose(fit.coefficients, ref, atol=1e-6)

    def test_summary_fields(self, rng):
        y = rng.standard_normal(30)
        d = Dataset(rng.standard_normal((30, 1)), y, intercept=False)
        fit = m_fit(d, [], HuberLoss(1.0), sigma=2.0)
        u = y / 2.0
        assert fit.s0 == pytest.approx(np.mean(HuberLoss(1.0).rho(u)))
        assert fit.s0_d1 == pytest.approx(np.mean(np.clip(u, -1, 1) ** 2))
        assert fit.s0_d2 == np.sum(np.abs(u) <= 1)

    def test_bad_scale(self, rng):
        d = Dataset(rng.standard_normal((10, 1)), rng.standard_normal(10))
        with pytest.raises(DomainError):
            m_fit(d, [0], sigma=0.0)


class TestMStepPvalue:
    def test_least_squares_limit(self, rng):
        # with a huge constant the statistic is n (rss0 - rss1) / rss0
        n = 100
        X = rng.standard_normal((n, 2))
        y = 0.3 * X[:, 0] + rng.standard_normal(n)
        d = Dataset(X, y)
        loss = HuberLoss(1e6)
        f0 = m_fit(d, [0], loss, sigma=1.0)
        f1 = m_fit(d, [0, 1], loss, sigma=1.0)
        rss0 = 2 * n * f0.s0
        rss1 = 2 * n * f1.s0
        ref = chi2_power(n * (rss0 - rss1) / rss0, 5)
        assert m_step_pvalue(f0, f1.s0, 6, 1) == pytest.approx(ref, rel=1e-8)

    def test_monotone(self, rng):
        d = Dataset(rng.standard_normal((50, 1)), rng.standard_normal(50))
        f0 = m_fit(d, [0], sigma=1.0)
        ps = [m_step_pvalue(f0, s, 20, 1) for s in np.linspace(0, f0.s0, 20)]
        assert all(a <= b for a, b in zip(ps, ps[1:]))
        assert ps[-1] == 1.0
        assert m_step_pvalue(f0, f0.s0, 20, 1) == 1.0
        assert m_step_pvalue(f0, 0.9 * f0.s0, 200, 1) >= m_step_pvalue(f0, 0.9 * f0.s0, 20, 1)

    def test_domain(self, rng):
        d = Dataset(rng.standard_normal((50, 1)), rng.standard_normal(50))
        f0 = m_fit(d, [0], sigma=1.0)
        with pytest.raises(DomainError):
            m_step_pvalue(f0, 2 * f0.s0, 20, 1)
        with pytest.raises(DomainError):
            m_step_pvalue(f0, -1.0, 20, 1)
        with pytest.raises(DomainError):
            m_step_pvalue(f0, 0.5 * f0.s0, 1, 1)


class TestScale:
    def test_least_squares_limit(self, rng):
        r = rng.standard_normal(60)
        got = scale_update(r, 1.0, HuberLoss(1e6), m0=2)
        assert got == pytest.approx(math.sqrt(r @ r / 57), rel=1e-10)

    def test_degenerate_warns(self):
        with pytest.warns(RuntimeWarning):
            s = scale_update(np.zeros(10), 2.0)
        assert 0 < s < 1e-9

    def test_domain(self):
        with pytest.raises(DomainError):
            scale_update(np.ones(3), 1.0, m0=2)
        with pytest.raises(DomainError):
            scale_update(np.ones(5), 0.0)

    def test_initial_scale(self, rng):
        assert initial_scale([-1.0, 0.0, 1.0]) == pytest.approx(MAD_FACTOR)
        assert initial_scale(rng.standard_normal(10**5)) == pytest.approx(1.0, abs=0.02)
        with pytest.raises(DomainError):
            initial_scale([3.0, 3.0, 3.0])
        with pytest.raises(DomainError):
            initial_scale([1.0])


class TestRobustStepwise:
    def test_signal_with_outliers(self, rng):
        hits = 0
        for _ in range(20):
            X = rng.standard_normal((100, 15))
            y = X[:, 4] + 0.5 * rng.standard_normal(100)
            y[:5] += 50 * X[:5, 9]
            hits += robust_stepwise(Dataset(X, y)).covariates[:1] == [5]
        assert hits >= 19

    def test_large_c_orders_like_least_squares(self, rng):
        X = rng.standard_normal((120, 10))
        y = X[:, :3] @ np.array([1.0, 0.7, 0.5]) + rng.standard_normal(120)
        d = Dataset(X, y)
        robust = robust_stepwise(d, loss=HuberLoss(1e6))
        assert robust.covariates == stepwise(d).covariates

    def test_max_steps(self, rng):
        X = rng.standard_normal((60, 6))
        y = X.sum(axis=1) + 0.1 * rng.standard_normal(60)
        assert len(robust_stepwise(Dataset(X, y), max_steps=2)) == 2


class TestNonlinear:
    def test_identity_is_least_squares(self, rng):
        X = rng.standard_normal((30, 2))
        y = X[:, 0] + rng.standard_normal(30)
        fit = nonlinear_fit(Dataset(X, y), [0, 1, 2], IDENTITY)
        A = np.column_stack([np.ones(30), X])
        ref, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        assert np.allclose(fit.coefficients, ref)
        assert fit.ss == pytest.approx(float(res[0]))

    def test_logistic_link_matches_scipy(self, rng):
        X = rng.standard_normal((60, 1))
        y = 1 / (1 + np.exp(-(0.5 + 2 * X[:, 0]))) + 0.05 * rng.standard_normal(60)
        fit = nonlinear_fit(Dataset(X, y), [0, 1], LOGISTIC)
        A = np.column_stack([np.ones(60), X])
        ref = optimize.least_squares(lambda b: y - 1 / (1 + np.exp(-A @ b)), np.zeros(2), xtol=1e-14, ftol=1e-14)
        assert np.allclose(fit.coefficients, ref.x, atol=1e-6)

    def test_identity_pvalue(self, rng):
        n = 50
        X = rng.standard_normal((n, 3))
        y = rng.standard_normal(n)
        d = Dataset(X, y)
        f0 = nonlinear_fit(d, [0], IDENTITY)
        f1 = nonlinear_fit(d, [0, 2], IDENTITY)
        ref = chi2_power((f0.ss - f1.ss) / (f0.ss / n), 3)
        assert nonlinear_step_pvalue(d, [0], IDENTITY, f0.ss - f1.ss, 4, 1) == pytest.approx(ref, rel=1e-10)

    def test_negative_drop(self, rng):
        d = Dataset(rng.standard_normal((10, 1)), rng.standard_normal(10))
        with pytest.raises(DomainError):
            nonlinear_step_pvalue(d, [0], IDENTITY, -1.0, 2, 1)


class TestLogistic:
    def test_null_model(self):
        d = Dataset(np.array([[0.3], [1.0], [-2.0], [0.1]]), [0.0, 1.0, 1.0, 0.0])
        fit = logistic_fit(d, [0])
        assert fit.kl == pytest.approx(4 * math.log(2))
        assert np.allclose(fit.p, 0.5)
        assert logistic_fit(d, []).kl == pytest.approx(4 * math.log(2))

    def test_matches_generic_optimizer(self, rng):
        X = rng.standard_normal((100, 2))
        y = (rng.random(100) < 1 / (1 + np.exp(-X[:, 0]))).astype(float)
        fit = logistic_fit(Dataset(X, y), [0, 1, 2])
        A = np.column_stack([np.ones(100), X])
        ref = optimize.minimize(lambda b: float(np.sum(np.logaddexp(0, A @ b) - y * (A @ b))), np.zeros(3), method="BFGS", options={"gtol": 1e-10})
        assert np.allclose(fit.coefficients, ref.x, atol=1e-5)
        assert fit.kl == pytest.approx(ref.fun, rel=1e-9)

    def test_pvalue_formula(self, rng):
        X = rng.standard_normal((80, 3))
        y = (rng.random(80) < 1 / (1 + np.exp(-X[:, 1]))).astype(float)
        d = Dataset(X, y)
        f0 = logistic_fit(d, [0])
        f1 = logistic_fit(d, [0, 2])
        p0 = f0.p
        stat = 2 * np.sum(p0 * (1 - p0)) / np.sum((y - p0) ** 2) * (f0.kl - f1.kl)
        assert kl_logistic_pvalue(d, [0], 2, 4) == pytest.approx(chi2_power(stat, 3), rel=1e-8)

    def test_separation(self):
        x = np.arange(10.0) - 4.5
        d = Dataset(x[:, None], (x > 0).astype(float))
        with pytest.raises(SeparationError):
            logistic_fit(d, [0, 1], candidate=1)

    def test_non_binary(self, rng):
        d = Dataset(rng.standard_normal((10, 2)), rng.standard_normal(10))
        with pytest.raises(DomainError):
            kl_stepwise(d)

    def test_stepwise_skips_separating_column(self, rng):
        n = 100
        X = rng.standard_normal((n, 5))
        y = (rng.random(n) < 1 / (1 + np.exp(-1.5 * X[:, 0]))).astype(float)
        X[:, 3] = np.where(y == 1, 1.0, -1.0) * (1 + rng.random(n))
        with pytest.warns(RuntimeWarning, match="separation"):
            trace = kl_stepwise(Dataset(X, y))
        assert 4 in trace.skipped
        assert 4 not in trace.covariates
        assert trace.covariates[:1] == [1]

    def test_strong_signal(self):
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            X = rng.standard_normal((200, 20))
            y = (rng.random(200) < 1 / (1 + np.exp(-2 * X[:, 6]))).astype(float)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                hits += kl_stepwise(Dataset(X, y)).covariates == [7]
        assert hits >= 95
