import numpy as np
import pytest

from gcsel import Dataset
from gcsel.exceptions import CapExceededError, DomainError
from gcsel.selection import all_subsets, repeated_stepwise, stepwise
from oracles import brute_force_subsets

BOSTON_TRACE = [42716, 19472, 15439, 13728, 13229, 12469, 12141, 11868]


class TestStepwise:
    def test_orthogonal_response(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.0, 0.0]])
        y = np.array([0.0, 0.0, 0.0, 0.0, 1.0]) - 0.2
        trace = stepwise(Dataset(X, y))
        assert trace.covariates == []
        assert trace.steps[0].forced

    def test_finds_planted_signal(self, rng):
        X = rng.standard_normal((300, 100))
        y = 3 * X[:, 10] - 2 * X[:, 50] + rng.standard_normal(300)
        trace = stepwise(Dataset(X, y))
        assert set(trace.covariates) == {11, 51}
        assert trace.terminated == "threshold"
        assert trace.rejected is not None and trace.rejected.stepwise_p > 0.01

    def test_trace_invariants(self, rng):
        X = rng.standard_normal((200, 60))
        y = X[:, :6] @ np.linspace(1, 0.3, 6) + rng.standard_normal(200)
        trace = stepwise(Dataset(X, y), alpha=0.05)
        rss = [s.rss_after for s in trace.steps]
        assert all(a > b for a, b in zip(rss, rss[1:]))
        assert all(s.stepwise_p <= 0.05 for s in trace.steps if not s.forced)

    def test_deterministic(self, rng):
        d = Dataset(rng.standard_normal((100, 40)), rng.standard_normal(100))
        a = stepwise(d, alpha=0.5)
        b = stepwise(d, alpha=0.5)
        assert a.to_rows() == b.to_rows()

    def test_tie_breaks_on_lowest_index(self, rng):
        x = rng.standard_normal(50)
        X = np.column_stack([rng.standard_normal(50), x, x])
        trace = stepwise(Dataset(X, 2 * x + 0.1 * rng.standard_normal(50)))
        assert trace.covariates == [2]

    def test_prefix_closed(self, rng):
        X = rng.standard_normal((150, 40))
        y = X[:, :5] @ np.array([1.0, 0.8, 0.6, 0.5, 0.4]) + rng.standard_normal(150)
        d = Dataset(X, y)
        full = stepwise(d)
        assert len(full) >= 3
        short = stepwise(d, max_steps=len(full) - 1)
        assert short.indices == full.indices[:-1]
        mask = np.ones(40, dtype=bool)
        mask[full.covariates[-1] - 1] = False
        reduced = stepwise(d, pool_mask=mask)
        assert reduced.indices[: len(full.indices) - 1] == full.indices[:-1]

    def test_kmax_finds_joint_pair(self):
        # x1 and x2 only matter through their difference
        rng = np.random.default_rng(2)
        n = 200
        z, e1, e2 = rng.standard_normal((3, n))
        X = rng.standard_normal((n, 30))
        X[:, 0] = z + 0.05 * e1
        X[:, 1] = z + 0.05 * e2
        y = (e1 - e2) + 0.2 * X[:, 0] + rng.standard_normal(n)
        d = Dataset(X, y)
        assert stepwise(d).covariates == []
        refined = stepwise(d, kmax=2)
        assert sorted(refined.covariates) == [1, 2]

    def test_kmax_over_alpha_one(self, rng):
        d = Dataset(rng.standard_normal((60, 20)), rng.standard_normal(60))
        trace = stepwise(d, alpha=2.0, kmax=4)
        assert len(trace) == 4
        assert trace.terminated == "kmax_refined"

    def test_parameter_checks(self, rng):
        d = Dataset(rng.standard_normal((20, 3)), rng.standard_normal(20))
        with pytest.raises(ValueError):
            stepwise(d, alpha=2.0)
        with pytest.raises(CapExceededError):
            stepwise(d, kmax=21)
        with pytest.raises(DomainError):
            stepwise(d, nu=0)
        with pytest.raises(DomainError):
            stepwise(d, alpha=0.0)

    def test_nu_selects_at_least_as_many(self, rng):
        X = rng.standard_normal((200, 200))
        y = X[:, :10] @ np.full(10, 0.25) + rng.standard_normal(200)
        d = Dataset(X, y)
        assert len(stepwise(d, nu=5)) >= len(stepwise(d, nu=1))

    def test_rows_have_ratio(self, rng):
        d = Dataset(rng.standard_normal((50, 5)), rng.standard_normal(50) + 3)
        rows = stepwise(d).to_rows()
        assert rows[0]["ratio"] == pytest.approx(rows[0]["rss"] / float(d.y @ d.y))

    @pytest.mark.realdata
    def test_boston_trace(self, boston):
        trace = stepwise(boston)
        assert trace.covariates == [13, 6, 11, 8, 5, 4, 12]
        assert np.allclose([s.rss_after for s in trace.steps], BOSTON_TRACE, atol=1.0)
        assert [round(r["ratio"], 3) for r in trace.to_rows()] == [0.143, 0.456, 0.793, 0.889, 0.964, 0.943, 0.974, 0.978]

    @pytest.mark.realdata
    def test_wine_trace(self, wine):
        trace = stepwise(wine)
        names = [wine.label(j) for j in trace.covariates]
        assert names == ["alcohol", "volatile acidity", "sulphates", "total sulfur dioxide", "chlorides", "pH"]
        rss = [s.rss_after for s in trace.steps]
        assert np.allclose(rss, [1042.2, 805.9, 711.8, 692.1, 683.9, 675.9, 669.9], atol=0.1)


class TestAllSubsets:
    def test_single_perfect_column(self, rng):
        y = rng.standard_normal(20)
        res = all_subsets(Dataset(y[:, None], y, intercept=False))
        assert [r.covariates for r in res] == [(1,)]

    def test_cap(self, rng):
        d = Dataset(rng.standard_normal((40, 26)), rng.standard_normal(40))
        with pytest.raises(CapExceededError, match="25"):
            all_subsets(d)
        d = Dataset(rng.standard_normal((40, 6)), rng.standard_normal(40))
        with pytest.raises(CapExceededError):
            all_subsets(d, cap=5)

    def test_members_pass_and_sorted(self, rng):
        X = rng.standard_normal((80, 8))
        y = X[:, :3].sum(axis=1) + rng.standard_normal(80)
        res = all_subsets(Dataset(X, y))
        assert res
        assert [r.rss for r in res] == sorted(r.rss for r in res)
        for r in res:
            assert all(r.member_pvalues[i] <= 0.01 for i in r.covariates)

    def test_brute_force(self):
        rng = np.random.default_rng(99)
        for _ in range(50):
            n = int(rng.integers(20, 60))
            q = int(rng.integers(2, 9))
            X = rng.standard_normal((n, q))
            X[:, 1:] += 0.5 * X[:, :1]
            y = X @ (rng.standard_normal(q) * rng.integers(0, 2, q) * 0.6) + rng.standard_normal(n)
            got = {frozenset(r.covariates) for r in all_subsets(Dataset(X, y), alpha=0.05)}
            assert got == brute_force_subsets(X, y, 0.05)

    @pytest.mark.realdata
    def test_boston_best(self, boston):
        res = all_subsets(boston)
        assert set(res[0].covariates) == set(range(1, 14)) - {3, 7}


class TestRepeated:
    def test_empty(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.0, 0.0]])
        y = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
        rounds = repeated_stepwise(Dataset(X, y))
        assert len(rounds) == 1 and rounds[0].covariates == []

    def test_duplicate_blocks(self):
        # an exact copy is collinear in round one and wins round two
        rng = np.random.default_rng(3)
        n = 200
        s = rng.standard_normal(n)
        X = rng.standard_normal((n, 30))
        X[:, 3] = s
        X[:, 20] = s
        rounds = repeated_stepwise(Dataset(X, s + rng.standard_normal(n)))
        assert [r.covariates for r in rounds] == [[4], [21]]
        assert rounds[0].rss == pytest.approx(rounds[1].rss, rel=1e-10)

    def test_rounds_disjoint(self, rng):
        X = rng.standard_normal((120, 30))
        y = X[:, :8].sum(axis=1) + rng.standard_normal(120)
        rounds = repeated_stepwise(Dataset(X, y))
        seen = [j for r in rounds for j in r.covariates]
        assert len(seen) == len(set(seen))
        assert rounds[-1].covariates

    def test_max_rounds(self, rng):
        X = rng.standard_normal((120, 30))
        y = X[:, :8].sum(axis=1) + rng.standard_normal(120)
        assert len(repeated_stepwise(Dataset(X, y), max_rounds=1)) == 1
