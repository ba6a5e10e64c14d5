"""Simulation harnesses for calibrating and benchmarking the selection methods.

Every replication ``r`` of a run with seed ``s`` draws from its own Philox
stream ``SeedSequence(s, spawn_key=(r,))``, so results do not depend on the
number of worker threads or on the order in which replications finish.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import Dataset
from .featuregen import trig_basis
from .graphs import default_threads, dependency_graph
from .pvalues import step_pvalue
from .selection import stepwise

__all__ = [
    "SimConfig",
    "SimReport",
    "rng_for",
    "fsimords",
    "fsimords_direct",
    "tutorial1",
    "toeplitz_design",
    "random_graph",
    "random_graph_bench",
    "correlated_error_study",
    "gamma_for_correlation",
    "smooth_signal",
    "mc_pvalue_oracle",
    "graph_fp_expectation",
]


@dataclass
class SimConfig:
    """Parameters shared by the simulation harnesses.

    Attributes
    ----------
    n, q : int
        Observations and candidate covariates.
    alpha, nu : float, int
        Selection level and order statistic.
    nsim : int
        Number of replications.
    seed : int
        Root seed; identical configurations give identical reports.
    p, amplitude, rho : scenario parameters for the Toeplitz benchmark.
    gamma : float
        Moving-average coefficient of correlated errors.
    intercept : bool
        Force the constant column into every model.
    method : {"lazy", "direct"}
        How null replications are generated (see :func:`fsimords`).
    threads : int, optional
        Worker threads; defaults to the available parallelism.
    """

    n: int = 1000
    q: int = 1000
    alpha: float = 0.01
    nu: int = 1
    nsim: int = 100
    seed: int = 0
    p: int = 0
    amplitude: float = 0.0
    rho: float = 0.0
    gamma: float = 0.0
    intercept: bool = True
    method: str = "lazy"
    threads: int = None
    kmax: int = 1

    def __post_init__(self):
        if self.nsim < 1:
            raise ValueError("nsim must be at least 1")
        if self.n < 3 or self.q < 1:
            raise ValueError("need n >= 3 and q >= 1")
        if self.method not in ("lazy", "direct"):
            raise ValueError("method must be 'lazy' or 'direct'")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_mapping(cls, values):
        """Build from string key/value pairs, e.g. a parsed config file."""
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in known:
                continue
            typ = cls.__dataclass_fields__[key].type
            if key == "intercept":
                kwargs[key] = str(raw).lower() in ("1", "true", "yes", "on")
            elif key in ("method",):
                kwargs[key] = str(raw)
            elif key in ("alpha", "amplitude", "rho", "gamma"):
                kwargs[key] = float(raw)
            elif typ in (int, "int") or key in ("n", "q", "nu", "nsim", "seed", "p", "threads", "kmax"):
                kwargs[key] = int(raw)
        return cls(**kwargs)


@dataclass
class SimReport:
    """Per-replication outcomes and their summaries."""

    config: dict
    fp: np.ndarray
    fn: np.ndarray
    selected: np.ndarray
    seconds: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def nsim(self):
        return len(self.fp)

    def histogram(self, top=11):
        """Relative frequencies of ``0..top-1`` false positives and ``>= top``."""
        counts = np.bincount(np.minimum(self.fp, top), minlength=top + 1)
        return counts / self.nsim

    def summary(self):
        def stats(a):
            a = np.asarray(a, dtype=float)
            sd = float(a.std(ddof=1)) if a.size > 1 else 0.0
            return {"mean": float(a.mean()), "sd": sd, "min": float(a.min()), "max": float(a.max())}

        return {
            "nsim": self.nsim,
            "fp": stats(self.fp),
            "fn": stats(self.fn),
            "selected": stats(self.selected),
            "seconds": stats(self.seconds),
            "p_any_fp": float(np.mean(self.fp >= 1)),
            "histogram": self.histogram().tolist(),
        }

    def rows(self):
        return [
            {"replication": i, "fp": int(a), "fn": int(b), "selected": int(c), "seconds": float(d)}
            for i, (a, b, c, d) in enumerate(zip(self.fp, self.fn, self.selected, self.seconds))
        ]


def rng_for(seed, rep):
    """Independent generator for replication ``rep``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(rep,))))


def _run(cfg, one):
    """Run ``one(rep) -> (fp, fn, selected, extra)`` for every replication."""
    threads = cfg.threads or default_threads()

    def timed(rep):
        t0 = time.perf_counter()
        out = one(rep)
        return out, time.perf_counter() - t0

    if threads == 1 or cfg.nsim == 1:
        results = [timed(r) for r in range(cfg.nsim)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(timed, range(cfg.nsim)))
    fp = np.array([r[0][0] for r in results], dtype=np.int64)
    fn = np.array([r[0][1] for r in results], dtype=np.int64)
    sel = np.array([r[0][2] for r in results], dtype=np.int64)
    sec = np.array([r[1] for r in results])
    return SimReport(asdict(cfg), fp, fn, sel, sec)


def _null_count_lazy(rng, n, q, alpha, nu, n_forced, max_steps=None):
    """Number of pure-noise covariates selected, simulated in O(q) per step.

    The response direction is fixed; only the scalar statistics of each
    Gaussian column relative to the current residual are tracked.  For column
    ``j`` these are ``w_j`` (component along the residual) and ``R_j``
    (squared norm of the rest).  When column ``s`` enters the model, the
    overlap of another column's remaining part with that of ``s`` is
    ``sqrt(R_j) * S_j`` with ``S_j^2 ~ Beta(1/2, (D-1)/2)`` in the ``D``
    remaining dimensions, which gives the updated statistics exactly.
    """
    d = n - n_forced
    w = rng.standard_normal(q)
    R = rng.chisquare(d - 1, q)
    alive = np.ones(q, dtype=bool)
    D = d - 1
    k = n_forced
    q_total = q + n_forced
    count = 0
    while True:
        if max_steps is not None and count >= max_steps:
            break
        if k >= n - 2 or q_total - k < nu or D < 2:
            break
        ratio = np.where(alive, R / (w * w + R), np.inf)
        s = int(np.argmin(ratio))
        p = step_pvalue(ratio[s], 1.0, n, k, q_total, nu)
        if p > alpha:
            break
        count += 1
        ws, Rs = w[s], R[s]
        alive[s] = False
        S = np.sqrt(rng.beta(0.5, (D - 1) / 2.0, q)) * rng.choice((-1.0, 1.0), q)
        t = np.sqrt(R) * S
        w = (math.sqrt(Rs) * w - ws * t) / math.sqrt(ws * ws + Rs)
        R = np.maximum(R - t * t, 0.0)
        D -= 1
        k += 1
    return count


def fsimords(cfg, y=None):
    """False positives when ``y`` is regressed on pure Gaussian covariates.

    Every selected covariate is a false positive.  With ``method="lazy"``
    (the default) the distribution of the selection path is simulated
    exactly without materializing the covariates; ``method="direct"`` draws
    the full ``n x q`` matrix and runs :func:`stepwise` (and accepts a fixed
    response ``y``).
    """
    n_forced = 1 if cfg.intercept else 0
    if cfg.method == "lazy":

        def one(rep):
            c = _null_count_lazy(rng_for(cfg.seed, rep), cfg.n, cfg.q, cfg.alpha, cfg.nu, n_forced)
            return c, 0, c

    else:

        def one(rep):
            return _direct_null(cfg, rep, y)

    return _run(cfg, one)


def _direct_null(cfg, rep, y=None):
    rng = rng_for(cfg.seed, rep)
    x = rng.standard_normal((cfg.q, cfg.n)).T
    yy = rng.standard_normal(cfg.n) if y is None else np.asarray(y, dtype=float)
    data = Dataset(x, yy, intercept=cfg.intercept)
    tr = stepwise(data, alpha=cfg.alpha, nu=cfg.nu)
    c = len(tr.covariates)
    return c, 0, c


def fsimords_direct(cfg, y=None):
    """:func:`fsimords` with the covariate matrix drawn explicitly."""
    cfg = SimConfig(**{**asdict(cfg), "method": "direct"})
    return fsimords(cfg, y=y)


def graph_fp_expectation(n, q, alpha, nu=1, nsim=1000, seed=0, threads=None):
    """Expected false edges of a dependency graph on ``q`` independent nodes.

    Each node regression sees ``q - 1`` pure-noise candidates at level
    ``alpha / q``.
    """
    cfg = SimConfig(n=n, q=q - 1, alpha=alpha / q, nu=nu, nsim=nsim, seed=seed, threads=threads)
    rep = fsimords(cfg)
    return q * float(rep.fp.mean()), rep


def toeplitz_design(rng, n, q, rho):
    """``n x q`` Gaussian matrix with column covariance ``rho^|i-j|``."""
    z = rng.standard_normal((q, n))
    x = np.empty((q, n))
    x[0] = z[0]
    c = math.sqrt(1.0 - rho * rho)
    for j in range(1, q):
        x[j] = rho * x[j - 1] + c * z[j]
    return x.T  # column-major view


def tutorial1(cfg):
    """Sparse linear model with Toeplitz-correlated Gaussian covariates.

    ``p`` columns chosen at random carry coefficient ``amplitude / sqrt(n)``
    and the noise is standard Gaussian.
    """
    if cfg.p > cfg.q:
        raise ValueError("p must not exceed q")

    def one(rep):
        rng = rng_for(cfg.seed, rep)
        x = toeplitz_design(rng, cfg.n, cfg.q, cfg.rho)
        support = rng.choice(cfg.q, size=cfg.p, replace=False)
        beta = cfg.amplitude / math.sqrt(cfg.n)
        y = x[:, support].sum(axis=1) * beta + rng.standard_normal(cfg.n)
        data = Dataset(x, y, intercept=cfg.intercept)
        tr = stepwise(data, alpha=cfg.alpha, nu=cfg.nu, kmax=cfg.kmax)
        chosen = set(j - 1 for j in tr.covariates)
        true = set(support.tolist())
        tp = len(chosen & true)
        return len(chosen) - tp, cfg.p - tp, len(chosen)

    return _run(cfg, one)


def random_graph(rng, q=600, scale=23.5, weight=0.245):
    """Spatial random graph and a Gaussian precision matrix supported on it.

    Nodes are uniform on the unit square; each pair at distance ``d`` is
    joined with probability ``exp(-(scale d)^2 / 2)``.  The precision matrix
    has unit diagonal and ``weight`` on edges, shifted along the diagonal if
    needed to make it positive definite.

    Returns
    -------
    edges : set of (i, j) with i < j
    precision : ndarray of shape (q, q)
    """
    pts = rng.random((q, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    prob = np.exp(-0.5 * (scale * dist) ** 2)
    u = rng.random((q, q))
    adj = np.triu(u < prob, k=1)
    edges = {(int(i), int(j)) for i, j in zip(*np.nonzero(adj))}
    theta = np.eye(q)
    sym = adj | adj.T
    theta[sym] = weight
    eig_min = float(np.linalg.eigvalsh(theta)[0])
    if eig_min <= 1e-3:
        theta += (1e-3 - eig_min + 0.1) * np.eye(q)
    return edges, theta


def random_graph_bench(cfg, scale=23.5, weight=0.245, symmetrize=True):
    """Recover a spatial random graph from ``n`` Gaussian draws.

    Scores the undirected dependency graph against the generating edges;
    ``fp`` and ``fn`` count edges.  ``cfg.q`` is the number of nodes.
    """

    def one(rep):
        rng = rng_for(cfg.seed, rep)
        edges, theta = random_graph(rng, cfg.q, scale, weight)
        L = np.linalg.cholesky(theta)
        z = rng.standard_normal((cfg.n, cfg.q))
        # theta = L L^T, so rows of z L^{-1} have covariance theta^{-1}
        x = np.linalg.solve(L.T, z.T).T
        graph = dependency_graph(
            x, alpha=cfg.alpha, nu=cfg.nu, symmetrize=symmetrize, intercept=cfg.intercept, threads=1
        )
        found = graph.undirected()
        tp = len(found & edges)
        return len(found) - tp, len(edges) - tp, len(found)

    rep = _run(cfg, one)
    rep.extra["true_edges"] = (rep.selected - rep.fp + rep.fn).tolist()
    return rep


def gamma_for_correlation(rho):
    """MA(1) coefficient giving first-order correlation ``rho`` (|rho| <= 1/2)."""
    if rho == 0:
        return 0.0
    if abs(rho) > 0.5:
        raise ValueError("an MA(1) process has |correlation| <= 1/2")
    return (1.0 - math.sqrt(1.0 - 4.0 * rho * rho)) / (2.0 * rho)


# trig columns (1-based) and coefficients of the smooth test signal
SMOOTH_TERMS = ((40, 4.0), (39, 1.5), (77, 0.6), (16, 0.27), (79, 0.2))


def smooth_signal(basis, terms=SMOOTH_TERMS):
    """Smooth seasonal signal built from a few trig columns."""
    out = np.zeros(basis.n)
    for col, coef in terms:
        out += coef * basis.x[:, col - 1]
    return out


def correlated_error_study(
    nsim=20, seed=0, n=3650, max_freq=None, sd=2.7, rhos=(0.0, 0.25, 0.5),
    signals=("none", "sine", "smooth"), alpha=0.01, nu=1, threads=None,
):
    """Selected-count table for trig-basis regression with MA(1) errors.

    Returns a list of rows ``{signal, rho, mean, min, max, counts}`` where
    ``counts`` excludes the constant.
    """
    max_freq = n // 2 if max_freq is None else max_freq
    basis = trig_basis(n, max_freq)
    t = np.arange(1, n + 1)
    signal_values = {
        "none": np.zeros(n),
        "sine": 20.0 * np.sin(2.0 * np.pi * 10.0 * t / n),
        "smooth": smooth_signal(basis),
    }
    threads = threads or default_threads()
    rows = []
    for si, signal in enumerate(signals):
        mu = signal_values[signal]
        for ri, rho in enumerate(rhos):
            gamma = gamma_for_correlation(rho)

            def one(rep, mu=mu, gamma=gamma, si=si, ri=ri):
                rng = rng_for(seed, (si * 1000 + ri) * 100000 + rep)
                z = rng.standard_normal(n + 1)
                eps = (z[1:] + gamma * z[:-1]) / math.sqrt(1.0 + gamma * gamma)
                data = basis.with_response(mu + sd * eps)
                return len(stepwise(data, alpha=alpha, nu=nu).covariates)

            if threads == 1:
                counts = [one(r) for r in range(nsim)]
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    counts = list(pool.map(one, range(nsim)))
            counts = np.array(counts)
            rows.append(
                {
                    "signal": signal,
                    "rho": rho,
                    "mean": float(counts.mean()),
                    "min": int(counts.min()),
                    "max": int(counts.max()),
                    "counts": counts.tolist(),
                }
            )
    return rows


def mc_pvalue_oracle(y, model, rss_i, q_pool, nsim, seed=0, nu=1, batch=2000):
    """Empirical probability that Gaussian covariates beat ``rss_i``.

    Draws ``q_pool`` independent standard Gaussian columns, projects them
    off the columns of ``model`` and records the ``nu``-th smallest RSS
    obtained by adding any one of them.  This is the defining probability of
    the stepwise P-value, evaluated by brute force.

    Parameters
    ----------
    y : ndarray of shape (n,)
    model : ndarray of shape (n, k) or None
        Columns already in the model.
    rss_i : float or array-like
        Thresholds to evaluate; all share the same simulated draws.
    q_pool : int
    nsim : int
    nu : int

    Returns
    -------
    p_hat, se : ndarray
        Proportions and binomial standard errors, one per threshold.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if model is None or np.size(model) == 0:
        Q = np.zeros((n, 0))
    else:
        Q, _ = np.linalg.qr(np.asarray(model, dtype=float).reshape(n, -1))
    r = y - Q @ (Q.T @ y)
    rss0 = float(r @ r)
    thresholds = np.atleast_1d(np.asarray(rss_i, dtype=float))
    hits = np.zeros(thresholds.shape, dtype=np.int64)
    done = 0
    b = 0
    while done < nsim:
        m = min(batch, nsim - done)
        rng = rng_for(seed, b)
        Z = rng.standard_normal((m, n, q_pool))
        if Q.shape[1]:
            Z -= np.einsum("nk,bkq->bnq", Q, np.einsum("nk,bnq->bkq", Q, Z))
        zr = np.einsum("bnq,n->bq", Z, r)
        zz = np.einsum("bnq,bnq->bq", Z, Z)
        rss = rss0 - zr * zr / zz
        kth = np.partition(rss, nu - 1, axis=1)[:, nu - 1]
        hits += (kth[:, None] <= thresholds[None, :]).sum(axis=0)
        done += m
        b += 1
    p_hat = hits / nsim
    se = np.sqrt(np.maximum(p_hat * (1 - p_hat), 1e-300) / nsim)
    return p_hat, se
