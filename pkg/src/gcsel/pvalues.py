"""Exact P-values for "is this covariate better than Gaussian noise".

Let ``rss0`` be the residual sum of squares of the current model with ``k``
columns and ``rss_i`` the value after adding covariate ``i``.  Replacing each
of the ``q - k`` remaining covariates by an independent Gaussian vector, the
relative reduction of one random covariate is Beta distributed, so the
probability that the best of them beats ``rss_i`` is::

    P_i = 1 - (1 - B_{(n-k-1)/2, 1/2}(rss_i / rss0)) ** (q - k)

and, for the ``nu``-th best, the order-statistic version
``B_{nu, q-k+1-nu}(B_{(n-k-1)/2, 1/2}(rss_i / rss0))``.
"""

import math

import numpy as np

from .exceptions import DomainError
from .specfun import beta_cdf, beta_quantile, check_probability, f_sf

__all__ = [
    "pg_theorem1",
    "pg_theorem1_f",
    "step_pvalue",
    "pf_from_pg",
    "leave_one_out_pvalues",
]


def _ratio(rss, rss0, name="rss"):
    rss = np.asarray(rss, dtype=float)
    rss0 = np.asarray(rss0, dtype=float)
    if np.any(~(rss0 > 0)):
        raise DomainError("rss0 must be positive")
    if np.any(np.isnan(rss)) or np.any(rss < 0):
        raise DomainError(f"{name} must be non-negative")
    # allow rounding noise of a few ulps above rss0
    if np.any(rss > rss0 * (1.0 + 1e-12)):
        raise DomainError(f"{name} must not exceed rss0")
    return np.minimum(rss / rss0, 1.0)


def _scalar(value, like):
    if all(np.ndim(v) == 0 for v in like):
        return float(np.asarray(value).reshape(()))
    return value


def pg_theorem1(rss, rss0, n, k, k0):
    """Probability that ``k - k0`` Gaussian covariates reduce RSS below ``rss``.

    Parameters
    ----------
    rss : float
        RSS of the model with ``k`` covariates.
    rss0 : float
        RSS of the nested model with ``k0`` covariates.
    n, k, k0 : int
        Sample size and the two model sizes, ``k0 < k < n``.

    Returns
    -------
    float
        ``B_{(n-k)/2, (k-k0)/2}(rss / rss0)``.
    """
    if not (0 <= k0 < k < n):
        raise DomainError("require 0 <= k0 < k < n")
    x = _ratio(rss, rss0)
    return _scalar(beta_cdf(x, (n - k) / 2.0, (k - k0) / 2.0), (rss, rss0))


def pg_theorem1_f(rss, rss0, n, k, k0):
    """Same probability as :func:`pg_theorem1` written as an F upper tail."""
    if not (0 <= k0 < k < n):
        raise DomainError("require 0 <= k0 < k < n")
    x = _ratio(rss, rss0)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = (1.0 / x - 1.0) * (n - k) / (k - k0)
    stat = np.where(x == 0, np.inf, stat)
    return _scalar(f_sf(stat, k - k0, n - k), (rss, rss0))


def _order_stat_cdf(b, pool, nu):
    """P(nu-th smallest of ``pool`` iid U(0,1) variables <= b)."""
    b = np.asarray(b, dtype=float)
    if nu == 1:
        with np.errstate(divide="ignore"):
            out = -np.expm1(pool * np.log1p(-b))
        # tiny b: log1p loses nothing but guard subnormal products
        return np.where(b < 1e-290, np.minimum(pool * b, 1.0), out)
    return np.asarray(beta_cdf(b, nu, pool + 1 - nu))


def step_pvalue(rss_i, rss0, n, k, q, nu=1):
    """P-value of the covariate reducing RSS from ``rss0`` to ``rss_i``.

    Parameters
    ----------
    rss_i : float or array-like
        RSS after adding the candidate.
    rss0 : float
        RSS of the current model.
    n : int
        Number of observations.
    k : int
        Number of columns already in the model.
    q : int
        Total number of columns the model could draw on, so that ``q - k``
        candidates compete at this step.
    nu : int, default=1
        Compare against the ``nu``-th best of ``q - k`` Gaussian covariates.

    Returns
    -------
    float or ndarray
    """
    pool = int(q) - int(k)
    nu = int(nu)
    if not 1 <= nu <= pool:
        raise DomainError(f"need 1 <= nu <= q - k, got nu={nu}, q - k={pool}")
    if not 0 <= k < n - 1:
        raise DomainError(f"need 0 <= k < n - 1, got k={k}, n={n}")
    x = _ratio(rss_i, rss0, "rss_i")
    b = np.asarray(beta_cdf(x, (n - k - 1) / 2.0, 0.5))
    p = np.clip(_order_stat_cdf(b, pool, nu), 0.0, 1.0)
    return _scalar(p, (rss_i, rss0))


def pf_from_pg(p_i, n, k, q):
    """Standard F-test P-value corresponding to a stepwise P-value.

    The relative reduction ``rss_i / rss0`` is recovered from ``p_i`` by two
    quantile inversions and fed to the one-degree-of-freedom F test.
    """
    check_probability(p_i, "p_i")
    if not 0.0 < p_i < 1.0:
        raise DomainError("p_i must lie strictly between 0 and 1")
    pool = int(q) - int(k)
    if pool < 1:
        raise DomainError("q - k must be at least 1")
    df = n - k - 1
    if df <= 0:
        raise DomainError("need k < n - 1")
    b = beta_quantile(p_i, 1.0, pool)
    x = beta_quantile(b, df / 2.0, 0.5)
    if x <= 0.0:
        return 0.0
    stat = df * (1.0 / x - 1.0)
    return float(f_sf(stat, 1.0, df))


def leave_one_out_pvalues(model, data=None, q=None, nu=1):
    """Adjusted and standard P-values of every selected covariate.

    Each selected covariate is tested as if it had been added last to the
    model formed by the others.  The constant column competes only with
    itself.

    Parameters
    ----------
    model : ActiveModel
    data : Dataset, optional
        Defaults to ``model.data``.
    q : int, optional
        Total number of columns available, constant included.  Defaults to
        every column of the data set.

    Returns
    -------
    dict
        ``index -> (adjusted, standard)``.
    """
    data = model.data if data is None else data
    if model.k == 0:
        raise ValueError("the model is empty")
    n = data.n
    size = model.k
    if q is None:
        q = data.q + len(data.forced)
    rss_s = model.rss
    dropped = model.drop_one_rss()
    df = n - size
    out = {}
    for idx, rss_minus in zip(model.selected, dropped):
        rss_minus = float(max(rss_minus, rss_s))
        if rss_minus <= 0.0:
            out[idx] = (1.0, 1.0)
            continue
        pool_q = size if idx == 0 else q
        nu_i = 1 if idx == 0 else min(nu, pool_q - size + 1)
        adjusted = step_pvalue(rss_s, rss_minus, n, size - 1, pool_q, nu=nu_i)
        if df <= 0:
            standard = math.nan
        elif rss_s <= 0.0:
            standard = 0.0
        else:
            stat = (rss_minus - rss_s) / (rss_s / df)
            standard = float(f_sf(stat, 1.0, df))
        out[idx] = (adjusted, standard)
    return out
