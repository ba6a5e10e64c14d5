"""Equivalence regions for linear fits.

A coefficient vector ``beta`` is equivalent to the least-squares fit when the
extra sum of squares ``||X (beta - beta_ls)||^2`` it costs is no larger than
what ``q`` Gaussian covariates would typically remove.  The bound coincides
with the classical F confidence ellipsoid.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import DomainError
from .specfun import beta_quantile, check_probability, f_quantile

__all__ = ["equiv_radius", "equiv_contains", "EquivalenceResult"]


class EquivalenceResult(NamedTuple):
    inside: bool
    displacement: float
    radius: float


def equiv_radius(rss0, n, q, alpha, form="f"):
    """Largest admissible ``||X (beta - beta_ls)||^2``.

    Parameters
    ----------
    rss0 : float
        Residual sum of squares of the least-squares fit.
    n, q : int
        Observations and fitted columns, ``q < n``.
    alpha : float
        One minus the coverage.
    form : {"f", "beta"}
        Evaluate through the F quantile or the equivalent Beta quantile.
    """
    check_probability(alpha, "alpha")
    if not rss0 > 0:
        raise DomainError("rss0 must be positive")
    if not 0 < q < n:
        raise DomainError(f"need 0 < q < n, got q={q}, n={n}")
    if alpha >= 1.0:
        return 0.0
    if form == "f":
        return float(rss0 * q * f_quantile(1.0 - alpha, q, n - q) / (n - q))
    if form == "beta":
        Q = beta_quantile(1.0 - alpha, q / 2.0, (n - q) / 2.0)
        if Q >= 1.0:
            return float("inf")
        return float(rss0 * Q / (1.0 - Q))
    raise ValueError("form must be 'f' or 'beta'")


def _design(data):
    if data.intercept:
        return np.column_stack([np.ones(data.n), data.x])
    return data.x


def equiv_contains(data, beta, alpha=0.05):
    """Whether ``beta`` lies in the equivalence region of ``data``.

    ``beta`` has one entry per design column, the constant first when the
    data set has an intercept.

    Returns
    -------
    EquivalenceResult
        ``(inside, displacement, radius)``.
    """
    X = _design(data)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != X.shape[1]:
        raise DomainError(f"beta must have {X.shape[1]} entries, got {beta.shape[0]}")
    beta_ls, *_ = np.linalg.lstsq(X, data.y, rcond=None)
    resid = data.y - X @ beta_ls
    rss0 = float(resid @ resid)
    diff = X @ (beta - beta_ls)
    disp = float(diff @ diff)
    radius = equiv_radius(rss0, data.n, X.shape[1], alpha)
    return EquivalenceResult(disp <= radius, disp, radius)
