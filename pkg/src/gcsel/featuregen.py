"""Design matrices built from a few base series.

* :func:`interactions` - every monomial of bounded total degree.
* :func:`trig_basis` - sine and cosine columns for periodicity hunting.
* :func:`lag_matrix` - lagged copies of several aligned series.
"""

from math import comb

import numpy as np

from .engine import Dataset
from .exceptions import CapExceededError, DataError

__all__ = [
    "interactions",
    "interaction_count",
    "monomial_name",
    "trig_basis",
    "trig_period",
    "lag_matrix",
    "INTERACTION_CAP",
]

INTERACTION_CAP = 1_000_000


def interaction_count(q, max_order):
    """Number of monomials of degree at most ``max_order`` in ``q`` variables,
    the constant included."""
    return comb(q + max_order, max_order)


def monomial_name(powers, names):
    """Label such as ``6^4·12`` for a sorted tuple of variable positions."""
    parts = []
    last = None
    for v in powers:
        if v == last:
            parts[-1][1] += 1
        else:
            parts.append([v, 1])
            last = v
    return "·".join(names[v] if e == 1 else f"{names[v]}^{e}" for v, e in parts)


def interactions(data, max_order, names=None, y=None, cap=INTERACTION_CAP):
    """All monomials of total degree ``1..max_order`` in the columns of ``data``.

    The degree-0 monomial is the constant, which becomes the data set's
    intercept (index 0), so the returned data set has
    ``C(q + max_order, max_order) - 1`` explicit columns.  Columns follow
    graded lexicographic order: all degree-one terms, then degree two, and
    so on.

    Parameters
    ----------
    data : Dataset or array-like of shape (n, q)
    max_order : int
    names : sequence of str, optional
        Base variable labels; default is the data set's names, or
        ``"1"..."q"`` for a plain array.
    y : array-like, optional
        Response for a plain array input.
    cap : int
        Refuse to build more than this many columns.
    """
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    if isinstance(data, Dataset):
        x = data.x
        y = data.y if y is None else y
        names = data.names if names is None else names
    else:
        x = np.asarray(data, dtype=float)
        if x.ndim != 2:
            raise DataError("x must be two-dimensional")
    n, q = x.shape
    if names is None:
        names = [str(j) for j in range(1, q + 1)]
    names = [str(s) for s in names]
    total = interaction_count(q, max_order)
    if total > cap:
        raise CapExceededError(f"{total} interaction columns exceed the cap of {cap}")
    if y is None:
        y = np.zeros(n)

    out = np.empty((n, total - 1), order="F")
    labels = []
    # each degree-d term extends a degree-(d-1) prefix by a variable no
    # smaller than the prefix's last one
    prev_cols = None
    prev_combos = None
    col = 0
    for degree in range(1, max_order + 1):
        if degree == 1:
            out[:, :q] = x
            combos = [(j,) for j in range(q)]
            labels.extend(names[j] for j in range(q))
            cols = np.arange(q)
            col = q
        else:
            combos = []
            cols = []
            for pc, prefix in zip(prev_cols, prev_combos):
                last = prefix[-1]
                width = q - last
                block = slice(col, col + width)
                np.multiply(out[:, pc : pc + 1], x[:, last:], out=out[:, block])
                for j in range(last, q):
                    combos.append(prefix + (j,))
                cols.extend(range(col, col + width))
                col += width
            labels.extend(monomial_name(c, names) for c in combos)
        prev_cols, prev_combos = list(cols), combos
    assert col == total - 1
    result = Dataset(out, y, names=labels, intercept=True)
    result.meta["max_order"] = max_order
    result.meta["base_names"] = list(names)
    return result


def trig_period(column, n):
    """Period in sample units of 1-based trig column ``column`` of length ``n``."""
    ell = (int(column) + 1) // 2
    return 2.0 * n / ell


def trig_basis(n, max_freq, y=None):
    """Sine and cosine columns ``sin(pi l t / n)``, ``cos(pi l t / n)``.

    Column ``2l - 1`` holds the sine and column ``2l`` the cosine of
    frequency ``l`` for ``l = 1..max_freq`` and ``t = 1..n``.  The period of
    both is ``2n / l`` samples; it is stored in ``meta["periods"]``.
    """
    n = int(n)
    max_freq = int(max_freq)
    if max_freq < 1:
        raise ValueError("max_freq must be at least 1")
    if max_freq > n / 2:
        raise ValueError("max_freq must not exceed n / 2")
    t = np.arange(1, n + 1, dtype=float)
    ell = np.arange(1, max_freq + 1, dtype=float)
    arg = np.pi * np.outer(t, ell) / n
    x = np.empty((n, 2 * max_freq), order="F")
    x[:, 0::2] = np.sin(arg)
    x[:, 1::2] = np.cos(arg)
    if y is None:
        y = np.zeros(n)
    data = Dataset(x, y, intercept=True)
    data.meta["periods"] = np.repeat(2.0 * n / ell, 2)
    data.meta["frequencies"] = np.repeat(ell.astype(int), 2)
    return data


def lag_matrix(series, max_lag, target, intercept=True):
    """Lagged covariates of several series, aligned with a target series.

    Parameters
    ----------
    series : dict or sequence of (name, vector)
        Equal-length series.
    max_lag : int
        Lags ``1..max_lag`` of every series become columns named
        ``"NAME, lag k"``.
    target : str
        Name of the series used as response; its first ``max_lag`` values are
        dropped.
    """
    items = list(series.items()) if isinstance(series, dict) else list(series)
    if not items:
        raise DataError("no series given")
    arrays = [(str(name), np.asarray(v, dtype=float).reshape(-1)) for name, v in items]
    length = arrays[0][1].shape[0]
    for name, v in arrays:
        if v.shape[0] != length:
            raise DataError(f"series {name!r} has length {v.shape[0]}, expected {length}")
    lookup = dict(arrays)
    if target not in lookup:
        raise DataError(f"unknown target series {target!r}")
    if not 1 <= max_lag < length:
        raise ValueError("need 1 <= max_lag < series length")
    m = length - max_lag
    cols = []
    names = []
    for name, v in arrays:
        for k in range(1, max_lag + 1):
            cols.append(v[max_lag - k : length - k])
            names.append(f"{name}, lag {k}")
    x = np.column_stack(cols) if cols else np.empty((m, 0))
    y = lookup[target][max_lag:]
    return Dataset(x, y, names=names, intercept=intercept)
