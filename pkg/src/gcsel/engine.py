"""Incremental least squares over a growing set of selected columns.

Covariates are addressed by a single index space shared by every module:
index 0 is the constant (intercept) column and indices ``1..q`` are the
columns of ``x`` in order.  The constant is never materialized as a column of
``x``, so very wide matrices are not copied.

:class:`ActiveModel` keeps an orthonormal basis of the selected columns built
by modified Gram-Schmidt with one re-orthogonalization pass, together with
the current residual.  Scoring every remaining candidate costs two
matrix-vector products per step: ``x.T @ residual`` and, when a column is
added, ``x.T @ new_basis_vector`` to keep the squared projections of every
column onto the basis up to date.
"""

import numpy as np

from .exceptions import CollinearityError, DataError

__all__ = [
    "Dataset",
    "ActiveModel",
    "init_model",
    "candidate_rss",
    "add_covariate",
    "coefficients",
    "COLLINEAR_TOL",
]

COLLINEAR_TOL = 1e-8
# below this fraction of the column norm left after projection, recompute
# the residual norm directly instead of trusting the accumulated projections
_RECOMPUTE_FRAC = 1e-6


class Dataset:
    """Response, covariate matrix and labels.

    Parameters
    ----------
    x : array-like of shape (n, q)
        Covariates.  Stored column-major; a C-ordered array is copied once.
    y : array-like of shape (n,)
        Response.
    names : sequence of str, optional
        Labels of the ``q`` columns.  Defaults to ``"1"``, ..., ``"q"``.
    intercept : bool, default=True
        Whether the constant column (index 0, label ``"0"``) is part of the
        model.  When enabled it is always selected first.
    standardize : bool, default=False
        Center and scale every column to unit norm.  Selection results do not
        depend on column scale, so this is only useful for diagnostics.

    Attributes
    ----------
    meta : dict
        Free-form metadata attached by generators (for example the periods
        of a trigonometric basis).
    """

    def __init__(self, x, y, names=None, intercept=True, standardize=False):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise DataError("x must be a two-dimensional array")
        if y.ndim != 1:
            y = y.reshape(-1)
        n, q = x.shape
        if n < 2:
            raise DataError("at least two observations are required")
        if q < 1:
            raise DataError("at least one covariate is required")
        if y.shape[0] != n:
            raise DataError(f"y has {y.shape[0]} entries but x has {n} rows")
        if not np.all(np.isfinite(y)):
            row = int(np.flatnonzero(~np.isfinite(y))[0])
            raise DataError("non-finite response value", row=row, column="y")
        if not np.all(np.isfinite(x)):
            row, col = np.argwhere(~np.isfinite(x))[0]
            raise DataError("non-finite covariate value", row=int(row), column=int(col) + 1)
        if standardize:
            x = x - x.mean(axis=0)
            norms = np.linalg.norm(x, axis=0)
            norms[norms == 0] = 1.0
            x = x / norms
        self.x = np.asfortranarray(x)
        self.y = np.ascontiguousarray(y)
        if names is None:
            names = [str(j) for j in range(1, q + 1)]
        names = [str(s) for s in names]
        if len(names) != q:
            raise DataError(f"expected {q} names, got {len(names)}")
        if len(set(names)) != q:
            raise DataError("column names must be unique")
        self.names = names
        self.intercept = bool(intercept)
        self.meta = {}
        self._colnorm2 = None

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def q(self):
        """Number of non-constant covariates."""
        return self.x.shape[1]

    @property
    def forced(self):
        """Indices selected before any test is made."""
        return (0,) if self.intercept else ()

    @property
    def colnorm2(self):
        """Squared Euclidean norms of the columns of ``x`` (cached)."""
        if self._colnorm2 is None:
            self._colnorm2 = np.einsum("ij,ij->j", self.x, self.x)
        return self._colnorm2

    def label(self, index):
        """Human-readable name of a covariate index."""
        index = int(index)
        if index == 0:
            return "0"
        return self.names[index - 1]

    def column(self, index):
        index = int(index)
        if index == 0:
            return np.ones(self.n)
        return self.x[:, index - 1]

    def with_response(self, y, intercept=None):
        """Same covariates (shared, not copied) with a different response."""
        new = object.__new__(Dataset)
        new.x = self.x
        y = np.ascontiguousarray(np.asarray(y, dtype=float))
        if y.shape != (self.n,):
            raise DataError(f"response must have shape ({self.n},)")
        if not np.all(np.isfinite(y)):
            raise DataError("non-finite response value")
        new.y = y
        new.names = self.names
        new.intercept = self.intercept if intercept is None else bool(intercept)
        new.meta = dict(self.meta)
        new._colnorm2 = self.colnorm2
        return new

    def __repr__(self):
        return f"Dataset(n={self.n}, q={self.q}, intercept={self.intercept})"


class ActiveModel:
    """Least-squares fit of ``y`` on a growing, ordered set of columns.

    Attributes
    ----------
    selected : list of int
        Covariate indices in order of inclusion.
    residual : ndarray of shape (n,)
        ``y`` minus its projection onto the selected columns.
    rss : float
        Squared norm of ``residual``.
    """

    def __init__(self, data, capacity=None):
        self.data = data
        n = data.n
        if capacity is None:
            capacity = min(n, 64)
        self._Q = np.empty((n, max(int(capacity), 1)), order="F")
        self._R = np.zeros((self._Q.shape[1], self._Q.shape[1]))
        self.selected = []
        self.residual = data.y.copy()
        self.rss = float(self.residual @ self.residual)
        self.rss0 = self.rss
        self._proj2 = np.zeros(data.q)

    @property
    def k(self):
        return len(self.selected)

    @property
    def basis(self):
        """Orthonormal basis of the selected columns, shape (n, k)."""
        return self._Q[:, : self.k]

    def _grow(self):
        cap = self._Q.shape[1]
        new_cap = min(max(2 * cap, cap + 1), self.data.n)
        Q = np.empty((self.data.n, new_cap), order="F")
        Q[:, :cap] = self._Q
        R = np.zeros((new_cap, new_cap))
        R[:cap, :cap] = self._R
        self._Q, self._R = Q, R

    def _orthogonalize(self, v):
        """Return (w, h) with w = v - Q h orthogonal to the basis, two passes."""
        Q = self.basis
        if Q.shape[1] == 0:
            return v.copy(), np.zeros(0)
        h = Q.T @ v
        w = v - Q @ h
        h2 = Q.T @ w
        w -= Q @ h2
        return w, h + h2

    def candidate_rss(self, mask=None):
        """RSS after adding each column of ``x`` on its own.

        Parameters
        ----------
        mask : ndarray of bool, shape (q,), optional
            Columns to score.  Selected columns are always excluded.

        Returns
        -------
        rss : ndarray of shape (q,)
            ``rss_i`` for scored columns, ``nan`` elsewhere.  Collinear
            columns report the current ``rss``.
        collinear : ndarray of bool, shape (q,)
            Scored columns lying in the span of the selected columns.
        """
        d = self.data
        active = np.ones(d.q, dtype=bool) if mask is None else np.array(mask, dtype=bool)
        for i in self.selected:
            if i > 0:
                active[i - 1] = False
        colnorm2 = d.colnorm2
        xr = d.x.T @ self.residual
        den = colnorm2 - self._proj2
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = den / colnorm2
        suspect = active & ~(frac > _RECOMPUTE_FRAC)
        if self.k and np.any(suspect):
            for j in np.flatnonzero(suspect):
                w, _ = self._orthogonalize(d.x[:, j])
                den[j] = w @ w
        collinear = active & ~(den > (COLLINEAR_TOL**2) * colnorm2)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.rss - xr * xr / den
        out = np.clip(out, 0.0, self.rss)
        out[collinear] = self.rss
        out[~active] = np.nan
        return out, collinear

    def add(self, index):
        """Append covariate ``index`` (0 is the constant) to the model."""
        d = self.data
        index = int(index)
        if index in self.selected:
            raise ValueError(f"covariate {d.label(index)!r} is already selected")
        if index == 0 and not d.intercept:
            raise ValueError("the constant column is disabled for this data set")
        if not 0 <= index <= d.q:
            raise IndexError(f"covariate index {index} out of range")
        if self.k >= self._Q.shape[1]:
            if self.k >= d.n:
                raise CollinearityError(index, d.label(index))
            self._grow()
        x = d.column(index)
        w, h = self._orthogonalize(x)
        norm = float(np.sqrt(w @ w))
        if not norm > COLLINEAR_TOL * float(np.sqrt(x @ x)):
            raise CollinearityError(index, d.label(index))
        b = w / norm
        k = self.k
        self._Q[:, k] = b
        self._R[:k, k] = h
        self._R[k, k] = norm
        self.selected.append(index)

        g = d.x.T @ b
        self._proj2 += g * g
        # residual update plus one clean-up pass against the full basis
        c = float(b @ self.residual)
        r = self.residual - c * b
        Q = self.basis
        r -= Q @ (Q.T @ r)
        self.residual = r
        self.rss = min(float(r @ r), self.rss)
        return self

    def coefficients(self):
        """Least-squares coefficients of the selected columns, in selection order."""
        k = self.k
        if k == 0:
            raise ValueError("the model is empty")
        R = self._R[:k, :k]
        coef = np.linalg.solve(R, self.basis.T @ self.data.y)
        return coef

    def inverse_gram_diagonal(self):
        """Diagonal of (X_S^T X_S)^{-1} from the stored triangular factor."""
        k = self.k
        Rinv = np.linalg.solve(self._R[:k, :k], np.eye(k))
        return np.einsum("ij,ij->i", Rinv, Rinv)

    def drop_one_rss(self):
        """RSS of the model with each selected column removed in turn."""
        coef = self.coefficients()
        diag = self.inverse_gram_diagonal()
        return self.rss + coef * coef / diag

    def copy(self):
        new = object.__new__(ActiveModel)
        new.data = self.data
        new._Q = self._Q.copy(order="F")
        new._R = self._R.copy()
        new.selected = list(self.selected)
        new.residual = self.residual.copy()
        new.rss = self.rss
        new.rss0 = self.rss0
        new._proj2 = self._proj2.copy()
        return new

    def __repr__(self):
        return f"ActiveModel(selected={self.selected}, rss={self.rss:.6g})"


def init_model(data, capacity=None):
    """Empty model, with the constant column added when ``data.intercept``."""
    model = ActiveModel(data, capacity=capacity)
    for i in data.forced:
        model.add(i)
    return model


def candidate_rss(model, data=None, candidates=None):
    """Map each candidate index to the RSS after adding it to ``model``.

    Collinear candidates map to the current RSS.
    """
    data = model.data if data is None else data
    if candidates is None:
        mask = None
        idx = [j for j in range(1, data.q + 1) if j not in model.selected]
    else:
        idx = [int(j) for j in candidates]
        if any(j in model.selected for j in idx):
            raise ValueError("candidates must not already be selected")
        if any(j < 1 for j in idx):
            raise ValueError("the constant column is not a candidate")
        mask = np.zeros(data.q, dtype=bool)
        mask[np.asarray(idx, dtype=int) - 1] = True
    rss, _ = model.candidate_rss(mask)
    return {j: float(rss[j - 1]) for j in idx}


def add_covariate(model, data=None, index=None):
    """Add ``index`` to ``model`` in place and return it."""
    return model.add(index)


def coefficients(model, data=None):
    """Least-squares coefficients of the selected covariates, keyed by index."""
    coef = model.coefficients()
    return dict(zip(model.selected, coef.tolist()))
