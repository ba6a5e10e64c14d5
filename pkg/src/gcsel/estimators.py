"""scikit-learn wrappers around the selection procedures."""

from itertools import combinations_with_replacement

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .engine import Dataset
from .extensions import HuberLoss, kl_stepwise, robust_stepwise
from .featuregen import interactions, monomial_name
from .graphs import dependency_graph
from .selection import all_subsets, repeated_stepwise, stepwise

__all__ = [
    "GaussianCovariateSelector",
    "GaussianAllSubsets",
    "RepeatedGaussianStepwise",
    "GaussianDependencyGraph",
    "RobustGaussianStepwise",
    "LogisticGaussianStepwise",
    "InteractionFeatures",
]


def _dataset(est, X, y, fit_intercept):
    X, y = validate_data(est, X, y, dtype=np.float64, y_numeric=True)
    names = getattr(est, "feature_names_in_", None)
    names = None if names is None else [str(s) for s in names]
    return Dataset(np.asfortranarray(X), y, names=names, intercept=fit_intercept)


class _LinearSelectorMixin(SelectorMixin):
    """Support mask, coefficients and predictions from a selection trace."""

    def _store(self, trace, q):
        self.trace_ = trace
        self.selected_ = np.array([j - 1 for j in trace.covariates], dtype=int)
        self.coef_ = np.zeros(q)
        self.intercept_ = 0.0
        self.pvalues_ = {}
        for step in trace.steps:
            if step.index == 0:
                self.intercept_ = float(step.coefficient)
            else:
                self.coef_[step.index - 1] = step.coefficient
                self.pvalues_[step.index - 1] = step.adjusted_p

    def _get_support_mask(self):
        check_is_fitted(self, "coef_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.selected_] = True
        return mask

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X @ self.coef_ + self.intercept_


class GaussianCovariateSelector(_LinearSelectorMixin, RegressorMixin, BaseEstimator):
    """Forward selection with exact Gaussian-covariate P-values.

    Parameters
    ----------
    alpha : float, default=0.01
        Cut-off P-value.
    nu : int, default=1
        Order statistic of the Gaussian pool used as yardstick.
    kmax : int, default=1
        Block size of the refined stepwise procedure.
    fit_intercept : bool, default=True
    max_steps : int, optional

    Attributes
    ----------
    trace_ : SelectionTrace
    selected_ : ndarray of int
        Zero-based selected columns in order of inclusion.
    coef_ : ndarray of shape (n_features,)
        Least-squares coefficients of the selected model; zero elsewhere.
    intercept_ : float
    pvalues_ : dict
        Column -> adjusted P-value in the final model.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> X = rng.standard_normal((200, 50))
    >>> y = 2 * X[:, 3] + rng.standard_normal(200)
    >>> GaussianCovariateSelector().fit(X, y).selected_
    array([3])
    """

    def __init__(self, alpha=0.01, nu=1, kmax=1, fit_intercept=True, max_steps=None):
        self.alpha = alpha
        self.nu = nu
        self.kmax = kmax
        self.fit_intercept = fit_intercept
        self.max_steps = max_steps

    def fit(self, X, y):
        data = _dataset(self, X, y, self.fit_intercept)
        trace = stepwise(data, alpha=self.alpha, nu=self.nu, kmax=self.kmax, max_steps=self.max_steps)
        self._store(trace, data.q)
        return self

    def predict(self, X):
        return self.decision_function(X)


class RepeatedGaussianStepwise(_LinearSelectorMixin, BaseEstimator):
    """Repeated stepwise selection; ``rounds_`` holds one trace per round.

    Each selected column carries the coefficient it received in its own
    round; ``coef_`` is zero elsewhere and is not a joint fit.
    """

    def __init__(self, alpha=0.01, nu=1, kmax=1, fit_intercept=True, max_rounds=None):
        self.alpha = alpha
        self.nu = nu
        self.kmax = kmax
        self.fit_intercept = fit_intercept
        self.max_rounds = max_rounds

    def fit(self, X, y):
        data = _dataset(self, X, y, self.fit_intercept)
        self.rounds_ = repeated_stepwise(
            data, alpha=self.alpha, nu=self.nu, kmax=self.kmax, max_rounds=self.max_rounds
        )
        self.selected_ = np.array([j - 1 for tr in self.rounds_ for j in tr.covariates], dtype=int)
        self.round_of_ = {j - 1: r for r, tr in enumerate(self.rounds_) for j in tr.covariates}
        self.coef_ = np.zeros(data.q)
        for tr in self.rounds_:
            for step in tr.steps:
                if step.index:
                    self.coef_[step.index - 1] = step.coefficient
        self.intercept_ = 0.0
        return self


class GaussianAllSubsets(BaseEstimator):
    """All maximal subsets whose members are all significant.

    Attributes
    ----------
    subsets_ : list of SubsetResult
        Ordered by residual sum of squares.
    best_subset_ : tuple of int
        Zero-based columns of the subset with the smallest RSS.
    """

    def __init__(self, alpha=0.01, nu=1, cap=25, fit_intercept=True):
        self.alpha = alpha
        self.nu = nu
        self.cap = cap
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        data = _dataset(self, X, y, self.fit_intercept)
        self.subsets_ = all_subsets(data, alpha=self.alpha, cap=self.cap, nu=self.nu)
        self.n_subsets_ = len(self.subsets_)
        self.best_subset_ = tuple(j - 1 for j in self.subsets_[0].covariates) if self.subsets_ else ()
        return self


class GaussianDependencyGraph(BaseEstimator):
    """Dependency graph of the columns of ``X``.

    Attributes
    ----------
    graph_ : DependencyGraph
    edges_ : list of (int, int)
    adjacency_matrix_ : ndarray of bool, shape (n_features, n_features)
    """

    def __init__(self, alpha=0.01, nu=1, repeated=False, symmetrize=False, fit_intercept=True, n_jobs=None):
        self.alpha = alpha
        self.nu = nu
        self.repeated = repeated
        self.symmetrize = symmetrize
        self.fit_intercept = fit_intercept
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64, ensure_min_features=2)
        self.graph_ = dependency_graph(
            np.asfortranarray(X),
            alpha=self.alpha,
            nu=self.nu,
            repeated=self.repeated,
            symmetrize=self.symmetrize,
            intercept=self.fit_intercept,
            threads=self.n_jobs,
        )
        self.edges_ = list(self.graph_.edges)
        adj = np.zeros((X.shape[1], X.shape[1]), dtype=bool)
        for i, j in self.edges_:
            adj[i, j] = True
            if self.symmetrize:
                adj[j, i] = True
        self.adjacency_matrix_ = adj
        return self


class RobustGaussianStepwise(_LinearSelectorMixin, RegressorMixin, BaseEstimator):
    """Forward selection with Huber M-regression P-values.

    Parameters
    ----------
    alpha : float, default=0.01
    huber_c : float, default=1.0
        Tuning constant of the Huber function; very large values recover
        least squares.
    fit_intercept : bool, default=True
    max_steps : int, optional
    """

    def __init__(self, alpha=0.01, huber_c=1.0, fit_intercept=True, max_steps=None):
        self.alpha = alpha
        self.huber_c = huber_c
        self.fit_intercept = fit_intercept
        self.max_steps = max_steps

    def fit(self, X, y):
        data = _dataset(self, X, y, self.fit_intercept)
        trace = robust_stepwise(data, alpha=self.alpha, loss=HuberLoss(self.huber_c), max_steps=self.max_steps)
        self._store(trace, data.q)
        self.scale_ = float(trace.model.scale)
        return self

    def predict(self, X):
        return self.decision_function(X)


class LogisticGaussianStepwise(_LinearSelectorMixin, ClassifierMixin, BaseEstimator):
    """Forward selection for binary targets with Kullback-Leibler P-values.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
    skipped_ : list of int
        Zero-based columns skipped because they separate the classes.
    """

    def __init__(self, alpha=0.01, fit_intercept=True, max_steps=None):
        self.alpha = alpha
        self.fit_intercept = fit_intercept
        self.max_steps = max_steps

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        self.classes_, y01 = np.unique(y, return_inverse=True)
        if len(self.classes_) != 2:
            raise ValueError(f"expected two classes, got {len(self.classes_)}")
        names = getattr(self, "feature_names_in_", None)
        names = None if names is None else [str(s) for s in names]
        data = Dataset(np.asfortranarray(X), y01.astype(float), names=names, intercept=self.fit_intercept)
        trace = kl_stepwise(data, alpha=self.alpha, max_steps=self.max_steps)
        self._store(trace, data.q)
        self.skipped_ = [j - 1 for j in trace.skipped]
        return self

    def predict_proba(self, X):
        eta = self.decision_function(X)
        p1 = 0.5 * (1.0 + np.tanh(0.5 * eta))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


class InteractionFeatures(TransformerMixin, BaseEstimator):
    """All monomials of total degree ``1..max_order`` in graded-lex order.

    The constant is not emitted; use an estimator with ``fit_intercept=True``.
    """

    def __init__(self, max_order=2):
        self.max_order = max_order

    def fit(self, X, y=None):
        validate_data(self, X, dtype=np.float64)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        names = [str(j + 1) for j in range(X.shape[1])]
        return np.asarray(interactions(X, self.max_order, names=names).x)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "n_features_in_")
        if input_features is None:
            input_features = getattr(self, "feature_names_in_", None)
        if input_features is None:
            input_features = [f"x{j}" for j in range(self.n_features_in_)]
        out = []
        for d in range(1, self.max_order + 1):
            for combo in combinations_with_replacement(range(self.n_features_in_), d):
                out.append(monomial_name(combo, [str(s) for s in input_features]))
        return np.asarray(out, dtype=object)
