"""Covariate selection with exact Gaussian-covariate P-values.

A candidate covariate is accepted when it reduces the residual sum of
squares by more than the best of the remaining candidates would be
expected to if they were replaced by independent standard Gaussian noise.
"""

__version__ = "0.1.0"

from .engine import ActiveModel, Dataset, add_covariate, candidate_rss, coefficients, init_model
from .equivalence import EquivalenceResult, equiv_contains, equiv_radius
from .estimators import (
    GaussianAllSubsets,
    GaussianCovariateSelector,
    GaussianDependencyGraph,
    InteractionFeatures,
    LogisticGaussianStepwise,
    RepeatedGaussianStepwise,
    RobustGaussianStepwise,
)
from .exceptions import (
    CapExceededError,
    CollinearityError,
    ConvergenceError,
    DataError,
    DomainError,
    GcselError,
    SeparationError,
)
from .extensions import (
    HuberLoss,
    kl_logistic_pvalue,
    kl_stepwise,
    logistic_fit,
    m_fit,
    m_step_pvalue,
    nonlinear_fit,
    nonlinear_step_pvalue,
    robust_stepwise,
)
from .featuregen import interaction_count, interactions, lag_matrix, trig_basis, trig_period
from .graphs import DependencyGraph, dependency_graph
from .io import ingest_csv
from .montecarlo import (
    SimConfig,
    SimReport,
    correlated_error_study,
    fsimords,
    mc_pvalue_oracle,
    random_graph_bench,
    tutorial1,
)
from .pvalues import leave_one_out_pvalues, pf_from_pg, pg_theorem1, pg_theorem1_f, step_pvalue
from .selection import SelectionTrace, Step, SubsetResult, all_subsets, repeated_stepwise, stepwise

__all__ = [
    "ActiveModel",
    "CapExceededError",
    "CollinearityError",
    "ConvergenceError",
    "DataError",
    "Dataset",
    "DependencyGraph",
    "DomainError",
    "EquivalenceResult",
    "GaussianAllSubsets",
    "GaussianCovariateSelector",
    "GaussianDependencyGraph",
    "GcselError",
    "HuberLoss",
    "InteractionFeatures",
    "LogisticGaussianStepwise",
    "RepeatedGaussianStepwise",
    "RobustGaussianStepwise",
    "SelectionTrace",
    "SeparationError",
    "SimConfig",
    "SimReport",
    "Step",
    "SubsetResult",
    "add_covariate",
    "all_subsets",
    "candidate_rss",
    "coefficients",
    "correlated_error_study",
    "dependency_graph",
    "equiv_contains",
    "equiv_radius",
    "fsimords",
    "ingest_csv",
    "init_model",
    "interaction_count",
    "interactions",
    "kl_logistic_pvalue",
    "kl_stepwise",
    "lag_matrix",
    "leave_one_out_pvalues",
    "logistic_fit",
    "m_fit",
    "m_step_pvalue",
    "mc_pvalue_oracle",
    "nonlinear_fit",
    "nonlinear_step_pvalue",
    "pf_from_pg",
    "pg_theorem1",
    "pg_theorem1_f",
    "random_graph_bench",
    "repeated_stepwise",
    "robust_stepwise",
    "step_pvalue",
    "stepwise",
    "trig_basis",
    "trig_period",
    "tutorial1",
]
