"""Autoregressive Hilbertian processes of order one: simulation, estimation, studies."""

from arh1.estimators import (
    AssumptionError,
    EmpiricalOperators,
    EstimatedRho,
    TruncationPlan,
    TruncationRule,
    componentwise_estimator,
    diagonal_svd_estimator,
    empirical_operators,
    select_truncation,
)
from arh1.harness import StudyConfig, run_study
from arh1.model import ARHModel, Trajectory, make_model, simulate, stationary_law

__version__ = "0.1.0"
