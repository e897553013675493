"""Bayesian prediction of Poisson counts observed under different exposures.

Predictive densities under power and shrinkage priors, posterior-mean
estimators, Kullback-Leibler risk evaluation and the generalized beta
integral ``K`` that ties them together.
"""

__version__ = "0.1.0"

from .errors import (
    AssumptionError,
    DimensionError,
    DivergentIntegralError,
    DomainError,
    LatticeSizeError,
    PoissonPredictError,
)
from .estimation import EstimateQuery, posterior_mean, posterior_mean_power, posterior_mean_shrink
from .kfun import KArgs, LogK, k_eval, shrink_factor
from .model import (
    CountVector,
    ExposurePair,
    HarmonicSchedule,
    LambdaVector,
    PowerPrior,
    ShrinkagePrior,
    harmonic_time,
    jeffreys_prior,
    theorem_prior,
)
from .predictive import PredictiveQuery, log_pred, log_pred_power, log_pred_shrink, normalization_check
from .risk import (
    ExactTruncated,
    MonteCarloX,
    RiskQuery,
    RiskReport,
    compare_risks,
    integrand_eval,
    predictive_metric_diag,
    risk_difference_via_integral,
    risk_eval,
    stein_identity_check,
)

__all__ = [
    "__version__",
    "AssumptionError",
    "DimensionError",
    "DivergentIntegralError",
    "DomainError",
    "LatticeSizeError",
    "PoissonPredictError",
    "EstimateQuery",
    "posterior_mean",
    "posterior_mean_power",
    "posterior_mean_shrink",
    "KArgs",
    "LogK",
    "k_eval",
    "shrink_factor",
    "CountVector",
    "ExposurePair",
    "HarmonicSchedule",
    "LambdaVector",
    "PowerPrior",
    "ShrinkagePrior",
    "harmonic_time",
    "jeffreys_prior",
    "theorem_prior",
    "PredictiveQuery",
    "log_pred",
    "log_pred_power",
    "log_pred_shrink",
    "normalization_check",
    "ExactTruncated",
    "MonteCarloX",
    "RiskQuery",
    "RiskReport",
    "compare_risks",
    "integrand_eval",
    "predictive_metric_diag",
    "risk_difference_via_integral",
    "risk_eval",
    "stein_identity_check",
]
