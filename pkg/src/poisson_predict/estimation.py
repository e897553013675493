"""Posterior means of ``lam`` given ``z ~ Poisson(t * lam)``.

These are the estimators that drive the harmonic-time risk integrand:
predicting an infinitesimal increment with a Bayesian predictive density
amounts to plugging in the posterior mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kfun import log_k_lattice, shrink_factor
from .model import CountVector, LambdaVector, PowerPrior, PriorSpec, ShrinkagePrior, _positive_tuple, as_counts

__all__ = [
    "EstimateQuery",
    "posterior_mean_power",
    "posterior_mean_shrink",
    "posterior_mean",
    "posterior_mean_lattice",
]


@dataclass(frozen=True)
class EstimateQuery:
    """Exposures ``t`` (typically ``t(tau)``), prior and observed counts ``z``."""

    t: tuple[float, ...]
    prior: PriorSpec
    z: CountVector

    def __post_init__(self):
        t = _positive_tuple(self.t, "t")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "z", as_counts(self.z, len(t)))
        if self.prior.d != len(t):
            raise DomainError(f"prior has d={self.prior.d}, t has d={len(t)}")


def posterior_mean_power(query: EstimateQuery) -> LambdaVector:
    """``(z_i + beta_i) / t_i``."""
    if not isinstance(query.prior, PowerPrior):
        raise DomainError("posterior_mean_power needs a PowerPrior")
    return LambdaVector(tuple((query.z.arr + query.prior.beta_arr) / np.array(query.t)))


def posterior_mean_shrink(query: EstimateQuery) -> LambdaVector:
    """Power-prior posterior mean times the shrinkage factor ``f_i(t*gamma, z+beta, alpha)``."""
    prior = query.prior
    if not isinstance(prior, ShrinkagePrior):
        raise DomainError("posterior_mean_shrink needs a ShrinkagePrior")
    prior.require_strict()
    t = np.array(query.t)
    a = query.z.arr + prior.beta_arr
    gt = t * prior.gamma_arr
    f = np.array([shrink_factor(gt, a, prior.alpha, i) for i in range(len(t))])
    return LambdaVector(tuple(a / t * f))


def posterior_mean(query: EstimateQuery) -> LambdaVector:
    if isinstance(query.prior, ShrinkagePrior):
        return posterior_mean_shrink(query)
    return posterior_mean_power(query)


def posterior_mean_lattice(t, prior: PriorSpec, upper) -> tuple[np.ndarray, float]:
    """Posterior means at every ``z`` in ``prod_i [0, upper_i]``.

    Returns an array shaped ``(*box, d)`` and the worst K error estimate
    (zero for power priors).  One K table on the box grown by one in every
    direction serves all ``d`` shrinkage factors.
    """
    t = np.asarray(t, dtype=float)
    upper = np.asarray(upper, dtype=np.int64)
    d = t.size
    shape = tuple(int(u) + 1 for u in upper)
    z = np.indices(shape).astype(float)
    beta = prior.beta_arr
    base = np.stack([(z[i] + beta[i]) / t[i] for i in range(d)], axis=-1)
    if not isinstance(prior, ShrinkagePrior):
        return base, 0.0
    prior.require_strict()
    table, err = log_k_lattice(t * prior.gamma_arr, beta, prior.alpha, upper + 1)
    inner = table[tuple(slice(0, n) for n in shape)]
    out = np.empty_like(base)
    for i in range(d):
        shifted = table[tuple(slice(1, n + 1) if j == i else slice(0, n) for j, n in enumerate(shape))]
        out[..., i] = base[..., i] * np.exp(shifted - inner)
    return out, err
