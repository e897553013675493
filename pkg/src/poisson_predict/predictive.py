"""Bayesian predictive densities for future counts.

Given counts ``z(tau)`` observed up to harmonic time ``tau``, predict the
increment ``z(tau + delta) - z(tau)``.  With ``t0 = t(tau)`` and
``t1 = t(tau + delta)`` the power-prior predictive is a product of negative
binomials with size ``x_i + beta_i`` and success probability ``t0_i / t1_i``;
the shrinkage-prior predictive reweights it by

    K(t1 * gamma, x + y + beta, alpha) / K(t0 * gamma, x + beta, alpha).

The default ``tau = 0, delta = 1`` is the original problem with
``t0 = r`` and ``t1 = r + s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import lattice
from .errors import DomainError
from .kfun import k_eval, log_k_batch
from .model import (
    CountVector,
    ExposurePair,
    PowerPrior,
    PriorSpec,
    ShrinkagePrior,
    _harmonic_t,
    as_counts,
)

__all__ = [
    "PredictiveQuery",
    "log_pred_power",
    "log_pred_shrink",
    "log_pred",
    "log_pred_many",
    "normalization_check",
    "interval_exposures",
]

_TAU_SLACK = 1e-12


def interval_exposures(exposures: ExposurePair, tau: float, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """``(t(tau), t(tau+delta) - t(tau))`` on the harmonic schedule.

    The increment uses a cancellation-free closed form, so small ``delta`` is
    accurate; ``(0, 1)`` returns ``(r, s)`` exactly.
    """
    r, s = exposures.r_arr, exposures.s_arr
    # use delta itself rather than (tau + delta) - tau, which loses digits
    step = min(delta, 1.0 - tau)
    if tau == 0.0 and step == 1.0:
        return r, s
    t0 = _harmonic_t(r, s, tau)
    inc = r * (r + s) * s * step / ((r + s * (1.0 - tau)) * (r + s * (1.0 - tau - step)))
    return t0, inc


@dataclass(frozen=True)
class PredictiveQuery:
    """Observed counts ``x = z(tau)`` and the target increment over ``(tau, tau+delta]``."""

    exposures: ExposurePair
    prior: PriorSpec
    x: CountVector
    tau: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        d = self.exposures.d
        object.__setattr__(self, "x", as_counts(self.x, d))
        if self.prior.d != d:
            raise DomainError(f"prior has d={self.prior.d}, exposures have d={d}")
        tau, delta = float(self.tau), float(self.delta)
        if not 0.0 <= tau < 1.0:
            raise DomainError(f"tau must lie in [0, 1), got {tau}")
        if not 0.0 < delta <= 1.0 - tau + _TAU_SLACK:
            raise DomainError(f"delta must lie in (0, 1 - tau], got {delta}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "delta", delta)

    @property
    def d(self) -> int:
        return self.exposures.d

    def times(self) -> tuple[np.ndarray, np.ndarray]:
        """``(t0, t1 - t0)``: exposure already seen and exposure to be predicted."""
        return interval_exposures(self.exposures, self.tau, self.delta)

    def with_x(self, x) -> "PredictiveQuery":
        return PredictiveQuery(self.exposures, self.prior, x, self.tau, self.delta)


def _ys(query: PredictiveQuery, y) -> np.ndarray:
    ys = np.atleast_2d(np.asarray(y.counts if isinstance(y, CountVector) else y))
    if ys.shape[1] != query.d:
        raise DomainError(f"y has {ys.shape[1]} coordinates, model has d={query.d}")
    if np.any(ys < 0):
        raise DomainError("counts must be >= 0")
    return ys.astype(float)


def _log_power(query: PredictiveQuery, ys: np.ndarray, beta: np.ndarray) -> np.ndarray:
    t0, inc = query.times()
    t1 = t0 + inc
    a = query.x.arr + beta
    terms = (
        gammaln(a + ys)
        - gammaln(a)
        - gammaln(ys + 1.0)
        + a * np.log(t0 / t1)
        + ys * np.log(inc / t1)
    )
    return terms.sum(axis=1)


def _log_k_ratio(query: PredictiveQuery, ys: np.ndarray, prior: ShrinkagePrior) -> np.ndarray:
    prior.require_strict()
    t0, inc = query.times()
    t1 = t0 + inc
    beta, gamma = prior.beta_arr, prior.gamma_arr
    base = query.x.arr + beta
    den = k_eval(t0 * gamma, base, prior.alpha).log_value
    if ys.shape[0] == 1:
        num = np.array([k_eval(t1 * gamma, base + ys[0], prior.alpha).log_value])
    else:
        num, _ = log_k_batch(t1 * gamma, base + ys, prior.alpha)
    return num - den


def log_pred_power(query: PredictiveQuery, y) -> float:
    """``log p_beta(y | x)`` for a power prior."""
    if not isinstance(query.prior, PowerPrior):
        raise DomainError("log_pred_power needs a PowerPrior")
    return float(_log_power(query, _ys(query, y), query.prior.beta_arr)[0])


def log_pred_shrink(query: PredictiveQuery, y) -> float:
    """``log p_{alpha,beta,gamma}(y | x)``; needs ``0 < alpha < sum(beta)``."""
    prior = query.prior
    if not isinstance(prior, ShrinkagePrior):
        raise DomainError("log_pred_shrink needs a ShrinkagePrior")
    ys = _ys(query, y)
    return float(_log_power(query, ys, prior.beta_arr)[0] + _log_k_ratio(query, ys, prior)[0])


def log_pred(query: PredictiveQuery, y) -> float:
    """Log predictive probability for either prior family."""
    if isinstance(query.prior, ShrinkagePrior):
        return log_pred_shrink(query, y)
    return log_pred_power(query, y)


def log_pred_many(query: PredictiveQuery, ys) -> np.ndarray:
    """Vectorized :func:`log_pred` over the rows of ``ys``."""
    ys = _ys(query, ys)
    out = _log_power(query, ys, query.prior.beta_arr)
    if isinstance(query.prior, ShrinkagePrior):
        out = out + _log_k_ratio(query, ys, query.prior)
    return out


def _envelope(query: PredictiveQuery) -> float:
    """Upper bound on the K-ratio reweighting over all ``y``.

    ``K`` decreases in every exponent, so the ratio is largest at ``y = 0``.
    """
    prior = query.prior
    if not isinstance(prior, ShrinkagePrior):
        return 1.0
    return max(1.0, math.exp(_log_k_ratio(query, np.zeros((1, query.d)), prior)[0]))


def predictive_upper(query: PredictiveQuery, tail_mass: float) -> np.ndarray:
    """Per-coordinate cutoffs leaving at most ``tail_mass`` predictive mass outside."""
    t0, inc = query.times()
    share = tail_mass / (query.d * _envelope(query))
    size = query.x.arr + query.prior.beta_arr
    return np.array(
        [lattice.negbin_upper(n, p, share) for n, p in zip(size, t0 / (t0 + inc))], dtype=np.int64
    )


def normalization_check(query: PredictiveQuery, tail_mass: float) -> float:
    """Total predictive probability over a truncated lattice.

    Cutoffs are negative-binomial quantiles of the power-prior factor, tightened
    by the largest possible K-ratio for shrinkage priors, so the omitted mass is
    at most ``tail_mass`` and the result lies in ``[1 - tail_mass, 1]`` up to
    rounding.
    """
    tail_mass = lattice.check_tail_mass(tail_mass)
    upper = predictive_upper(query, tail_mass)
    lattice.require_size(lattice.lattice_size(upper))
    logp = log_pred_many(query, lattice.lattice_points(upper))
    return math.fsum(np.exp(logp))
