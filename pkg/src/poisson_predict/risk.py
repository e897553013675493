"""Kullback-Leibler risk of Bayesian predictive densities.

Two routes to the same numbers:

* Direct: ``risk(lam) = E_x KL(p(.|lam) || p_hat(.|x))`` with the inner sum
  over ``y`` done exactly on a truncated lattice and the outer expectation over
  ``x`` either summed exactly or estimated by Monte Carlo.
* Harmonic time: the risk is the ``tau``-integral over ``[0, 1]`` of

      E_z sum_i dt_i/dtau * (lhat_i - lam_i - lam_i log(lhat_i / lam_i)),

  ``z ~ Poisson(t(tau) lam)``, ``lhat`` the posterior mean.  Differences of
  risks between two priors are computed with Gauss-Legendre nodes in ``tau``.

The inner ``y``-expectations for every ``x`` in a box come from a single table
of ``log K`` over ``x + y``, correlated axis by axis with the Poisson pmf of
``y``.  The cost is then one K table per (lam, prior), independent of how many
``x`` are visited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gammaln

from . import lattice
from . import rng as rngmod
from .errors import DomainError, LatticeSizeError
from .estimation import posterior_mean_lattice
from .kfun import log_k_lattice
from .model import (
    ExposurePair,
    HarmonicSchedule,
    LambdaVector,
    PowerPrior,
    PriorSpec,
    ShrinkagePrior,
    _harmonic_t,
    as_counts,
    check_dims,
    harmonic_time,
)
from .predictive import PredictiveQuery, interval_exposures, log_pred_many

__all__ = [
    "ExactTruncated",
    "MonteCarloX",
    "RiskQuery",
    "RiskReport",
    "Comparison",
    "IntegrandQuery",
    "kl_predictive",
    "risk_eval",
    "compare_risks",
    "interval_risk",
    "integrand_eval",
    "integrand_report",
    "integrand_difference",
    "risk_difference_via_integral",
    "predictive_metric_diag",
    "predictive_metric_fd",
    "SteinResult",
    "stein_identity_check",
]


@dataclass(frozen=True)
class ExactTruncated:
    tail_mass: float = 1e-10

    def __post_init__(self):
        lattice.check_tail_mass(self.tail_mass)

    def describe(self) -> dict:
        return {"method": "exact", "tail_mass": self.tail_mass}


@dataclass(frozen=True)
class MonteCarloX:
    n_samples: int
    seed: int
    tail_mass_y: float = 1e-10

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError(f"n_samples must be a positive integer, got {self.n_samples}")
        rngmod.check_seed(self.seed)
        lattice.check_tail_mass(self.tail_mass_y)

    def describe(self) -> dict:
        return {"method": "mc", "n_samples": self.n_samples, "seed": self.seed, "tail_mass": self.tail_mass_y}


Method = Union[ExactTruncated, MonteCarloX]


def _lam(lam) -> LambdaVector:
    return lam if isinstance(lam, LambdaVector) else LambdaVector(tuple(np.atleast_1d(lam)))


@dataclass(frozen=True)
class RiskQuery:
    exposures: ExposurePair
    lam: LambdaVector
    prior: PriorSpec
    method: Method = field(default_factory=ExactTruncated)

    def __post_init__(self):
        object.__setattr__(self, "lam", _lam(self.lam))
        check_dims(self.exposures, self.lam, self.prior)


@dataclass(frozen=True)
class RiskReport:
    """Risk in nats with its truncation bound (exact) or standard error (Monte Carlo)."""

    risk: float
    err_bound: float
    n_k_evals: int
    method: Method


@dataclass(frozen=True)
class Comparison:
    """Risks of two priors at one ``lam`` and their difference ``a - b``.

    Under Monte Carlo both risks use the same ``x`` samples, so ``diff_err`` is
    the standard error of the paired differences.
    """

    a: RiskReport
    b: RiskReport
    diff: float
    diff_err: float


@dataclass(frozen=True)
class IntegrandQuery:
    exposures: ExposurePair
    lam: LambdaVector
    prior: PriorSpec
    tau: float
    tail_mass: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "lam", _lam(self.lam))
        check_dims(self.exposures, self.lam, self.prior)
        if not 0.0 <= self.tau <= 1.0:
            raise DomainError(f"tau must lie in [0, 1], got {self.tau}")
        lattice.check_tail_mass(self.tail_mass)


# ---------------------------------------------------------------------------
# direct route


def _log_pmf_box(means: np.ndarray, upper: np.ndarray) -> list[np.ndarray]:
    return [lattice.poisson_logpmf(m, u) for m, u in zip(means, upper)]


def _outer_product(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(())
    for v in vectors:
        out = np.multiply.outer(out, v)
    return out


def _along(v: np.ndarray, axis: int, d: int) -> np.ndarray:
    shape = [1] * d
    shape[axis] = v.size
    return v.reshape(shape)


def _correlate_axes(table: np.ndarray, weights: Sequence[np.ndarray], out_shape) -> np.ndarray:
    """``out[x] = sum_y prod_i w_i[y_i] * table[x + y]`` for ``x`` in ``out_shape``."""
    cur = table
    for axis, w in enumerate(weights):
        n = out_shape[axis]
        acc = np.zeros(cur.shape[:axis] + (n,) + cur.shape[axis + 1:])
        for k, wk in enumerate(w):
            idx = [slice(None)] * cur.ndim
            idx[axis] = slice(k, k + n)
            acc += wk * cur[tuple(idx)]
        cur = acc
    return cur


def _kl_boxes(r, s, lam, priors: Sequence[PriorSpec], x_upper, tail_mass):
    """KL(p(.|lam) || p_hat(.|x)) for every ``x`` in ``prod [0, x_upper]``, per prior.

    Returns ``(kl_list, inner_err_list, n_k_evals)``; the error arrays bound the
    contribution of ``y`` outside the truncated lattice.
    """
    d = r.size
    x_upper = np.asarray(x_upper, dtype=np.int64)
    y_upper = np.array([lattice.poisson_upper(m, tail_mass / d) for m in s * lam], dtype=np.int64)
    lattice.require_size(
        lattice.lattice_size(x_upper + y_upper),
        hint="reduce the lattice or use Monte Carlo over x",
    )
    logpy = _log_pmf_box(s * lam, y_upper)
    py = [np.exp(v) for v in logpy]
    mass = np.array([v.sum() for v in py])
    m_total = float(np.prod(mass))
    others = np.array([np.prod(np.delete(mass, i)) for i in range(d)])
    e_logp = float(sum(o * np.dot(p, lp) for o, p, lp in zip(others, py, logpy)))
    log_p_edge = float(sum(lp[-1] for lp in logpy))

    x_shape = tuple(int(u) + 1 for u in x_upper)
    log_t0 = np.log(r / (r + s))
    log_inc = np.log(s / (r + s))
    kls, errs, n_k = [], [], 0
    for prior in priors:
        beta = prior.beta_arr
        e_logq = np.zeros(x_shape)
        q_edge = np.zeros(x_shape)
        for i in range(d):
            a = np.arange(x_upper[i] + 1, dtype=float)[:, None] + beta[i]
            y = np.arange(y_upper[i] + 1, dtype=float)[None, :]
            ell = gammaln(a + y) - gammaln(a) - gammaln(y + 1.0) + a * log_t0[i] + y * log_inc[i]
            e_logq = e_logq + others[i] * _along(ell @ py[i], i, d)
            q_edge = q_edge + _along(ell[:, -1], i, d)
        if isinstance(prior, ShrinkagePrior):
            prior.require_strict()
            gamma = prior.gamma_arr
            num, _ = log_k_lattice((r + s) * gamma, beta, prior.alpha, x_upper + y_upper)
            den, _ = log_k_lattice(r * gamma, beta, prior.alpha, x_upper)
            n_k += num.size + den.size
            e_logq = e_logq + _correlate_axes(num, py, x_shape) - m_total * den
            q_edge = q_edge + num[tuple(slice(int(u), None) for u in y_upper)] - den
        kls.append(e_logp - e_logq)
        errs.append(2.0 * (1.0 - m_total) * (np.abs(log_p_edge - q_edge) + 1.0))
    return kls, errs, n_k


def kl_predictive(
    exposures: ExposurePair,
    lam,
    prior: PriorSpec,
    x,
    tail_mass: float = 1e-10,
    tau: float = 0.0,
    delta: float = 1.0,
    predictive: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    """``sum_y p(y|lam) log(p(y|lam) / p_hat(y|x))`` over a truncated ``y`` lattice.

    ``y`` is the increment over ``(tau, tau + delta]``; the default is the
    original problem.  ``predictive`` replaces the Bayesian predictive with any
    vectorized log-pmf ``ys -> log p_hat(ys)``.
    """
    lam = _lam(lam)
    d = check_dims(exposures, lam, prior)
    tail_mass = lattice.check_tail_mass(tail_mass)
    query = PredictiveQuery(exposures, prior, as_counts(x, d), tau, delta)
    _, inc = query.times()
    means = inc * lam.arr
    upper = [lattice.poisson_upper(m, tail_mass / d) for m in means]
    lattice.require_size(lattice.lattice_size(upper))
    ys = lattice.lattice_points(upper)
    logp = sum(lattice.poisson_logpmf(m, u)[ys[:, i]] for i, (m, u) in enumerate(zip(means, upper)))
    logq = predictive(ys) if predictive is not None else log_pred_many(query, ys)
    return math.fsum(np.exp(logp) * (logp - logq))


def _x_box_exact(r, lam, tail_mass):
    d = r.size
    upper = np.array([lattice.poisson_upper(m, tail_mass / d) for m in r * lam], dtype=np.int64)
    lattice.require_size(
        lattice.lattice_size(upper),
        lattice.MAX_EXACT_OUTER,
        hint="use MonteCarloX for the outer expectation",
    )
    return upper


def _exact(r, s, lam, priors, tail_mass):
    upper = _x_box_exact(r, lam, tail_mass)
    px = _outer_product([np.exp(v) for v in _log_pmf_box(r * lam, upper)])
    missing = max(0.0, 1.0 - float(px.sum()))
    kls, errs, n_k = _kl_boxes(r, s, lam, priors, upper, tail_mass)
    out = []
    for kl, err in zip(kls, errs):
        risk = math.fsum((px * kl).ravel())
        bound = math.fsum((px * err).ravel()) + 2.0 * missing * (float(np.abs(kl).max()) + 1.0)
        out.append((risk, bound, kl))
    return out, px, n_k


def _mc(r, s, lam, priors, method: MonteCarloX):
    xs = rngmod.sample_poisson(r * lam, method.n_samples, method.seed)
    upper = xs.max(axis=0)
    kls, errs, n_k = _kl_boxes(r, s, lam, priors, upper, method.tail_mass_y)
    idx = tuple(xs.T)
    samples = [kl[idx] for kl in kls]
    inner = [float(err[idx].mean()) for err in errs]
    return samples, inner, n_k


def _se(values: np.ndarray) -> float:
    if values.size < 2:
        return math.inf
    return float(values.std(ddof=1) / math.sqrt(values.size))


def _run(exposures: ExposurePair, lam: LambdaVector, priors, method: Method):
    r, s, lv = exposures.r_arr, exposures.s_arr, lam.arr
    if isinstance(method, ExactTruncated):
        res, _, n_k = _exact(r, s, lv, priors, method.tail_mass)
        reports = [RiskReport(risk, bound, n_k, method) for risk, bound, _ in res]
        return reports, None
    samples, inner, n_k = _mc(r, s, lv, priors, method)
    reports = [
        RiskReport(float(v.mean()), _se(v) + e, n_k, method) for v, e in zip(samples, inner)
    ]
    return reports, (samples, inner)


def risk_eval(query: RiskQuery) -> RiskReport:
    """Kullback-Leibler risk of the Bayesian predictive density for ``query.prior``.

    Exact outer sums are limited to ``1e5`` lattice points; beyond that a
    ``LatticeSizeError`` points to ``MonteCarloX``.  Monte Carlo results depend
    only on the seed.
    """
    reports, _ = _run(query.exposures, query.lam, [query.prior], query.method)
    return reports[0]


def compare_risks(
    exposures: ExposurePair, lam, prior_a: PriorSpec, prior_b: PriorSpec, method: Method
) -> Comparison:
    """Risks of two priors on shared lattices (and shared samples under Monte Carlo)."""
    lam = _lam(lam)
    check_dims(exposures, lam, prior_a, prior_b)
    (rep_a, rep_b), mc = _run(exposures, lam, [prior_a, prior_b], method)
    if mc is None:
        return Comparison(rep_a, rep_b, rep_a.risk - rep_b.risk, rep_a.err_bound + rep_b.err_bound)
    (sa, sb), (ia, ib) = mc
    paired = sa - sb
    return Comparison(rep_a, rep_b, float(paired.mean()), _se(paired) + ia + ib)


def interval_risk(
    exposures: ExposurePair, lam, prior: PriorSpec, tau: float, delta: float, tail_mass: float = 1e-12
) -> RiskReport:
    """Risk of predicting ``z(tau + delta) - z(tau)`` from ``z(tau)`` (exact sums).

    The prior is kept as given (in particular its ``gamma``).
    """
    t0, inc = interval_exposures(exposures, tau, delta)
    sub = ExposurePair(tuple(t0), tuple(inc))
    return risk_eval(RiskQuery(sub, lam, prior, ExactTruncated(tail_mass)))


# ---------------------------------------------------------------------------
# harmonic-time route


def _bregman(est: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # lam * (u - 1 - log u), u = est / lam; >= 0 with equality iff est == lam
    dev = est / lam - 1.0
    return lam * (dev - np.log1p(dev))


def _integrand_boxes(exposures, lam, priors, tau, tail_mass, estimator=None):
    sched = HarmonicSchedule(exposures)
    t, tdot = harmonic_time(sched, tau)
    d = t.size
    upper = np.array([lattice.poisson_upper(m, tail_mass / d) for m in t * lam], dtype=np.int64)
    lattice.require_size(lattice.lattice_size(upper + 1))
    pz = _outer_product([np.exp(v) for v in _log_pmf_box(t * lam, upper)])
    missing = max(0.0, 1.0 - float(pz.sum()))
    vals = []
    for prior in priors:
        if estimator is not None:
            est = estimator(np.indices(pz.shape), t)
        else:
            est, _ = posterior_mean_lattice(t, prior, upper)
        vals.append((_bregman(est, lam) * tdot).sum(axis=-1))
    return pz, missing, vals


def _edge_bound(missing: float, val: np.ndarray) -> float:
    return 2.0 * missing * (float(np.abs(val).max()) + 1.0)


def integrand_report(query: IntegrandQuery, estimator=None) -> tuple[float, float]:
    """Integrand value at ``query.tau`` and its truncation error bound."""
    pz, missing, (val,) = _integrand_boxes(
        query.exposures, query.lam.arr, [query.prior], query.tau, query.tail_mass, estimator
    )
    return math.fsum((pz * val).ravel()), _edge_bound(missing, val)


def integrand_eval(query: IntegrandQuery, estimator=None) -> float:
    """``E_z sum_i dt_i * (lhat_i - lam_i - lam_i log(lhat_i/lam_i))`` at ``query.tau``.

    ``estimator(z_grid, t)`` overrides the posterior mean; ``z_grid`` has shape
    ``(d, *box)`` and the result must have shape ``(*box, d)``.
    """
    return integrand_report(query, estimator)[0]


def integrand_difference(
    exposures: ExposurePair, lam, prior_a: PriorSpec, prior_b: PriorSpec, tau: float, tail_mass: float = 1e-10
) -> tuple[float, float]:
    """Integrand of ``prior_a`` minus that of ``prior_b`` on a shared lattice, with error bound."""
    lam = _lam(lam)
    check_dims(exposures, lam, prior_a, prior_b)
    pz, missing, (va, vb) = _integrand_boxes(exposures, lam.arr, [prior_a, prior_b], tau, tail_mass)
    diff = va - vb
    return math.fsum((pz * diff).ravel()), _edge_bound(missing, va) + _edge_bound(missing, vb)


def _tau_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def risk_difference_via_integral(
    exposures: ExposurePair,
    lam,
    prior_a: PriorSpec,
    prior_b: PriorSpec,
    n_tau: int = 16,
    tail_mass: float = 1e-10,
    return_error: bool = False,
):
    """``risk(prior_a) - risk(prior_b)`` as a Gauss-Legendre integral over harmonic time.

    With ``return_error`` the result is ``(value, err)``, where ``err`` adds the
    truncation bounds to the gap between this rule and one with half the nodes.
    """
    if int(n_tau) != n_tau or n_tau < 8:
        raise DomainError(f"n_tau must be an integer >= 8, got {n_tau}")
    tail_mass = lattice.check_tail_mass(tail_mass)

    def integral(n):
        nodes, weights = _tau_rule(n)
        parts = [integrand_difference(exposures, lam, prior_a, prior_b, tau, tail_mass) for tau in nodes]
        value = math.fsum(w * v for w, (v, _) in zip(weights, parts))
        return value, math.fsum(w * e for w, (_, e) in zip(weights, parts))

    value, trunc = integral(int(n_tau))
    if not return_error:
        return value
    coarse, _ = integral(int(n_tau) // 2)
    return value, trunc + abs(value - coarse)


# ---------------------------------------------------------------------------
# infinitesimal predictive metric


def predictive_metric_diag(exposures: ExposurePair, lam) -> np.ndarray:
    """Diagonal of the infinitesimal predictive metric, ``t_i**2 / (dt_i * lam_i)``.

    On the harmonic schedule this equals ``r_i (r_i + s_i) / (s_i lam_i)`` for
    every ``tau``.
    """
    lam = _lam(lam)
    check_dims(exposures, lam)
    return 1.0 / (HarmonicSchedule(exposures).gamma * lam.arr)


def predictive_metric_fd(exposures: ExposurePair, lam, tau: float, delta: float = 1e-5) -> np.ndarray:
    """``delta * g_ii**2 / gtilde_ii`` at finite ``delta`` (the metric's defining limit).

    ``g`` is the Fisher information of ``z(tau)`` and ``gtilde`` that of the
    increment over ``delta``.  Near ``tau = 1`` a backward increment is used.
    """
    lam = _lam(lam).arr
    r, s = exposures.r_arr, exposures.s_arr
    if tau + delta <= 1.0:
        t = _harmonic_t(r, s, tau)
        _, inc = interval_exposures(exposures, tau, delta)
    else:
        t = _harmonic_t(r, s, tau)
        t_prev = _harmonic_t(r, s, tau - delta)
        inc = t - t_prev
    g = t / lam
    gtilde = inc / lam
    return delta * g**2 / gtilde


# ---------------------------------------------------------------------------
# Poisson shift identity


@dataclass(frozen=True)
class SteinResult:
    passed: bool
    z_score: float
    lhs: float
    rhs: float
    se: float


def stein_identity_check(
    lam, h: Callable[[np.ndarray], np.ndarray], i: int, n_samples: int, seed: int, n_sigma: float = 4.0
) -> SteinResult:
    """Monte Carlo check of ``E[x_i h(x)] = lam_i E[h(x + e_i)]`` for ``x ~ Poisson(lam)``.

    ``h`` maps an ``(n, d)`` integer array to ``(n,)`` values.  Both sides use
    the same draws; the test statistic is the paired mean over its standard
    error.
    """
    lam = _lam(lam).arr
    if not 0 <= i < lam.size:
        raise DomainError(f"coordinate index {i} out of range for d={lam.size}")
    xs = rngmod.sample_poisson(lam, n_samples, seed)
    shifted = xs.copy()
    shifted[:, i] += 1
    left = xs[:, i] * np.asarray(h(xs), dtype=float)
    right = lam[i] * np.asarray(h(shifted), dtype=float)
    paired = left - right
    se = _se(paired)
    mean = float(paired.mean())
    if se == 0.0:
        z = 0.0 if mean == 0.0 else math.inf
    else:
        z = mean / se
    return SteinResult(abs(z) <= n_sigma, z, float(left.mean()), float(right.mean()), se)
