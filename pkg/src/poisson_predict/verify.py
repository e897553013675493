"""Seeded property suites behind ``poisson-predict verify``.

Each suite returns a list of :class:`CheckResult`; a suite passes when every
check does.  All randomness is drawn from fixed seeds, so reports are
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kfun import k_eval
from .model import ExposurePair, PowerPrior, ShrinkagePrior, theorem_prior
from .predictive import PredictiveQuery, normalization_check
from .risk import (
    ExactTruncated,
    compare_risks,
    predictive_metric_diag,
    predictive_metric_fd,
    risk_difference_via_integral,
    stein_identity_check,
)

SUITES = ("kfun-identities", "lemma1", "lemma5", "normalization", "metric")

IDENTITY_TOL = 1e-8
NORM_LOW, NORM_HIGH = 1e-6, 1e-12
ROUTE_TOL = 1e-3
METRIC_TOL = 1e-4
METRIC_TAUS = (0.0, 0.37, 1.0 - 1e-5)


@dataclass(frozen=True)
class CheckResult:
    """One check: ``deviation`` is compared against ``tolerance``."""

    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""


def _check(name: str, deviation: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(deviation <= tolerance), float(deviation), float(tolerance), detail)


# ---------------------------------------------------------------------------
# K identities


def random_kargs(n: int = 50, seed: int = 20240611):
    """``n`` random ``(gamma, x, alpha)`` triples over the documented test ranges."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        d = int(rng.choice([1, 2, 3, 5]))
        gamma = rng.uniform(0.1, 10.0, d)
        x = rng.uniform(0.2, 8.0, d)
        alpha = float(rng.uniform(0.0, 0.9) * x.sum())
        alpha = max(alpha, 1e-3)
        out.append((gamma, x, alpha))
    return out


def _k(gamma, x, alpha) -> float:
    return math.exp(k_eval(gamma, x, alpha).log_value)


def k_identities(gamma, x, alpha, b) -> tuple[float, float, float]:
    """Relative residuals of the three recurrences linking ``K`` at shifted arguments.

    1. ``alpha K(x, a) = sum_i x_i / gamma_i K(x + e_i, a + 1)``
    2. ``gamma_i K(x, a) = K(x + e_i, a + 1) + gamma_i K(x + e_i, a)`` (checked for i = 0)
    3. ``sum_i b_i K(x + e_i, a) = sum_i (b. x_i / (a gamma_i) - b_i / gamma_i) K(x + e_i, a + 1)``

    Residuals are scaled by the sum of absolute term magnitudes, which is the
    natural scale when the signed sums in (3) cancel.
    """
    gamma, x, b = (np.asarray(v, dtype=float) for v in (gamma, x, b))
    d = gamma.size
    eye = np.eye(d)
    k0 = _k(gamma, x, alpha)
    k_up = np.array([_k(gamma, x + eye[i], alpha + 1.0) for i in range(d)])
    k_same = np.array([_k(gamma, x + eye[i], alpha) for i in range(d)])

    terms1 = x / gamma * k_up
    res1 = abs(alpha * k0 - math.fsum(terms1)) / (alpha * k0)

    lhs2 = gamma[0] * k0
    rhs2 = k_up[0] + gamma[0] * k_same[0]
    res2 = abs(lhs2 - rhs2) / lhs2

    lhs3 = b * k_same
    rhs3 = (b.sum() * x / (alpha * gamma) - b / gamma) * k_up
    scale = np.abs(lhs3).sum() + np.abs(rhs3).sum()
    res3 = abs(math.fsum(lhs3) - math.fsum(rhs3)) / scale if scale > 0 else 0.0
    return res1, res2, res3


def suite_kfun_identities(n: int = 50, seed: int = 20240611) -> list[CheckResult]:
    rng = np.random.default_rng(seed + 1)
    out = []
    for j, (gamma, x, alpha) in enumerate(random_kargs(n, seed)):
        b = rng.uniform(-2.0, 2.0, gamma.size)
        detail = f"d={gamma.size} alpha={alpha:.6g} x.={x.sum():.6g}"
        for k, res in enumerate(k_identities(gamma, x, alpha, b), start=1):
            out.append(_check(f"identity{k}[{j}]", res, IDENTITY_TOL, detail))
    return out


# ---------------------------------------------------------------------------
# risk routes


LEMMA1_CONFIGS = (
    ("d2-power1", (1.0, 2.0), (2.0, 1.0), (1.0, 1.0), (1.0, 1.0)),
    ("d3-jeffreys", (1.0, 2.0, 3.0), (2.0, 1.0, 4.0), (0.5, 0.5, 0.5), (1.0, 1.0, 1.0)),
)


def route_agreement(r, s, beta, lam, n_tau: int = 16, tail_mass: float = 1e-12):
    """Direct and harmonic-time risk differences (power minus shrinkage) with error bounds."""
    exposures = ExposurePair(tuple(r), tuple(s))
    base = PowerPrior(tuple(beta))
    shrink = theorem_prior(exposures, beta)
    cmp_ = compare_risks(exposures, lam, base, shrink, ExactTruncated(tail_mass))
    integral, err = risk_difference_via_integral(
        exposures, lam, base, shrink, n_tau=n_tau, tail_mass=tail_mass, return_error=True
    )
    return cmp_.diff, cmp_.diff_err, integral, err


def suite_lemma1() -> list[CheckResult]:
    out = []
    for name, r, s, beta, lam in LEMMA1_CONFIGS:
        direct, e1, integral, e2 = route_agreement(r, s, beta, lam)
        gap = abs(direct - integral)
        detail = f"direct={direct:.12g} integral={integral:.12g} bound={e1 + e2:.3g}"
        out.append(_check(f"{name}:within-bounds", gap, e1 + e2, detail))
        out.append(_check(f"{name}:absolute", gap, ROUTE_TOL, detail))
    return out


# ---------------------------------------------------------------------------
# Poisson shift identity


STEIN_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "h=1": lambda xs: np.ones(xs.shape[0]),
    "h=x_1": lambda xs: xs[:, 0].astype(float),
    "h=1/(x.+1)": lambda xs: 1.0 / (xs.sum(axis=1) + 1.0),
}


def suite_lemma5(n_samples: int = 1_000_000, seed: int = 5, n_sigma: float = 4.0) -> list[CheckResult]:
    out = []
    for k, (name, h) in enumerate(STEIN_FUNCTIONS.items()):
        res = stein_identity_check((1.0, 1.0), h, 0, n_samples, seed + k, n_sigma)
        detail = f"lhs={res.lhs:.8g} rhs={res.rhs:.8g} se={res.se:.3g}"
        out.append(_check(name, abs(res.z_score), n_sigma, detail))
    return out


# ---------------------------------------------------------------------------
# predictive normalization


def random_queries(n: int = 20, seed: int = 7) -> list[tuple[PredictiveQuery, PredictiveQuery]]:
    """``n`` random (power, shrinkage) query pairs sharing exposures, counts and interval."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        d = int(rng.integers(1, 4))
        exposures = ExposurePair(tuple(rng.uniform(0.5, 4.0, d)), tuple(rng.uniform(0.5, 4.0, d)))
        x = tuple(int(v) for v in rng.integers(0, 6, d))
        beta = tuple(rng.uniform(0.3, 2.0, d))
        if rng.random() < 0.5:
            tau, delta = 0.0, 1.0
        else:
            tau = float(rng.uniform(0.0, 0.8))
            delta = float(rng.uniform(0.1, 1.0) * (1.0 - tau))
        alpha = float(rng.uniform(0.05, 0.95) * sum(beta))
        gamma = tuple(rng.uniform(0.2, 5.0, d))
        power = PredictiveQuery(exposures, PowerPrior(beta), x, tau, delta)
        shrink = PredictiveQuery(exposures, ShrinkagePrior(alpha, beta, gamma), x, tau, delta)
        out.append((power, shrink))
    return out


def suite_normalization(n: int = 20, seed: int = 7, tail_mass: float = 1e-8) -> list[CheckResult]:
    out = []
    for j, pair in enumerate(random_queries(n, seed)):
        for label, query in zip(("power", "shrink"), pair):
            total = normalization_check(query, tail_mass)
            # deviation outside the window [1 - 1e-6, 1 + 1e-12]; 0 inside
            dev = max(0.0, (1.0 - NORM_LOW) - total, total - (1.0 + NORM_HIGH))
            out.append(_check(f"{label}[{j}]", dev, 0.0, f"d={query.d} sum-1={total - 1.0:.3e}"))
    return out


# ---------------------------------------------------------------------------
# predictive metric


METRIC_CONFIG = ((1.0, 2.0, 3.0), (2.0, 1.0, 4.0), (1.0, 0.5, 2.0))


def suite_metric(delta: float = 1e-6) -> list[CheckResult]:
    r, s, lam = METRIC_CONFIG
    exposures = ExposurePair(r, s)
    diag = predictive_metric_diag(exposures, lam)
    out = []
    for tau in METRIC_TAUS:
        fd = predictive_metric_fd(exposures, lam, tau, delta)
        for i, (a, b) in enumerate(zip(diag, fd)):
            out.append(_check(f"tau={tau:.6g}[{i}]", abs(a - b) / abs(a), METRIC_TOL, f"diag={a:.12g} fd={b:.12g}"))
    return out


def run_suite(name: str) -> list[CheckResult]:
    runners = {
        "kfun-identities": suite_kfun_identities,
        "lemma1": suite_lemma1,
        "lemma5": suite_lemma5,
        "normalization": suite_normalization,
        "metric": suite_metric,
    }
    if name not in runners:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return runners[name]()


__all__ = [
    "SUITES",
    "CheckResult",
    "random_kargs",
    "k_identities",
    "route_agreement",
    "random_queries",
    "run_suite",
]
