"""Domain types for simultaneous Poisson prediction with unequal exposures.

Observations ``x_i ~ Poisson(r_i * lam_i)`` are used to predict
``y_i ~ Poisson(s_i * lam_i)``.  Priors come in two families:

* ``PowerPrior(beta)``: density ``prod_i lam_i**(beta_i - 1)`` (Jeffreys when
  every ``beta_i = 1/2``).
* ``ShrinkagePrior(alpha, beta, gamma)``: the power prior divided by
  ``(sum_i lam_i / gamma_i)**alpha``.

All values are immutable; vectors are stored as tuples of floats and exposed
as fresh numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import AssumptionError, DimensionError, DomainError

__all__ = [
    "ExposurePair",
    "CountVector",
    "LambdaVector",
    "PowerPrior",
    "ShrinkagePrior",
    "PriorSpec",
    "HarmonicSchedule",
    "jeffreys_prior",
    "theorem_prior",
    "harmonic_time",
    "as_counts",
]


def _float_tuple(values, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must have at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return tuple(float(v) for v in arr)


def _positive_tuple(values, name: str) -> tuple[float, ...]:
    out = _float_tuple(values, name)
    if min(out) <= 0.0:
        raise DomainError(f"every entry of {name} must be > 0, got {out}")
    return out


@dataclass(frozen=True)
class ExposurePair:
    """Known observation exposures ``r`` and prediction exposures ``s``."""

    r: tuple[float, ...]
    s: tuple[float, ...]

    def __post_init__(self):
        r = _positive_tuple(self.r, "r")
        s = _positive_tuple(self.s, "s")
        if len(r) != len(s):
            raise DimensionError(f"r and s differ in length ({len(r)} != {len(s)})")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)

    @property
    def d(self) -> int:
        return len(self.r)

    @property
    def r_arr(self) -> np.ndarray:
        return np.array(self.r)

    @property
    def s_arr(self) -> np.ndarray:
        return np.array(self.s)

    def restrict(self, d: int) -> "ExposurePair":
        """Keep only the first ``d`` coordinates."""
        return ExposurePair(self.r[:d], self.s[:d])


@dataclass(frozen=True)
class CountVector:
    """Nonnegative integer counts (``x``, ``y`` or ``z(tau)``)."""

    counts: tuple[int, ...]

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.counts))
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionError("counts must be a non-empty vector")
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise DomainError(f"counts must be integers, got {self.counts}")
        if np.any(arr < 0):
            raise DomainError(f"counts must be >= 0, got {self.counts}")
        object.__setattr__(self, "counts", tuple(int(v) for v in arr))

    @property
    def d(self) -> int:
        return len(self.counts)

    @property
    def arr(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class LambdaVector:
    """Poisson intensity per unit exposure."""

    lam: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive_tuple(self.lam, "lambda"))

    @property
    def d(self) -> int:
        return len(self.lam)

    @property
    def arr(self) -> np.ndarray:
        return np.array(self.lam)


@dataclass(frozen=True)
class PowerPrior:
    """Improper prior ``prod_i lam_i**(beta_i - 1)``."""

    beta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "beta", _positive_tuple(self.beta, "beta"))

    @property
    def d(self) -> int:
        return len(self.beta)

    @property
    def beta_arr(self) -> np.ndarray:
        return np.array(self.beta)

    @property
    def beta_sum(self) -> float:
        return math.fsum(self.beta)


@dataclass(frozen=True)
class ShrinkagePrior:
    """Improper prior ``prod_i lam_i**(beta_i - 1) / (sum_i lam_i/gamma_i)**alpha``.

    Constructing one with ``alpha == 0`` returns the equivalent ``PowerPrior``
    instead, since the density no longer depends on ``gamma``.
    """

    alpha: float
    beta: tuple[float, ...]
    gamma: tuple[float, ...]

    def __new__(cls, alpha=None, beta=None, gamma=None):
        if alpha is not None and float(alpha) == 0.0:
            if gamma is not None:
                _positive_tuple(gamma, "gamma")
            return PowerPrior(beta)
        return super().__new__(cls)

    def __post_init__(self):
        beta = _positive_tuple(self.beta, "beta")
        gamma = _positive_tuple(self.gamma, "gamma")
        if len(beta) != len(gamma):
            raise DimensionError(f"beta and gamma differ in length ({len(beta)} != {len(gamma)})")
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha < 0.0 or alpha > math.fsum(beta):
            raise DomainError(f"alpha must satisfy 0 <= alpha <= sum(beta), got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self) -> int:
        return len(self.beta)

    @property
    def beta_arr(self) -> np.ndarray:
        return np.array(self.beta)

    @property
    def gamma_arr(self) -> np.ndarray:
        return np.array(self.gamma)

    @property
    def beta_sum(self) -> float:
        return math.fsum(self.beta)

    def require_strict(self) -> None:
        """K-based formulas need ``0 < alpha < sum(beta)``."""
        if not 0.0 < self.alpha < self.beta_sum:
            raise DomainError(
                f"alpha must satisfy 0 < alpha < sum(beta) = {self.beta_sum}, got {self.alpha}"
            )


PriorSpec = Union[PowerPrior, ShrinkagePrior]


@dataclass(frozen=True)
class HarmonicSchedule:
    """Harmonic time: ``1/t_i(tau)`` moves linearly from ``1/r_i`` to ``1/(r_i+s_i)``."""

    exposures: ExposurePair

    @property
    def gamma(self) -> np.ndarray:
        """``1/r_i - 1/(r_i+s_i)``, written as ``s/(r(r+s))`` to avoid cancellation."""
        r, s = self.exposures.r_arr, self.exposures.s_arr
        return s / (r * (r + s))

    def t(self, tau: float) -> np.ndarray:
        return _harmonic_t(self.exposures.r_arr, self.exposures.s_arr, _check_tau(tau))

    def t_dot(self, tau: float) -> np.ndarray:
        return self.gamma * self.t(tau) ** 2


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau must lie in [0, 1], got {tau}")
    return tau


def _harmonic_t(r: np.ndarray, s: np.ndarray, tau: float) -> np.ndarray:
    # Endpoints returned exactly; the closed form is valid for tau < 1 + min(r/s).
    if tau == 0.0:
        return np.array(r, dtype=float)
    if tau == 1.0:
        return r + s
    return r * (r + s) / (r + s * (1.0 - tau))


def harmonic_time(schedule: HarmonicSchedule, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(t(tau), dt/dtau)`` for the harmonic schedule."""
    t = schedule.t(tau)
    return t, schedule.gamma * t**2


def jeffreys_prior(d: int) -> PowerPrior:
    """Jeffreys prior ``prod_i lam_i**(-1/2)`` as a power prior."""
    if int(d) != d or d < 1:
        raise DimensionError(f"dimension must be a positive integer, got {d}")
    return PowerPrior((0.5,) * int(d))


def theorem_prior(exposures: ExposurePair, beta: Sequence[float]) -> ShrinkagePrior:
    """Shrinkage prior with ``alpha = sum(beta) - 1`` and ``gamma_i = 1/r_i - 1/(r_i+s_i)``.

    Its Bayesian predictive density has smaller Kullback-Leibler risk than the
    one based on ``PowerPrior(beta)`` at every ``lam``, provided ``sum(beta) > 1``.
    """
    beta = _positive_tuple(beta, "beta")
    if len(beta) != exposures.d:
        raise DimensionError(f"beta has length {len(beta)}, exposures have d={exposures.d}")
    beta_sum = math.fsum(beta)
    if not beta_sum > 1.0:
        raise AssumptionError(f"the dominating prior requires sum(beta) > 1, got {beta_sum}")
    gamma = HarmonicSchedule(exposures).gamma
    return ShrinkagePrior(beta_sum - 1.0, beta, tuple(gamma))


def as_counts(x, d: int | None = None) -> CountVector:
    """Coerce a sequence or ``CountVector`` to ``CountVector`` and check its length."""
    cv = x if isinstance(x, CountVector) else CountVector(tuple(np.atleast_1d(x)))
    if d is not None and cv.d != d:
        raise DimensionError(f"count vector has length {cv.d}, model has d={d}")
    return cv


def check_dims(*objs) -> int:
    """Return the common dimension of the given objects or raise ``DimensionError``."""
    dims = {o.d for o in objs}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()
