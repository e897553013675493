"""Truncation helpers for sums over product lattices of counts."""

from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlogy

from .errors import DomainError, LatticeSizeError

MAX_LATTICE_TERMS = 10**8
MAX_EXACT_OUTER = 10**5
MAX_TAIL_MASS = 1e-4


def check_tail_mass(tail_mass: float) -> float:
    tail_mass = float(tail_mass)
    if not 0.0 < tail_mass <= MAX_TAIL_MASS:
        raise DomainError(f"tail_mass must lie in (0, {MAX_TAIL_MASS:g}], got {tail_mass:g}")
    return tail_mass


def _first_below(sf, guess: int, tail: float) -> int:
    n = max(int(guess), 0)
    while n > 0 and sf(n - 1) <= tail:
        n -= 1
    while sf(n) > tail:
        n += 1
    return n


def poisson_upper(mean: float, tail: float) -> int:
    """Smallest ``N`` with ``P(X > N) <= tail`` for ``X ~ Poisson(mean)``."""
    dist = stats.poisson(mean)
    guess = dist.isf(tail)
    if not np.isfinite(guess):
        guess = mean + 10.0 * np.sqrt(mean) + 40.0
    return _first_below(dist.sf, guess, tail)


def negbin_upper(size: float, prob: float, tail: float) -> int:
    """Same as :func:`poisson_upper` for the negative binomial ``NB(size, prob)``.

    The pmf is ``Gamma(k+size)/(Gamma(size) k!) prob**size (1-prob)**k``.
    """
    dist = stats.nbinom(size, prob)
    guess = dist.isf(tail)
    if not np.isfinite(guess):
        guess = dist.mean() + 20.0 * dist.std() + 40.0
    return _first_below(dist.sf, guess, tail)


def poisson_logpmf(mean: float, upper: int) -> np.ndarray:
    """``log P(X = k)`` for ``k = 0..upper``."""
    k = np.arange(int(upper) + 1, dtype=float)
    return xlogy(k, mean) - mean - gammaln(k + 1.0)


def lattice_points(upper) -> np.ndarray:
    """All integer points of ``prod_i [0, upper_i]`` as an ``(m, d)`` array, C order."""
    shape = tuple(int(u) + 1 for u in upper)
    return np.indices(shape).reshape(len(shape), -1).T


def lattice_size(upper) -> int:
    n = 1
    for u in upper:
        n *= int(u) + 1
    return n


def require_size(n_terms: int, limit: int = MAX_LATTICE_TERMS, hint: str = "") -> None:
    if n_terms > limit:
        msg = f"lattice of {n_terms:.3g} terms exceeds the limit of {limit:.0e}"
        raise LatticeSizeError(msg + (f"; {hint}" if hint else ""))
