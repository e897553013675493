"""Reproducible random streams.

Streams come from the Philox-4x64 counter-based generator.  The 128-bit key
packs the user seed (low 64 bits) with a stream index (high 64 bits), so
stream ``k`` of seed ``s`` is the same on every platform and independent of
how work is split between threads.  Monte Carlo samples are drawn in fixed
blocks of ``BLOCK`` rows, block ``k`` from stream ``k``.

Poisson variates are produced by inversion against a tabulated CDF, so each
variate consumes exactly one uniform.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import DomainError

BLOCK = 8192
_MASK64 = (1 << 64) - 1


def check_seed(seed: int) -> int:
    if int(seed) != seed or not 0 <= seed <= _MASK64:
        raise DomainError(f"seed must be an integer in [0, 2**64), got {seed}")
    return int(seed)


def stream(seed: int, index: int) -> np.random.Generator:
    """Generator for stream ``index`` of ``seed``."""
    key = check_seed(seed) | (int(index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(seed: int, n: int, d: int) -> np.ndarray:
    """``(n, d)`` uniforms on [0, 1); row ``j`` depends only on ``(seed, j)``."""
    out = np.empty((n, d))
    for block, start in enumerate(range(0, n, BLOCK)):
        stop = min(start + BLOCK, n)
        out[start:stop] = stream(seed, block).random((BLOCK, d))[: stop - start]
    return out


def _poisson_cdf(mean: float) -> np.ndarray:
    # tabulate until the upper tail is below the resolution of a double uniform
    upper = int(mean + 12.0 * np.sqrt(mean) + 40.0)
    k = np.arange(upper + 1, dtype=float)
    pmf = np.exp(xlogy(k, mean) - mean - gammaln(k + 1.0))
    return np.cumsum(pmf)


def poisson_inverse(u: np.ndarray, mean: float) -> np.ndarray:
    """Poisson(mean) variates from uniforms by CDF inversion."""
    if not mean > 0:
        raise DomainError(f"Poisson mean must be > 0, got {mean}")
    cdf = _poisson_cdf(float(mean))
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def sample_poisson(means, n: int, seed: int) -> np.ndarray:
    """``(n, d)`` independent Poisson draws with column means ``means``."""
    means = np.atleast_1d(np.asarray(means, dtype=float))
    if int(n) < 1:
        raise DomainError(f"n_samples must be >= 1, got {n}")
    u = uniforms(seed, int(n), means.size)
    return np.column_stack([poisson_inverse(u[:, j], m) for j, m in enumerate(means)])
