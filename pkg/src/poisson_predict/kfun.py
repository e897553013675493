r"""Generalized beta integral

.. math::

    K(\gamma, x, \alpha) = \int_0^\infty u^{\alpha-1}
        \prod_i (1 + u/\gamma_i)^{-x_i}\, du,
    \qquad 0 < \alpha < x_\bullet,

and the shrinkage factor ``f_i = K(g, x + e_i, a) / K(g, x, a)``.

With all ``gamma_i`` equal the integral is ``gamma_1**alpha * B(x. - alpha, alpha)``.
In general we substitute ``u = c v / (1 - v)``, which gives

.. math::

    K = c^\alpha \int_0^1 v^{\alpha-1} (1-v)^{x_\bullet-\alpha-1}
        \prod_i \bigl(1 + v(c/\gamma_i - 1)\bigr)^{-x_i}\, dv .

Both endpoint power laws are carried exactly by a Gauss-Jacobi rule, leaving a
product that is smooth and positive on ``[0, 1]``.  The scale ``c`` is the
``x``-weighted harmonic mean of ``gamma``, which makes the product flat to
first order at ``v = 0`` where the Jacobi weight concentrates for large ``x.``.
The normalized rule reproduces the equal-gamma closed form to rounding error.
Everything is carried in log space.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln, logsumexp, roots_jacobi

from .errors import DimensionError, DivergentIntegralError, DomainError

__all__ = [
    "KArgs",
    "LogK",
    "k_eval",
    "log_k_batch",
    "log_k_lattice",
    "shrink_factor",
    "k_cache",
]

# Pairs of rule sizes; the difference within a pair is the error estimate.
_RULE_LADDER = ((48, 64), (96, 128))
_LOG_TOL = 1e-13
# above this a + b the Jacobi weights come from the eigenvectors directly
_GW_THRESHOLD = 500.0


@dataclass(frozen=True)
class KArgs:
    """Validated arguments of ``K``; also the memoization key.

    ``gamma`` is rounded to 15 significant digits on construction and the
    integral is evaluated at the rounded values, so equal keys always map to
    bit-identical results.
    """

    gamma: tuple[float, ...]
    x: tuple[float, ...]
    alpha: float

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        alpha = float(self.alpha)
        _validate(gamma[None, :], x[None, :], np.array([alpha]))
        object.__setattr__(self, "gamma", tuple(float(f"{g:.15g}") for g in gamma))
        object.__setattr__(self, "x", tuple(float(v) for v in x))
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class LogK:
    """Natural log of ``K`` with the quadrature's relative error estimate."""

    log_value: float
    est_rel_err: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _validate(gamma: np.ndarray, x: np.ndarray, alpha: np.ndarray) -> None:
    if gamma.shape[-1] != x.shape[-1]:
        raise DimensionError(f"gamma has {gamma.shape[-1]} coordinates, x has {x.shape[-1]}")
    if x.shape[-1] == 0:
        raise DimensionError("K needs at least one coordinate")
    if not (np.all(np.isfinite(gamma)) and np.all(gamma > 0)):
        raise DomainError("every gamma_i must be > 0")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(alpha))):
        raise DomainError("x and alpha must be finite")
    xs = x.sum(axis=-1)
    if np.any(xs <= 0):
        raise DomainError("sum(x) must be > 0")
    if np.any(alpha <= 0):
        raise DivergentIntegralError("alpha must be > 0 (integral diverges at u = 0)")
    if np.any(alpha >= xs):
        raise DivergentIntegralError("alpha must be < x• (integral diverges at u = infinity)")


def _golub_welsch_jacobi(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi nodes and unnormalized log-weights from the Jacobi matrix.

    Used when ``a + b`` is so large that scipy's total-mass constant
    ``2**(a+b+1) B(a+1, b+1)`` overflows; only relative weights are needed.
    """
    k = np.arange(n, dtype=float)
    s = 2.0 * k + a + b
    diag = (b * b - a * a) / (s * (s + 2.0))
    k1, s1 = k[1:], s[1:]
    off = np.sqrt(4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0)))
    nodes, vecs = eigh_tridiagonal(diag, off)
    with np.errstate(divide="ignore"):
        logw = 2.0 * np.log(np.abs(vecs[0]))
    return nodes, logw


@lru_cache(maxsize=8192)
def _jacobi_rule(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on (0, 1) and normalized log-weights for weight ``v**b (1-v)**a``."""
    if a + b < _GW_THRESHOLD:
        # scipy evaluates a discarded 0/0 branch when a + b = -1
        with np.errstate(divide="ignore", invalid="ignore"):
            t, w = roots_jacobi(n, a, b)
            logw = np.log(w)
    else:
        t, logw = _golub_welsch_jacobi(n, a, b)
    v = 0.5 * (1.0 + t)
    logw = logw - logsumexp(logw)
    v.setflags(write=False)
    logw.setflags(write=False)
    return v, logw


def _quad_log(v, logw, x, rho) -> np.ndarray:
    # rows x nodes x coords; log1p keeps (1 + v(rho - 1)) accurate near v = 0
    lh = -np.einsum("rj,rnj->rn", x, np.log1p(v[None, :, None] * (rho[:, None, :] - 1.0)))
    return logsumexp(lh + logw[None, :], axis=1)


def _log_k_rows(gamma: np.ndarray, x: np.ndarray, alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = x.shape[0]
    xs = x.sum(axis=1)
    xpos = np.maximum(x, 0.0)
    c = xpos.sum(axis=1) / (xpos / gamma).sum(axis=1)
    equal = np.all(gamma == gamma[:, :1], axis=1)
    c = np.where(equal, gamma[:, 0], c)
    rho = c[:, None] / gamma

    base = alpha * np.log(c) + betaln(alpha, xs - alpha)
    corr = np.zeros(m)
    err = np.zeros(m)
    todo = np.flatnonzero(~equal)
    if todo.size:
        keys = np.stack([alpha[todo], xs[todo]], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        for g, (a_g, xs_g) in enumerate(uniq):
            pending = todo[inverse == g]
            a_exp, b_exp = float(xs_g - a_g - 1.0), float(a_g - 1.0)
            for n_lo, n_hi in _RULE_LADDER:
                lo = _quad_log(*_jacobi_rule(n_lo, a_exp, b_exp), x[pending], rho[pending])
                hi = _quad_log(*_jacobi_rule(n_hi, a_exp, b_exp), x[pending], rho[pending])
                corr[pending] = hi
                err[pending] = np.abs(hi - lo)
                bad = err[pending] > _LOG_TOL * np.maximum(1.0, np.abs(base[pending] + hi))
                pending = pending[bad]
                if pending.size == 0:
                    break
    return base + corr, np.expm1(err)


def log_k_batch(gamma, x, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``log K`` over rows.

    Args:
        gamma: ``(d,)`` or ``(m, d)`` positive scales.
        x: ``(m, d)`` exponents, each row with ``0 < alpha < sum(row)``.
        alpha: scalar or ``(m,)``.

    Returns:
        ``(log_values, est_rel_err)``, both of shape ``(m,)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), x.shape)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), x.shape[:1]).astype(float)
    _validate(gamma, x, alpha)
    return _log_k_rows(np.array(gamma), x, alpha)


def log_k_lattice(gamma, base, alpha: float, upper) -> tuple[np.ndarray, float]:
    """``log K(gamma, w + base, alpha)`` for every integer ``w`` in ``prod_i [0, upper_i]``.

    Returns the table shaped ``tuple(upper + 1)`` and the worst relative error
    estimate over it.
    """
    upper = np.asarray(upper, dtype=np.int64)
    shape = tuple(int(u) + 1 for u in upper)
    grid = np.indices(shape).reshape(len(shape), -1).T
    logk, err = log_k_batch(gamma, grid + np.asarray(base, dtype=float), alpha)
    return logk.reshape(shape), float(err.max(initial=0.0))


class KCache:
    """Bounded LRU map from ``KArgs`` to ``LogK``, safe under concurrent use.

    Values are computed outside the lock.  Two threads racing on the same key
    both compute the same deterministic result; the first insert is kept.
    """

    def __init__(self, maxsize: int = 1 << 18):
        self.maxsize = maxsize
        self._data: OrderedDict[KArgs, LogK] = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: KArgs) -> LogK | None:
        with self._lock:
            val = self._data.get(key)
            if val is None:
                self.misses += 1
            else:
                self.hits += 1
                self._data.move_to_end(key)
            return val

    def put(self, key: KArgs, val: LogK) -> LogK:
        with self._lock:
            existing = self._data.get(key)
            if existing is not None:
                return existing
            self._data[key] = val
            if len(self._data) > self.maxsize:
                self._data.popitem(last=False)
            return val

    def clear(self) -> None:
        with self._lock:
            self._data.clear()
            self.hits = self.misses = 0

    def __len__(self) -> int:
        return len(self._data)


k_cache = KCache()


def k_eval(gamma, x=None, alpha: float | None = None) -> LogK:
    """Evaluate ``log K(gamma, x, alpha)`` (memoized).

    Accepts either the three arguments or a single :class:`KArgs`.

    Raises:
        DivergentIntegralError: ``alpha <= 0`` or ``alpha >= sum(x)``.
        DomainError: some ``gamma_i <= 0``.
    """
    key = gamma if isinstance(gamma, KArgs) else KArgs(tuple(np.atleast_1d(gamma)), tuple(np.atleast_1d(x)), alpha)
    hit = k_cache.get(key)
    if hit is not None:
        return hit
    logk, err = _log_k_rows(np.array([key.gamma]), np.array([key.x]), np.array([key.alpha]))
    return k_cache.put(key, LogK(float(logk[0]), float(err[0])))


def shrink_factor(gamma_t, x, alpha: float, i: int) -> float:
    """``f_i = K(gamma_t, x + e_i, alpha) / K(gamma_t, x, alpha)``, which lies in (0, 1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not 0 <= i < x.size:
        raise DimensionError(f"coordinate index {i} out of range for d={x.size}")
    x_up = x.copy()
    x_up[i] += 1.0
    num = k_eval(gamma_t, x_up, alpha)
    den = k_eval(gamma_t, x, alpha)
    return math.exp(num.log_value - den.log_value)
