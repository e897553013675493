import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import dblquad

# acceptance criteria append "PASS ..." / "FAIL ..." lines here
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def k_oracle(gamma, x, alpha, dps: int = 30) -> float:
    """Brute-force K by mpmath quadrature on two power-law-flattened halves.

    ``[0, 1]`` uses ``u = w**(1/alpha)``; ``[1, inf)`` uses ``u = w**(-1/b)``
    with ``b = sum(x) - alpha``.  Both maps cancel the endpoint power laws, so
    the transformed integrands are bounded.  Reliable for moderate ``alpha``
    and ``b``.
    """
    gamma = [mpmath.mpf(float(g)) for g in gamma]
    x = [mpmath.mpf(float(v)) for v in x]
    alpha = mpmath.mpf(float(alpha))
    b = sum(x) - alpha

    def g(u):
        return mpmath.fprod((1 + u / gi) ** (-xi) for gi, xi in zip(gamma, x))

    with mpmath.workdps(dps):
        left = mpmath.quad(lambda w: g(w ** (1 / alpha)), [0, 1]) / alpha
        right = mpmath.quad(lambda w: w ** (-alpha / b - 1) * g(w ** (-1 / b)) if w > 0 else 0, [0, 1]) / b
        return float(left + right)


@pytest.fixture
def k_ref():
    return k_oracle


def rel(a, b) -> float:
    return abs(a - b) / abs(b)


def log_beta(a, b) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_posterior_mean(t, z, alpha, beta, gamma):
    """Posterior mean by 2-d quadrature of the unnormalized posterior.

    Integrates over ``u = sqrt(lam)`` on ``[0, sqrt(L)]**2`` with
    ``L = 50 max((z + beta) / t)``; the substitution removes the
    ``lam**(a - 1)`` endpoint singularity when ``a >= 1/2``.
    """
    a = np.asarray(z, float) + np.asarray(beta, float)
    t, g = np.asarray(t, float), np.asarray(gamma, float)
    upper = np.sqrt(50 * max(a / t))

    def dens(u2, u1, k):
        u = np.array([u1, u2])
        lam = u * u
        w = np.exp(np.sum((2 * a - 1) * np.log(u) - t * lam)) * (lam @ (1 / g)) ** (-alpha)
        return w if k is None else w * lam[k]

    opts = dict(epsabs=0, epsrel=1e-11)
    norm = dblquad(dens, 0, upper, 0, upper, args=(None,), **opts)[0]
    return np.array([dblquad(dens, 0, upper, 0, upper, args=(k,), **opts)[0] / norm for k in (0, 1)])


# (t, z, alpha, beta, gamma) with the oracle means frozen from brute_posterior_mean
ORACLE_CONFIGS = [
    ((1.0, 2.0), (0, 0), 0.5, (0.5, 0.5), (0.7, 1.6), (0.20386737, 0.14806631)),
    ((1.0, 2.0), (1, 3), 1.0, (1.0, 1.0), (0.5, 0.25), (1.6666666666666667, 1.6666666666666667)),
    ((0.8, 3.2), (4, 0), 1.2, (0.5, 1.5), (2.0, 0.3), (4.6034266, 0.34914335)),
    ((2.5, 1.5), (2, 2), 0.3, (0.5, 0.5), (1.0, 1.0), (0.9518659, 1.54689016)),
    ((1.0, 4.0), (7, 1), 2.5, (1.5, 2.0), (0.4, 3.0), (6.04701563, 0.73824609)),
]
