import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import nbinom

from poisson_predict.errors import DimensionError, DomainError
from poisson_predict.kfun import k_eval
from poisson_predict.model import ExposurePair, PowerPrior, ShrinkagePrior, theorem_prior
from poisson_predict.predictive import (
    PredictiveQuery,
    interval_exposures,
    log_pred,
    log_pred_many,
    log_pred_power,
    log_pred_shrink,
    normalization_check,
)
from poisson_predict.verify import random_queries, run_suite

E3 = ExposurePair((1.0, 2.0, 3.0), (2.0, 1.0, 4.0))


class TestPowerPredictive:
    def test_geometric_half(self):
        q = PredictiveQuery(ExposurePair((1.0,), (1.0,)), PowerPrior((1.0,)), (0,))
        assert log_pred_power(q, (0,)) == pytest.approx(-math.log(2), abs=1e-15)
        assert math.exp(log_pred_power(q, (3,))) == pytest.approx(1 / 16, rel=1e-14)

    def test_geometric_sums_to_one(self):
        q = PredictiveQuery(ExposurePair((1.0,), (1.0,)), PowerPrior((1.0,)), (0,))
        probs = np.exp(log_pred_many(q, np.arange(200)[:, None]))
        np.testing.assert_allclose(probs, 0.5 ** np.arange(1, 201), rtol=1e-12)

    def test_negative_binomial_product(self):
        x, beta = np.array([2, 0, 5]), np.array([0.5, 1.5, 0.7])
        q = PredictiveQuery(E3, PowerPrior(tuple(beta)), tuple(x))
        r, s = E3.r_arr, E3.s_arr
        for y in [(0, 0, 0), (1, 4, 2), (7, 0, 3)]:
            expected = sum(nbinom.logpmf(yi, xi + bi, ri / (ri + si)) for yi, xi, bi, ri, si in zip(y, x, beta, r, s))
            assert log_pred_power(q, y) == pytest.approx(expected, abs=1e-12)

    def test_general_interval_uses_harmonic_exposures(self):
        q = PredictiveQuery(E3, PowerPrior((1.0, 1.0, 1.0)), (1, 2, 0), tau=0.3, delta=0.5)
        t0, inc = q.times()
        r, s = E3.r_arr, E3.s_arr
        t = lambda tau: 1.0 / ((1 - tau) / r + tau / (r + s))
        np.testing.assert_allclose(t0, t(0.3), rtol=1e-14)
        np.testing.assert_allclose(inc, t(0.8) - t(0.3), rtol=1e-12)
        y = (2, 1, 1)
        expected = sum(nbinom.logpmf(yi, xi + 1.0, a / (a + b)) for yi, xi, a, b in zip(y, (1, 2, 0), t0, inc))
        assert log_pred(q, y) == pytest.approx(expected, abs=1e-12)

    def test_default_interval_is_original_problem(self):
        t0, inc = interval_exposures(E3, 0.0, 1.0)
        assert tuple(t0) == E3.r and tuple(inc) == E3.s

    def test_small_delta_increment_accurate(self):
        _, inc = interval_exposures(E3, 0.4, 1e-9)
        r, s = E3.r_arr, E3.s_arr
        tdot = s / (r * (r + s)) * (r * (r + s) / (r + 0.6 * s)) ** 2
        np.testing.assert_allclose(inc / 1e-9, tdot, rtol=1e-8)


class TestShrinkPredictive:
    def test_vanishing_alpha_matches_power(self):
        beta = (0.5, 0.5, 0.5)
        qs = PredictiveQuery(E3, ShrinkagePrior(1e-8, beta, (2 / 3, 1 / 6, 4 / 21)), (1, 0, 3))
        qp = PredictiveQuery(E3, PowerPrior(beta), (1, 0, 3))
        for y in [(0, 0, 0), (2, 1, 5)]:
            assert abs(log_pred_shrink(qs, y) - log_pred_power(qp, y)) < 1e-6

    def test_theorem_prior_reduces_to_fixed_k_arguments(self):
        # with the dominating prior the K arguments are s/r and s/(r+s)
        beta = (0.5, 0.5, 0.5)
        prior = theorem_prior(E3, beta)
        x, y = np.array([1, 0, 3]), np.array([2, 1, 0])
        q = PredictiveQuery(E3, prior, tuple(x))
        r, s = E3.r_arr, E3.s_arr
        b = np.array(beta)
        expected = (
            log_pred_power(PredictiveQuery(E3, PowerPrior(beta), tuple(x)), tuple(y))
            + k_eval(s / r, x + y + b, prior.alpha).log_value
            - k_eval(s / (r + s), x + b, prior.alpha).log_value
        )
        assert log_pred_shrink(q, tuple(y)) == pytest.approx(expected, abs=1e-13)

    def test_frozen_value(self):
        q = PredictiveQuery(ExposurePair((1.0, 2.0), (2.0, 1.0)), theorem_prior(ExposurePair((1.0, 2.0), (2.0, 1.0)), (1.0, 1.0)), (1, 1))
        # equals the power predictive times K((2, 1/2), (3, 2), 1) / K((2/3, 1/3), (2, 2), 1)
        assert log_pred(q, (1, 0)) == pytest.approx(-2.2369512223708603, abs=1e-12)

    def test_needs_strict_alpha(self):
        q = PredictiveQuery(E3, ShrinkagePrior(1.5, (0.5, 0.5, 0.5), (1.0, 1.0, 1.0)), (0, 0, 0))
        with pytest.raises(DomainError):
            log_pred_shrink(q, (0, 0, 0))

    def test_many_matches_single(self):
        prior = ShrinkagePrior(0.7, (1.0, 0.5, 0.8), (0.3, 2.0, 1.0))
        q = PredictiveQuery(E3, prior, (2, 0, 1), tau=0.2, delta=0.3)
        ys = np.array(list(itertools.product(range(3), range(2), range(4))))
        many = log_pred_many(q, ys)
        for y, v in zip(ys, many):
            assert v == pytest.approx(log_pred(q, tuple(y)), abs=1e-12)


def _chain(q01: PredictiveQuery, tau1: float, y: np.ndarray) -> float:
    """p(y over (tau0, tau2]) by summing over the split at tau1."""
    tau0, tau2 = q01.tau, q01.tau + q01.delta
    first = PredictiveQuery(q01.exposures, q01.prior, q01.x, tau0, tau1 - tau0)
    total = 0.0
    for y1 in itertools.product(*(range(v + 1) for v in y)):
        y1 = np.array(y1)
        second = PredictiveQuery(q01.exposures, q01.prior, tuple(q01.x.arr + y1), tau1, tau2 - tau1)
        total += math.exp(log_pred(first, tuple(y1)) + log_pred(second, tuple(y - y1)))
    return total


class TestChainConsistency:
    @pytest.mark.parametrize(
        "prior",
        [PowerPrior((0.5, 1.5)), ShrinkagePrior(1.2, (0.5, 1.5), (0.4, 1.3)), theorem_prior(ExposurePair((1.0, 2.0), (2.0, 1.0)), (1.0, 1.0))],
    )
    def test_two_steps_equal_one(self, prior):
        e = ExposurePair((1.0, 2.0), (2.0, 1.0))
        q = PredictiveQuery(e, prior, (1, 2), tau=0.1, delta=0.8)
        for y in [(0, 0), (2, 1), (3, 4)]:
            direct = math.exp(log_pred(q, y))
            assert _chain(q, 0.45, np.array(y)) == pytest.approx(direct, rel=1e-11)


class TestNormalization:
    def test_suite(self):
        results = run_suite("normalization")
        assert len(results) == 40
        assert all(c.passed for c in results), [c for c in results if not c.passed]

    def test_queries_cover_both_intervals(self):
        qs = [p for p, _ in random_queries()]
        assert any(q.tau == 0.0 for q in qs) and any(q.tau > 0.0 for q in qs)
        assert max(q.d for q in qs) <= 3

    @settings(max_examples=15, deadline=None)
    @given(
        x=st.lists(st.integers(0, 6), min_size=1, max_size=2),
        data=st.data(),
    )
    def test_property(self, x, data):
        d = len(x)
        vec = lambda lo, hi: tuple(data.draw(st.lists(st.floats(lo, hi), min_size=d, max_size=d)))
        e = ExposurePair(vec(0.5, 4.0), vec(0.5, 4.0))
        beta = vec(0.3, 2.0)
        alpha = data.draw(st.floats(0.05, 0.95)) * sum(beta)
        q = PredictiveQuery(e, ShrinkagePrior(alpha, beta, vec(0.2, 5.0)), tuple(x))
        total = normalization_check(q, 1e-8)
        assert 1 - 1e-6 <= total <= 1 + 1e-12


class TestValidation:
    def test_bad_interval(self):
        with pytest.raises(DomainError):
            PredictiveQuery(E3, PowerPrior((1, 1, 1)), (0, 0, 0), tau=1.0)
        with pytest.raises(DomainError):
            PredictiveQuery(E3, PowerPrior((1, 1, 1)), (0, 0, 0), tau=0.5, delta=0.6)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            PredictiveQuery(E3, PowerPrior((1, 1, 1)), (0, 0))
        with pytest.raises(DomainError):
            PredictiveQuery(E3, PowerPrior((1, 1)), (0, 0, 0))
        q = PredictiveQuery(E3, PowerPrior((1, 1, 1)), (0, 0, 0))
        with pytest.raises(DomainError):
            log_pred(q, (1, 1))
