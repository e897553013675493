import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisson_predict.errors import AssumptionError, DimensionError, DomainError
from poisson_predict.model import (
    CountVector,
    ExposurePair,
    HarmonicSchedule,
    LambdaVector,
    PowerPrior,
    ShrinkagePrior,
    as_counts,
    check_dims,
    harmonic_time,
    jeffreys_prior,
    theorem_prior,
)

exposure_lists = st.lists(st.floats(0.05, 50.0), min_size=1, max_size=4)


class TestValueTypes:
    def test_exposures_validated(self):
        with pytest.raises(DomainError):
            ExposurePair((1.0, 0.0), (1.0, 1.0))
        with pytest.raises(DimensionError):
            ExposurePair((1.0, 2.0), (1.0,))
        with pytest.raises(DimensionError):
            ExposurePair((), ())

    def test_counts_validated(self):
        assert CountVector((0, 3)).counts == (0, 3)
        with pytest.raises(DomainError):
            CountVector((1, -1))
        with pytest.raises(DomainError):
            CountVector((1.5,))
        with pytest.raises(DimensionError):
            as_counts((1, 2), d=3)

    def test_lambda_positive(self):
        with pytest.raises(DomainError):
            LambdaVector((1.0, 0.0))

    def test_immutable(self):
        e = ExposurePair((1.0,), (2.0,))
        with pytest.raises(AttributeError):
            e.r = (3.0,)

    def test_check_dims(self):
        assert check_dims(ExposurePair((1, 2), (1, 2)), PowerPrior((1, 1))) == 2
        with pytest.raises(DimensionError):
            check_dims(ExposurePair((1, 2), (1, 2)), PowerPrior((1,)))


class TestPriors:
    def test_jeffreys(self):
        assert jeffreys_prior(3) == PowerPrior((0.5, 0.5, 0.5))
        assert jeffreys_prior(1).beta == (0.5,)
        with pytest.raises(DimensionError):
            jeffreys_prior(0)

    def test_zero_alpha_is_power_prior(self):
        prior = ShrinkagePrior(0.0, (1.0, 2.0), (3.0, 4.0))
        assert isinstance(prior, PowerPrior)
        assert prior == PowerPrior((1.0, 2.0))

    def test_alpha_range(self):
        with pytest.raises(DomainError):
            ShrinkagePrior(3.5, (1.0, 2.0), (1.0, 1.0))
        with pytest.raises(DomainError):
            ShrinkagePrior(0.5, (1.0, 2.0), (1.0, -1.0))
        # boundary allowed as a value, rejected by K-based consumers
        with pytest.raises(DomainError):
            ShrinkagePrior(3.0, (1.0, 2.0), (1.0, 1.0)).require_strict()

    def test_theorem_prior_unequal_exposures(self):
        p = theorem_prior(ExposurePair((1, 2, 3), (2, 1, 4)), (0.5, 0.5, 0.5))
        assert p.alpha == pytest.approx(0.5, abs=1e-15)
        np.testing.assert_allclose(p.gamma, (2 / 3, 1 / 6, 4 / 21), rtol=1e-15)

    def test_theorem_prior_equal_exposures(self):
        p = theorem_prior(ExposurePair((1, 1, 1), (1, 1, 1)), (0.5, 0.5, 0.5))
        assert p.alpha == pytest.approx(0.5)
        np.testing.assert_allclose(p.gamma, (0.5, 0.5, 0.5), rtol=1e-15)

    def test_theorem_prior_needs_beta_sum_above_one(self):
        with pytest.raises(AssumptionError, match="sum\\(beta\\) > 1"):
            theorem_prior(ExposurePair((1, 2), (1, 1)), (0.5, 0.5))

    @settings(max_examples=50, deadline=None)
    @given(r=exposure_lists, data=st.data())
    def test_theorem_prior_satisfies_invariants(self, r, data):
        d = len(r)
        s = data.draw(st.lists(st.floats(0.05, 50.0), min_size=d, max_size=d))
        beta = data.draw(st.lists(st.floats(0.1, 3.0), min_size=d, max_size=d))
        if sum(beta) <= 1.0 + 1e-9:
            return
        p = theorem_prior(ExposurePair(r, s), beta)
        p.require_strict()
        assert all(g > 0 for g in p.gamma)


class TestHarmonicTime:
    @pytest.mark.parametrize(
        "r, s, tau, t, tdot",
        [
            (1.0, 1.0, 0.0, 1.0, 0.5),
            (1.0, 1.0, 1.0, 2.0, 2.0),
            (2.0, 2.0, 0.5, 8 / 3, 16 / 9),
        ],
    )
    def test_examples(self, r, s, tau, t, tdot):
        got_t, got_tdot = harmonic_time(HarmonicSchedule(ExposurePair((r,), (s,))), tau)
        np.testing.assert_allclose(got_t, [t], rtol=1e-15)
        np.testing.assert_allclose(got_tdot, [tdot], rtol=1e-15)

    def test_endpoints_exact(self):
        e = ExposurePair((0.3, 7.0), (1.1, 0.2))
        sched = HarmonicSchedule(e)
        assert tuple(sched.t(0.0)) == e.r
        assert tuple(sched.t(1.0)) == tuple(np.add(e.r, e.s))

    def test_tau_out_of_range(self):
        sched = HarmonicSchedule(ExposurePair((1.0,), (1.0,)))
        for tau in (-0.1, 1.01):
            with pytest.raises(DomainError):
                harmonic_time(sched, tau)

    def test_derivative_matches_finite_difference(self):
        sched = HarmonicSchedule(ExposurePair((1.0, 2.0, 3.0), (2.0, 1.0, 4.0)))
        h = 1e-6
        for tau in (0.1, 0.5, 0.9):
            fd = (sched.t(tau + h) - sched.t(tau - h)) / (2 * h)
            np.testing.assert_allclose(sched.t_dot(tau), fd, rtol=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(r=exposure_lists, data=st.data())
    def test_reciprocal_linear_and_monotone(self, r, data):
        d = len(r)
        s = np.array(data.draw(st.lists(st.floats(0.05, 50.0), min_size=d, max_size=d)))
        r = np.array(r)
        sched = HarmonicSchedule(ExposurePair(r, s))
        taus = np.linspace(0, 1, 11)
        ts = np.array([sched.t(tau) for tau in taus])
        assert np.all(np.diff(ts, axis=0) > 0)
        expected = (1 - taus[:, None]) / r + taus[:, None] / (r + s)
        np.testing.assert_allclose(1 / ts, expected, rtol=1e-12)

    def test_log_derivative_identity(self):
        sched = HarmonicSchedule(ExposurePair((1.0, 2.0, 3.0), (2.0, 1.0, 4.0)))
        for tau in np.linspace(0, 1, 11):
            t, tdot = harmonic_time(sched, tau)
            np.testing.assert_allclose(tdot / t, sched.gamma * t, rtol=1e-14)

    def test_constant_ratio_over_time(self):
        # t**2 / tdot = 1 / gamma = r (r + s) / s at every tau
        r, s = np.array([1.0, 2.0, 3.0]), np.array([2.0, 1.0, 4.0])
        sched = HarmonicSchedule(ExposurePair(r, s))
        for tau in np.linspace(0, 1, 11):
            t, tdot = harmonic_time(sched, tau)
            np.testing.assert_allclose(t**2 / tdot, r * (r + s) / s, rtol=1e-12)

    def test_prior_proportional_along_harmonic_time(self):
        # sub-problem observing up to t(a) and predicting to t(b) has gamma' = (b - a) gamma
        e = ExposurePair((1.0, 2.0, 3.0), (2.0, 1.0, 4.0))
        sched = HarmonicSchedule(e)
        beta = (0.5, 0.5, 0.5)
        for a, b in [(0.0, 1.0), (0.2, 0.7), (0.5, 0.55), (0.9, 1.0)]:
            ta, tb = sched.t(a), sched.t(b)
            sub = ExposurePair(ta, tb - ta)
            ratio = np.array(theorem_prior(sub, beta).gamma) / np.array(theorem_prior(e, beta).gamma)
            np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)
            assert ratio[0] == pytest.approx(b - a, rel=1e-12)
