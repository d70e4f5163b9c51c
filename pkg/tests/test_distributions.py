import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import gammaln

from inflated_hurdle.distributions import (
    InflatedValues,
    hurdle_pmf,
    inflated_tnb_logpmf,
    inflated_tnb_pmf,
    mixture_weights,
    nb2_logpmf,
    nb2_pmf,
    tnb_logpmf,
    tnb_mean,
    tnb_pmf,
)


def tail_sum(pmf, start, mass_target=1.0 - 1e-12, max_k=10**6):
    """Truncated-sum oracle: accumulate pmf until the target mass is reached."""
    total = 0.0
    k = start
    while total < mass_target and k <= max_k:
        total += pmf(k)
        k += 1
    return total, k


class TestNb2:
    def test_geometric_zero(self):
        # theta=1 reduces NB2 to geometric: P(k) = (1/2)^(k+1) at mu=1
        assert_allclose(nb2_logpmf(0, 1.0, 1.0), np.log(0.5), rtol=1e-14)

    def test_geometric_three(self):
        assert_allclose(nb2_logpmf(3, 1.0, 1.0), np.log(0.0625), rtol=1e-14)

    def test_high_precision_point(self):
        # mpmath oracle at 60 digits:
        #   loggamma(theta+k) - loggamma(theta) - loggamma(k+1)
        #     + theta*log(theta/(theta+mu)) + k*log(mu/(theta+mu))
        assert_allclose(
            nb2_logpmf(5, 2.5, 0.8), -3.011423726187506028083, rtol=1e-13
        )
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 50
        mu, theta, k = map(mpmath.mpf, (2.5, 0.8, 5))
        oracle = (
            mpmath.loggamma(theta + k)
            - mpmath.loggamma(theta)
            - mpmath.loggamma(k + 1)
            + theta * mpmath.log(theta / (theta + mu))
            + k * mpmath.log(mu / (theta + mu))
        )
        assert_allclose(nb2_logpmf(5, 2.5, 0.8), float(oracle), rtol=1e-14)

    def test_normalizes(self):
        total, _ = tail_sum(lambda k: nb2_pmf(k, 2.5, 0.8), start=0)
        assert abs(total - 1.0) < 1e-10

    def test_zero_probability_form(self):
        mu, theta = 3.0, 2.0
        assert_allclose(nb2_pmf(0, mu, theta), (1 + mu / theta) ** (-theta), rtol=1e-13)

    def test_poisson_limit(self):
        # theta -> infinity collapses NB2 onto the Poisson pmf; the gap is
        # O(k^2 / theta), so 1e6 only buys ~2e-4 at k=20 while 1e8 is
        # comfortably inside 1e-5
        mu = 4.0
        k = np.arange(21)
        poisson = np.exp(-mu + k * np.log(mu) - gammaln(k + 1.0))
        assert_allclose(nb2_pmf(k, mu, 1e6), poisson, rtol=5e-4)
        assert_allclose(nb2_pmf(k, mu, 1e8), poisson, rtol=1e-5)

    def test_vectorized_broadcast(self):
        k = np.array([0, 1, 2, 3])
        vals = nb2_logpmf(k, 1.0, 1.0)
        assert vals.shape == (4,)
        assert_allclose(vals, [np.log(0.5 ** (j + 1)) for j in k], rtol=1e-13)

    @pytest.mark.parametrize("mu,theta", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (np.nan, 1.0), (1.0, np.inf)])
    def test_domain_errors(self, mu, theta):
        with pytest.raises(ValueError):
            nb2_logpmf(1, mu, theta)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            nb2_logpmf(-1, 1.0, 1.0)

    def test_large_count_stays_finite(self):
        # counts up to 270 appear in quarterly stay totals; log space must hold up
        assert np.isfinite(nb2_logpmf(270, 200.0, 0.5))


class TestTruncated:
    def test_geometric_one(self):
        assert_allclose(tnb_pmf(1, 1.0, 1.0), 0.5, rtol=1e-14)

    def test_geometric_two(self):
        assert_allclose(tnb_pmf(2, 1.0, 1.0), 0.25, rtol=1e-14)

    def test_normalizes(self):
        total, _ = tail_sum(lambda k: tnb_pmf(k, 3.0, 2.0), start=1)
        assert abs(total - 1.0) < 1e-10

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            tnb_pmf(0, 1.0, 1.0)

    def test_degenerate_mu(self):
        with pytest.raises(ValueError, match="degenerate"):
            tnb_pmf(1, 1e-300, 1.0)

    def test_mean_exact_geometric(self):
        # mu=2, theta=1: 2 / (1 - 3^-1) = 3 exactly
        assert_allclose(tnb_mean(2.0, 1.0), 3.0, rtol=1e-14)

    def test_mean_large_mu(self):
        # zero mass vanishes, so the truncated mean collapses onto mu
        assert abs(tnb_mean(100.0, 5.0) / 100.0 - 1.0) < 1e-6

    def test_mean_matches_truncated_sum(self):
        # truncated-sum oracle, frozen from a 60-digit mpmath run
        assert_allclose(tnb_mean(1.7, 0.6), 3.071549962814306, rtol=1e-12)
        mu, theta = 1.7, 0.6
        total = sum(k * tnb_pmf(k, mu, theta) for k in range(1, 2000))
        assert abs(tnb_mean(mu, theta) - total) < 1e-9

    @pytest.mark.parametrize("mu", [0.5, 2.0, 10.0])
    @pytest.mark.parametrize("theta", [0.5, 1.0, 5.0])
    def test_mean_consistency_grid(self, mu, theta):
        total = 0.0
        k = 1
        while True:
            term = k * tnb_pmf(k, mu, theta)
            total += term
            if term < 1e-16 and k > 10 * (mu + 1):
                break
            k += 1
        assert abs(tnb_mean(mu, theta) - total) < 1e-9

    def test_mean_at_least_one(self):
        for mu in (0.01, 0.5, 1.0, 5.0):
            assert tnb_mean(mu, 0.7) >= max(1.0, mu)


class TestMixtureWeights:
    def test_sum_to_one_and_positive(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            scores = rng.normal(scale=4.0, size=6)
            w = mixture_weights(scores)
            assert np.all(w > 0)
            assert abs(w.sum() - 1.0) < 1e-12

    def test_reference_normalization(self):
        # shifting all scores by a nonzero constant changes the weights:
        # the reference-category normalization is not shift invariant
        scores = np.array([0.3, -1.2, 0.9])
        w0 = mixture_weights(scores)
        w1 = mixture_weights(scores + 1.0)
        assert not np.allclose(w0, w1)
        assert_allclose(mixture_weights(scores + 0.0), w0, rtol=0, atol=0)

    def test_two_dimensional(self):
        scores = np.array([[0.0, 0.0], [np.log(2.0), 0.0]])
        w = mixture_weights(scores)
        assert w.shape == (2, 3)
        assert_allclose(w[0], [1 / 3, 1 / 3, 1 / 3], rtol=1e-14)
        assert_allclose(w[1], [0.5, 0.25, 0.25], rtol=1e-14)


class TestInflatedMixture:
    def test_reduces_to_tnb_when_empty(self):
        inflated = InflatedValues(())
        k = np.arange(1, 40)
        got = inflated_tnb_logpmf(k, np.ones(1), 2.3, 1.4, inflated)
        assert_allclose(got, tnb_logpmf(k, 2.3, 1.4), rtol=0, atol=1e-14)

    def test_single_spike_geometric(self):
        # spike at 7 with weight 0.3 on the geometric base:
        # tnb_pmf(7) = (1/2)^8 / (1/2) = (1/2)^7, so 0.3 + 0.7 * (1/2)^7
        inflated = InflatedValues((7,))
        got = inflated_tnb_pmf(7, np.array([0.3, 0.7]), 1.0, 1.0, inflated)
        assert_allclose(got, 0.3 + 0.7 * 0.5**7, rtol=1e-14)
        assert_allclose(got, 0.30546875, rtol=1e-14)

    def test_spike_dominance(self):
        inflated = InflatedValues((2, 7, 14))
        w = mixture_weights(np.array([-1.0, -2.0, -2.5]))
        for j, v in enumerate(inflated):
            spike = inflated_tnb_pmf(v, w, 2.0, 1.5, inflated)
            base = w[-1] * tnb_pmf(v, 2.0, 1.5)
            assert spike > base
            assert abs((spike - base) - w[j]) < 1e-14

    def test_normalizes_with_spikes(self):
        inflated = InflatedValues((2, 7, 14))
        w = mixture_weights(np.array([-0.5, -1.5, -2.0]))
        total, _ = tail_sum(lambda k: inflated_tnb_pmf(k, w, 3.0, 0.9, inflated), start=1)
        assert abs(total - 1.0) < 1e-10

    def test_weight_dimension_mismatch(self):
        with pytest.raises(ValueError, match="components"):
            inflated_tnb_pmf(1, np.array([0.5, 0.5]), 1.0, 1.0, InflatedValues((2, 7)))

    def test_per_row_weights(self):
        inflated = InflatedValues((3,))
        w = np.array([[0.2, 0.8], [0.4, 0.6]])
        got = inflated_tnb_pmf(np.array([3, 3]), w, 1.0, 1.0, inflated)
        base = tnb_pmf(3, 1.0, 1.0)
        assert_allclose(got, [0.2 + 0.8 * base, 0.4 + 0.6 * base], rtol=1e-14)


class TestInflatedValues:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            InflatedValues((0, 2))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            InflatedValues((2, 2))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            InflatedValues((7, 2))

    def test_spike_index(self):
        inflated = InflatedValues((2, 7))
        assert inflated.spike_index(np.array([1, 2, 3, 7])).tolist() == [-1, 0, -1, 1]

    def test_non_consecutive_allowed(self):
        assert InflatedValues((2, 7, 14, 30)).n_components == 5


class TestHurdle:
    def test_blocked_hurdle(self):
        assert hurdle_pmf(5, 1.0, lambda k: tnb_pmf(k, 1.0, 1.0)) == 0.0

    def test_half_crossing_geometric(self):
        assert_allclose(hurdle_pmf(1, 0.5, lambda k: tnb_pmf(k, 1.0, 1.0)), 0.25, rtol=1e-14)

    def test_total_mass_with_inflated_positives(self):
        inflated = InflatedValues((2, 7, 14))
        w = mixture_weights(np.array([-1.0, -1.5, -2.0]))

        def positive(k):
            return inflated_tnb_pmf(k, w, 2.5, 1.2, inflated)

        total = hurdle_pmf(0, 0.37, positive)
        k = 1
        while total < 1.0 - 1e-12 and k < 10**6:
            total += hurdle_pmf(k, 0.37, positive)
            k += 1
        assert abs(total - 1.0) < 1e-8

    def test_invalid_p_zero(self):
        with pytest.raises(ValueError):
            hurdle_pmf(0, 1.5, lambda k: 0.0)

    @pytest.mark.parametrize("mu", [0.5, 2.0, 10.0])
    @pytest.mark.parametrize("theta", [0.5, 1.0, 5.0])
    @pytest.mark.parametrize("values", [(), (2,), (2, 7, 14)])
    def test_normalization_grid(self, mu, theta, values):
        inflated = InflatedValues(values)
        scores = -1.0 - 0.3 * np.arange(len(values))
        w = mixture_weights(scores) if values else np.ones(1)

        def positive(k):
            return inflated_tnb_pmf(k, w, mu, theta, inflated)

        total = hurdle_pmf(0, 0.4, positive)
        k = 1
        while total < 1.0 - 1e-12 and k < 10**6:
            total += hurdle_pmf(k, 0.4, positive)
            k += 1
        assert abs(total - 1.0) < 1e-8
