import math

import numpy as np
import pytest

from catbranch.errors import InputError
from catbranch.oracles import (feller_extinction_cdf, hitting_probability,
                               ks_test, laplace_branching,
                               mean_confidence, oracle_brownian_intensity,
                               oracle_extinction_prob, oracle_mrca_cdf,
                               oracle_mrca_density, oracle_mrca_survival,
                               oracle_reactant_intensity, poisson_count_test,
                               stretch_map, stretch_map_inverse,
                               two_sample_counts_chi2, two_sample_ks)
from catbranch.particle import MassPath


class TestExtinction:
    def test_unit_rate(self):
        assert oracle_extinction_prob(1.0, 1.0) == pytest.approx(0.5)
        assert oracle_extinction_prob(1.0, 0.0) == 0.0
        assert oracle_extinction_prob(1.0, 1e7) == pytest.approx(1.0, abs=1e-6)

    def test_step_path_exact(self):
        rate = MassPath(np.array([0.0, 1.0]), np.array([2.0, 0.0]))
        # integral over [0, 3] is 2
        assert oracle_extinction_prob(rate, 3.0) == pytest.approx(2.0 / 3.0)


class TestMrca:
    def test_pinned_value(self):
        assert oracle_mrca_cdf(1.0, 1.0, 0.5) == pytest.approx(1.0 / 3.0)

    def test_endpoints(self):
        assert oracle_mrca_cdf(1.0, 1.0, 0.0) == pytest.approx(0.0)
        assert oracle_mrca_cdf(1.0, 1.0, 1.0) == pytest.approx(1.0)

    def test_survival_complements_cdf(self):
        for h in (0.1, 0.5, 0.9):
            assert (oracle_mrca_survival(1.0, 1.0, h)
                    + oracle_mrca_cdf(1.0, 1.0, h)) == pytest.approx(1.0)

    def test_density_normalizes(self):
        from scipy.integrate import quad
        total, _ = quad(lambda h: oracle_mrca_density(1.0, 1.0, h), 0.0, 1.0)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_density_matches_cdf(self):
        h = 0.37
        eps = 1e-6
        num = (oracle_mrca_cdf(1.0, 1.0, h + eps)
               - oracle_mrca_cdf(1.0, 1.0, h - eps)) / (2 * eps)
        assert num == pytest.approx(oracle_mrca_density(1.0, 1.0, h), rel=1e-4)


class TestIntensities:
    def test_brownian_pinned(self):
        assert oracle_brownian_intensity(1.0, 1.0, 0.0, 0.5) == pytest.approx(1.0)
        assert oracle_brownian_intensity(1.0, 1.0, 0.3, 0.3) == 0.0

    def test_reactant_matches_brownian_flat(self):
        for h1, h2 in ((0.0, 0.5), (0.2, 0.7), (0.1, 0.9)):
            a = oracle_reactant_intensity(1.0, 1.0, 1.0, h1, h2)
            b = oracle_brownian_intensity(1.0, 1.0, h1, h2)
            assert a == pytest.approx(b)

    def test_additivity(self):
        a = oracle_reactant_intensity(1.0, 2.0, 1.0, 0.1, 0.4)
        b = oracle_reactant_intensity(1.0, 2.0, 1.0, 0.4, 0.8)
        c = oracle_reactant_intensity(1.0, 2.0, 1.0, 0.1, 0.8)
        assert a + b == pytest.approx(c)

    def test_divergence_guard(self):
        with pytest.raises(InputError):
            oracle_brownian_intensity(1.0, 1.0, 0.5, 1.0)
        with pytest.raises(InputError):
            oracle_reactant_intensity(1.0, 1.0, 1.0, 0.5, 1.0)


class TestHittingAndTransforms:
    def test_pinned_hitting(self):
        assert hitting_probability(1.0, 1.0, 1.0, 1.0) == pytest.approx(5 ** -0.5)

    def test_extinction_cdf(self):
        assert feller_extinction_cdf(1.0, 1.0) == pytest.approx(math.exp(-2.0))
        assert feller_extinction_cdf(1.0, 0.0) == 0.0

    def test_stretch_pinned(self):
        assert stretch_map(2.0, 1.0, 0.25) == pytest.approx(0.5)
        assert stretch_map(2.0, 1.0, 0.0) == 0.0
        assert stretch_map(1.0, 1.0, 0.4) == pytest.approx(0.4)  # identity

    def test_stretch_inverse(self):
        rate = MassPath(np.array([0.0, 0.5]), np.array([1.0, 3.0]))
        for h in (0.1, 0.45, 0.9):
            w = stretch_map(rate, 1.0, h)
            assert stretch_map_inverse(rate, 1.0, w) == pytest.approx(h, abs=1e-9)

    def test_laplace_pinned(self):
        assert laplace_branching(1.0, 1.0, 1.0, 1.0) == pytest.approx(
            math.exp(-0.5))
        assert laplace_branching(1.0, 0.0, 1.0, 1.0) == 1.0


class TestStatTools:
    def test_ks_calibration(self):
        # samples drawn from their own CDF reject at roughly the nominal rate
        rng = np.random.default_rng(17)
        rejections = 0
        runs = 200
        for _ in range(runs):
            sample = rng.exponential(size=300)
            _, p = ks_test(sample, lambda x: 1.0 - math.exp(-max(x, 0.0)))
            rejections += p < 0.05
        assert 2 <= rejections <= 25

    def test_ks_detects_shift(self):
        rng = np.random.default_rng(18)
        sample = rng.exponential(size=400) + 0.5
        _, p = ks_test(sample, lambda x: 1.0 - math.exp(-max(x, 0.0)))
        assert p < 1e-6

    def test_two_sample(self):
        rng = np.random.default_rng(19)
        a = rng.normal(size=500)
        b = rng.normal(size=500)
        assert two_sample_ks(a, b)[1] > 0.01
        assert two_sample_ks(a, b + 1.0)[1] < 1e-6

    def test_poisson_count_calibration(self):
        rng = np.random.default_rng(20)
        counts = rng.poisson(5.0, size=200)
        assert poisson_count_test(counts, 5.0, seed=1) > 0.01
        assert poisson_count_test(counts, 10.0, seed=1) < 0.001

    def test_poisson_inhomogeneous_means(self):
        rng = np.random.default_rng(21)
        means = rng.uniform(0.5, 4.0, size=300)
        counts = rng.poisson(means)
        assert poisson_count_test(counts, means, seed=2) > 0.01

    def test_counts_chi2(self):
        rng = np.random.default_rng(22)
        a = rng.poisson(3.0, size=800)
        b = rng.poisson(3.0, size=800)
        c = rng.poisson(4.5, size=800)
        assert two_sample_counts_chi2(a, b) > 0.01
        assert two_sample_counts_chi2(a, c) < 1e-4

    def test_mean_confidence(self):
        m, se = mean_confidence([1.0, 2.0, 3.0, 4.0])
        assert m == 2.5 and se > 0
        with pytest.raises(InputError):
            mean_confidence([1.0])
