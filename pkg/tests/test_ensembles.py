import math
import unittest

import numpy as np
import pytest

from booleanentropy.data_types import ModelKind
from booleanentropy.ensembles import (
    EnsembleConfig, McmcParams, MetropolisSampler, conditioned_gue_log_density, rejection_sample_conditioned_gue,
    sample_conditioned_gue, sample_wishart_block, scaled_pair, solve_theta
)
from booleanentropy.entropy import rate_isym, rate_jtilde, rate_pair
from booleanentropy.exceptions import DomainError, MixingWarning
from booleanentropy.measures import Atomic, Empirical, d_bl, moment
from booleanentropy.verify import distance_to_m0


class TestEnsembleConfig(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(DomainError):
            EnsembleConfig.wishart_block(5, 3)
        with self.assertRaises(DomainError):
            EnsembleConfig.conditioned_gue(0, 10)
        with self.assertRaises(DomainError):
            EnsembleConfig.wishart_block(2, 4, seed=-1)
        with self.assertRaises(DomainError):
            EnsembleConfig.wishart_block(2, 4, seed=2 ** 64)

    def test_mcmc_params(self):
        with self.assertRaises(DomainError):
            McmcParams(steps=0)
        with self.assertRaises(DomainError):
            McmcParams(burnin=-1)
        with self.assertRaises(DomainError):
            McmcParams(proposal_sd=0.0)

    def test_to_dict(self):
        d = EnsembleConfig.wishart_block(3, 9, seed=4).to_dict()
        self.assertEqual(d, {"model": ModelKind.WISHART_BLOCK.value, "p": 3, "n": 9, "seed": 4})
        d = EnsembleConfig.conditioned_gue(2, 8, mcmc=McmcParams(10, 20)).to_dict()
        self.assertEqual(d["M"], 2)
        self.assertEqual(d["mcmc"]["steps"], 20)

    def test_with_seed(self):
        cfg = EnsembleConfig.conditioned_gue(2, 8, seed=1).with_seed(99)
        self.assertEqual(cfg.seed, 99)
        self.assertEqual(cfg.dimension, 8)


class TestWishartBlock(unittest.TestCase):
    def test_deterministic(self):
        cfg = EnsembleConfig.wishart_block(10, 50, seed=123)
        np.testing.assert_array_equal(sample_wishart_block(cfg).singular_values.points,
                                      sample_wishart_block(cfg).singular_values.points)

    def test_reflection(self):
        sample = sample_wishart_block(EnsembleConfig.wishart_block(10, 40, seed=1))
        self.assertEqual(sample.reflected.count, 20)
        for k in [1, 3, 5]:
            self.assertAlmostEqual(moment(sample.reflected, k), 0.0, places=12)
        for k in [2, 4, 6]:
            self.assertAlmostEqual(moment(sample.reflected, k), moment(sample.singular_values, k), places=12)
        np.testing.assert_allclose(np.sort(sample.eigenvalues.points), np.sort(sample.singular_values.points ** 2))

    def test_exponential_mean(self):
        values = [sample_wishart_block(EnsembleConfig.wishart_block(1, 1, seed=s)).eigenvalues.points[0]
                  for s in range(2000)]
        self.assertAlmostEqual(float(np.mean(values)), 1.0, delta=0.1)

    def test_concentration(self):
        sample = sample_wishart_block(EnsembleConfig.wishart_block(30, 3000, seed=0))
        self.assertLess(d_bl(sample.singular_values, Atomic.point(1.0)), 0.1)
        self.assertLess(rate_jtilde(sample.eigenvalues).normalized, 0.05)
        self.assertLess(rate_isym(sample.reflected).normalized, 0.05)

    def test_wrong_model(self):
        with self.assertRaises(DomainError):
            sample_wishart_block(EnsembleConfig.conditioned_gue(2, 8))


class TestConditionedGue(unittest.TestCase):
    def test_log_density(self):
        self.assertAlmostEqual(conditioned_gue_log_density(np.array([1.0, -1.0]), 4), 2 * math.log(2) - 4,
                               places=12)
        self.assertEqual(conditioned_gue_log_density(np.array([0.0, 1.0]), 4), -np.inf)
        self.assertEqual(conditioned_gue_log_density(np.array([1.0, 1.0]), 4), -np.inf)

    def test_forbidden_moves(self):
        sampler = MetropolisSampler(2, 8)
        lam = np.array([1.0, 2.0])
        self.assertEqual(sampler._log_ratio(lam, 0, 2.0), -np.inf)
        self.assertEqual(sampler._log_ratio(lam, 0, 0.0), -np.inf)

    def test_log_ratio_matches_density(self):
        sampler = MetropolisSampler(3, 12)
        lam = np.array([1.2, -1.4, 1.5])
        moved = lam.copy()
        moved[1] = -1.1
        expected = conditioned_gue_log_density(moved, 12) - conditioned_gue_log_density(lam, 12)
        self.assertAlmostEqual(sampler._log_ratio(lam, 1, -1.1), expected, places=10)

    def test_deterministic(self):
        cfg = EnsembleConfig.conditioned_gue(4, 40, seed=7, mcmc=McmcParams(burnin=50, steps=50))
        np.testing.assert_array_equal(sample_conditioned_gue(cfg).points, sample_conditioned_gue(cfg).points)

    def test_single_eigenvalue(self):
        result = MetropolisSampler(1, 500, McmcParams(burnin=500, steps=2000), seed=3).run(record=True)
        self.assertTrue(result.mixing_ok)
        self.assertAlmostEqual(float(np.abs(result.trajectory).mean()), math.sqrt(2), delta=0.05)
        self.assertEqual(result.flip_acceptance, 1.0)

    def test_single_eigenvalue_takes_both_signs(self):
        signs = set()
        for seed in range(20):
            cfg = EnsembleConfig.conditioned_gue(1, 50, seed=seed, mcmc=McmcParams(burnin=20, steps=21))
            signs.add(float(np.sign(sample_conditioned_gue(cfg).points[0])))
        self.assertSetEqual(signs, {-1.0, 1.0})
        m0 = {scaled_pair([s], 1, 50)[0].m0 for s in signs}
        self.assertSetEqual(m0, {0, 1})

    def test_mixing_warning(self):
        sampler = MetropolisSampler(1, 10, McmcParams(burnin=0, steps=5, proposal_sd=1e6, adapt=False))
        with self.assertWarns(MixingWarning):
            result = sampler.run()
        self.assertFalse(result.mixing_ok)
        self.assertEqual(result.acceptance, 0.0)

    def test_bad_dimensions(self):
        with self.assertRaises(DomainError):
            MetropolisSampler(5, 4)
        with self.assertRaises(DomainError):
            sample_conditioned_gue(EnsembleConfig.wishart_block(2, 4))

    def test_rejection_sampler(self):
        a = rejection_sample_conditioned_gue(2, 8, 100, seed=5)
        self.assertEqual(a.shape, (100, 2))
        np.testing.assert_array_equal(a, rejection_sample_conditioned_gue(2, 8, 100, seed=5))
        single = rejection_sample_conditioned_gue(1, 500, 2000, seed=1)
        self.assertAlmostEqual(float(np.abs(single).mean()), math.sqrt(2), delta=0.05)
        with self.assertRaises(DomainError):
            rejection_sample_conditioned_gue(3, 3, 10)

    @pytest.mark.slow
    def test_chain_matches_rejection_sampler(self):
        result = MetropolisSampler(2, 8, McmcParams(burnin=1000, steps=40_000), seed=11).run(record=True)
        chain = Empirical(result.trajectory[::20].reshape(-1))
        exact = Empirical(rejection_sample_conditioned_gue(2, 8, 2000, seed=12).reshape(-1))
        self.assertLessEqual(d_bl(chain, exact), 0.05)
        self.assertGreater(result.flip_acceptance, 0.0)

    @pytest.mark.slow
    def test_eigenvalues_concentrate_at_two_points(self):
        sample = sample_conditioned_gue(EnsembleConfig.conditioned_gue(20, 1000, seed=2))
        distance, _ = distance_to_m0(sample)
        self.assertLess(distance, 0.1)


class TestTheta(unittest.TestCase):
    def test_reference_value(self):
        self.assertAlmostEqual(solve_theta(10, 1000).theta_sq, 0.0339, delta=5e-4)

    def test_residual(self):
        for M, N in [(2, 8), (10, 1000), (20, 1000), (40, 64_000)]:
            sol = solve_theta(M, N)
            s = sol.theta_sq
            self.assertTrue(0 < sol.theta < 1)
            self.assertLessEqual(abs(M * M * math.log(1 / s) - N * M * s), 1e-6 * N * M * s)

    def test_decreasing_along_cubic_dimension(self):
        thetas = [solve_theta(M, M ** 3).theta for M in [5, 10, 20, 40]]
        self.assertTrue(all(a > b for a, b in zip(thetas, thetas[1:])))

    def test_requires_m_below_n(self):
        with self.assertRaises(DomainError):
            solve_theta(10, 10)


class TestScaledPair(unittest.TestCase):
    def test_all_at_positive_point(self):
        pair, a, b = scaled_pair([math.sqrt(2)] * 3, 3, 100)
        np.testing.assert_array_equal(pair.alpha_points, [0.0, 0.0, 0.0])
        self.assertEqual(pair.m0, 3)
        self.assertEqual(a, Atomic.point(0.0))
        self.assertEqual(b, Atomic.empty())
        self.assertAlmostEqual(rate_pair(a, b).normalized, 0.5, places=12)

    def test_split(self):
        theta = solve_theta(2, 50).theta
        pair, a, b = scaled_pair([math.sqrt(2) + theta, -math.sqrt(2) - theta], 2, 50)
        np.testing.assert_allclose(pair.alpha_points, [1.0], atol=1e-12)
        np.testing.assert_allclose(pair.beta_points, [-1.0], atol=1e-12)
        self.assertAlmostEqual(a.mass, 0.5, places=14)
        self.assertAlmostEqual(b.mass, 0.5, places=14)

    def test_zero_counts_as_positive(self):
        pair, _, _ = scaled_pair([0.0, -1.0], 2, 10)
        self.assertEqual(pair.m0, 1)

    def test_wrong_length(self):
        with self.assertRaises(DomainError):
            scaled_pair([1.0, 2.0], 3, 10)

    def test_rate_bounded_below(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            lam = rng.normal(size=6) * 2
            _, a, b = scaled_pair(lam, 6, 60)
            self.assertGreaterEqual(rate_pair(a, b).raw, -0.5)
