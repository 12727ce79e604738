import math
import unittest
from unittest import mock

import numpy as np
import pytest

from booleanentropy.data_types import Status
from booleanentropy.ensembles import EnsembleConfig, McmcParams
from booleanentropy.exceptions import DomainError, NumericalError
from booleanentropy.laws import two_point
from booleanentropy.measures import Atomic, symmetrize
from booleanentropy.verify import (
    ConvergenceStudy, WeightModel, WeightRatio, alpha_regime_stats, convergence_stats, distance_to_m0,
    ldp_weight_ratio_check, log_weight, log_weight_decomposed, maximality_stats, quantile_configuration
)
from tests.fixtures.measures import rademacher, uniform


class TestLogWeight(unittest.TestCase):
    def test_reference_values(self):
        self.assertAlmostEqual(log_weight(WeightModel.wishart_singular(1, 1), [1.0]), -1.0, places=14)
        self.assertAlmostEqual(log_weight(WeightModel.conditioned_gue(2, 4), [1.0, -1.0]), 2 * math.log(2) - 4,
                               places=12)

    def test_permutation_invariant(self):
        wm = WeightModel.wishart_singular(4, 10)
        s = [0.5, 1.2, 0.9, 1.7]
        self.assertAlmostEqual(log_weight(wm, s), log_weight(wm, s[::-1]), places=10)

    def test_collisions_and_zeros(self):
        wm = WeightModel.wishart_singular(2, 5)
        self.assertEqual(log_weight(wm, [1.0, 1.0]), -np.inf)
        self.assertEqual(log_weight(wm, [0.0, 1.0]), -np.inf)
        self.assertEqual(log_weight(WeightModel.conditioned_gue(2, 5), [0.0, 1.0]), -np.inf)
        with self.assertRaises(DomainError):
            log_weight(wm, [-1.0, 1.0])
        with self.assertRaises(DomainError):
            log_weight(wm, [1.0, 2.0, 3.0])

    def test_decomposition(self):
        wm = WeightModel.wishart_singular(5, 20)
        rng = np.random.default_rng(6)
        for _ in range(10):
            s = rng.uniform(0.2, 2.0, size=5)
            direct = log_weight(wm, s)
            self.assertAlmostEqual(log_weight_decomposed(wm, s), direct, delta=1e-9 * max(1.0, abs(direct)))

    def test_invalid_model(self):
        with self.assertRaises(DomainError):
            WeightModel.conditioned_gue(5, 4)
        with self.assertRaises(DomainError):
            log_weight_decomposed(WeightModel.conditioned_gue(2, 4), [1.0, -1.0])


class TestWeightRatio(unittest.TestCase):
    def test_quantiles(self):
        np.testing.assert_allclose(quantile_configuration(uniform(0.0, 1.0), 4), [0.125, 0.375, 0.625, 0.875],
                                   atol=1e-10)
        with self.assertRaises(DomainError):
            quantile_configuration(rademacher(), 4)

    def test_identical_targets(self):
        wm = WeightModel.wishart_singular(10, 100)
        d = uniform(0.9, 1.1)
        self.assertEqual(ldp_weight_ratio_check(wm, d, d), WeightRatio(0.0, 0.0))

    def test_antisymmetric(self):
        wm = WeightModel.wishart_singular(10, 100)
        a, b = uniform(0.9, 1.1), uniform(1.9, 2.1)
        ab, ba = ldp_weight_ratio_check(wm, a, b), ldp_weight_ratio_check(wm, b, a)
        self.assertEqual(ab.measured, -ba.measured)
        self.assertEqual(ab.predicted, -ba.predicted)

    def test_wishart(self):
        wm = WeightModel.wishart_singular(40, 4000)
        ratio = ldp_weight_ratio_check(wm, uniform(0.9, 1.1), uniform(1.9, 2.1))
        self.assertGreater(ratio.predicted, 0.0)
        self.assertLess(ratio.relative_error, 0.15)

    def test_conditioned_gue(self):
        wm = WeightModel.conditioned_gue(40, 4000)
        a, b = symmetrize(uniform(1.3, 1.5)), symmetrize(uniform(2.3, 2.5))
        ratio = ldp_weight_ratio_check(wm, a, b)
        self.assertLess(ratio.relative_error, 0.15)

    def test_quantile_count_must_match(self):
        with self.assertRaises(DomainError):
            ldp_weight_ratio_check(WeightModel.wishart_singular(4, 40), uniform(0.9, 1.1), uniform(1.9, 2.1), 5)


class TestDistanceToTwoPoints(unittest.TestCase):
    def test_member(self):
        distance, p = distance_to_m0(two_point(0.3))
        self.assertLess(distance, 2e-3)
        self.assertAlmostEqual(p, 0.3, delta=2e-3)

    def test_far_measure(self):
        distance, _ = distance_to_m0(Atomic.point(0.0))
        self.assertAlmostEqual(distance, math.sqrt(2), delta=1e-6)


class TestConvergenceStudy(unittest.TestCase):
    def test_wishart(self):
        results, aggregates = convergence_stats(EnsembleConfig.wishart_block(30, 3000), replicas=3, base_seed=5)
        self.assertListEqual(list(results.columns), ConvergenceStudy.RESULT_KEYS)
        self.assertListEqual(results.seed.tolist(), [5, 6, 7])
        self.assertTrue((results.status == Status.OK).all())
        self.assertLess(aggregates["d_limit_mean"], 0.1)
        self.assertAlmostEqual(aggregates["m2_mean"], 1.0, delta=0.05)
        self.assertEqual(aggregates["failed"], 0)
        self.assertNotIn("mass_alpha_mean", aggregates)

    def test_single_replica_summary(self):
        results, aggregates = convergence_stats(EnsembleConfig.wishart_block(5, 50, seed=1), replicas=1)
        self.assertEqual(aggregates["replicas"], 1)
        self.assertEqual(aggregates["d_limit_mean"], results.d_limit[0])

    def test_failing_replicas_are_recorded(self):
        with mock.patch("booleanentropy.verify.sample_wishart_block", side_effect=NumericalError("svd failed")):
            with self.assertLogs("ConvergenceStudy", level="ERROR"):
                results, aggregates = convergence_stats(EnsembleConfig.wishart_block(5, 50), replicas=2)
        self.assertTrue((results.status == Status.ERROR).all())
        self.assertIn("svd failed", results.error_message[0])
        self.assertEqual(aggregates["failed"], 2)
        self.assertNotIn("d_limit_mean", aggregates)

    def test_replicas_validation(self):
        with self.assertRaises(DomainError):
            ConvergenceStudy(EnsembleConfig.wishart_block(5, 50), replicas=0)

    def test_small_gue(self):
        cfg = EnsembleConfig.conditioned_gue(4, 40, mcmc=McmcParams(burnin=100, steps=100))
        results, aggregates = convergence_stats(cfg, replicas=2)
        self.assertTrue((results.status == Status.OK).all())
        self.assertIn("mass_alpha_mean", aggregates)
        self.assertTrue(results.acceptance.between(0, 1).all())

    @pytest.mark.slow
    def test_conditioned_gue_moments(self):
        results, aggregates = convergence_stats(EnsembleConfig.conditioned_gue(20, 1000), replicas=10, n_jobs=-1)
        self.assertEqual(aggregates["failed"], 0)
        self.assertAlmostEqual(aggregates["m2_mean"], 2.0, delta=0.1)
        self.assertAlmostEqual(aggregates["m4_mean"], 4.0, delta=0.3)
        self.assertLess(aggregates["d_limit_mean"], 0.1)

    @pytest.mark.slow
    def test_balanced_clusters(self):
        _, aggregates = convergence_stats(EnsembleConfig.conditioned_gue(20, 2000), replicas=20, n_jobs=-1)
        self.assertAlmostEqual(aggregates["mass_alpha_mean"], 0.5, delta=0.03)


class TestAlphaRegime(unittest.TestCase):
    def test_alpha_range(self):
        with self.assertRaises(DomainError):
            alpha_regime_stats(4, 0.0, replicas=1)

    def test_columns(self):
        df = alpha_regime_stats(4, 0.5, replicas=2, mcmc=McmcParams(burnin=50, steps=50))
        self.assertListEqual(list(df.columns), ["replica", "seed", "d_p_alpha", "m2"])
        self.assertListEqual(df.seed.tolist(), [0, 1])

    @pytest.mark.slow
    def test_concentrates_at_p_alpha(self):
        df = alpha_regime_stats(20, 0.5, replicas=4, n_jobs=-1)
        self.assertLess(df.d_p_alpha.mean(), 0.2)
        self.assertAlmostEqual(df.m2.mean(), 1.5, delta=0.2)


class TestMaximality(unittest.TestCase):
    def test_never_positive(self):
        df = maximality_stats(1000, 4, seed=3)
        self.assertEqual(len(df), 1000)
        self.assertTrue((df.gamma <= 1e-12).all())

    def test_deterministic(self):
        self.assertTrue(maximality_stats(20, 3, seed=1).equals(maximality_stats(20, 3, seed=1)))

    def test_invalid(self):
        with self.assertRaises(DomainError):
            maximality_stats(0, 3)
