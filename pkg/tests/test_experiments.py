"""
蒙特卡洛实验模块的单元测试
"""

import math
import unittest

import numpy as np

from covol_ldp.core.estimate import realized_vector
from covol_ldp.core.experiments import (
    EventSpec,
    Statistic,
    chi2_tail_exact,
    estimate_tail,
    jump_filter_report,
    ldp_slope,
    map_paths,
    mdp_slope,
    run_cgf,
    run_clt,
    run_consistency,
    wilson_interval,
)
from covol_ldp.core.model import JumpSpec, ModelSpec
from covol_ldp.core.regimes import PowerLawRegime
from tests import override_setting


def level_event(level, direction=(1.0, 0.0, 0.0), polarized=False):
    return EventSpec(Statistic.LDP_LEVEL, direction, level, polarized=polarized)


class TestChi2TailExact(unittest.TestCase):
    def test_known_values(self):
        # 自由度2时 P(χ²₂ ≥ 2) = e^{-1}
        self.assertAlmostEqual(chi2_tail_exact(2, 1.0, 1.0), math.exp(-1.0), places=14)
        self.assertAlmostEqual(chi2_tail_exact(1, 1.0, 1.0), 0.3173105079, places=9)
        self.assertAlmostEqual(chi2_tail_exact(10, 1e-12, 1.0), 1.0, places=12)
        self.assertEqual(chi2_tail_exact(np.int64(10), 1.2, 1.0), chi2_tail_exact(10, 1.2, 1.0))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            chi2_tail_exact(0, 1.0, 1.0)
        with self.assertRaises(ValueError):
            chi2_tail_exact(5, 0.0, 1.0)
        with self.assertRaises(ValueError):
            chi2_tail_exact(5, 1.0, 0.0)


class TestEventSpec(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            level_event(1.0, direction=(0.0, 0.0, 0.0))
        with self.assertRaises(ValueError):
            EventSpec(Statistic.MDP_SCALED, (1.0, 0.0, 0.0), 0.5)
        with self.assertRaises(ValueError):
            EventSpec(Statistic.MDP_SCALED, (1.0, 0.0, 0.0), 0.5, gamma=0.5)

    def test_speed(self):
        self.assertEqual(level_event(1.0).speed(100), 100.0)
        event = EventSpec(Statistic.MDP_SCALED, (1, 0, 0), 0.5, gamma=0.25)
        self.assertAlmostEqual(event.speed(100), 10.0)
        self.assertEqual(event.direction, (1.0, 0.0, 0.0))


class TestMapPaths(unittest.TestCase):
    def test_independent_of_workers(self):
        model = ModelSpec.constant(jumps1=JumpSpec.gaussian(10.0))

        def statistic(path, truth):
            return realized_vector(path, path.n).as_array()

        serial = map_paths(model, 50, 40, 7, statistic, workers=1)
        parallel = map_paths(model, 50, 40, 7, statistic, workers=4)
        self.assertEqual(serial.shape, (40, 3))
        np.testing.assert_array_equal(serial, parallel)

    def test_invalid_reps(self):
        with self.assertRaises(ValueError):
            map_paths(ModelSpec(), 10, 0, 1, lambda path, truth: (0.0,))


class TestTailEstimate(unittest.TestCase):
    def test_agrees_with_chi2(self):
        n, reps, level = 30, 20000, 1.2
        estimate = estimate_tail(ModelSpec(), None, level_event(level), n, reps, seed=21, workers=1)
        exact = chi2_tail_exact(n, level, 1.0)
        stderr = math.sqrt(exact * (1.0 - exact) / reps)
        self.assertAlmostEqual(estimate.p_hat, exact, delta=4 * stderr)
        self.assertLessEqual(estimate.ci_low, estimate.p_hat)
        self.assertGreaterEqual(estimate.ci_high, estimate.p_hat)

    def test_certain_event(self):
        estimate = estimate_tail(ModelSpec(), None, level_event(-1.0), 20, 1000, seed=1, workers=1)
        self.assertEqual(estimate.hits, 1000)
        self.assertEqual(estimate.p_hat, 1.0)
        self.assertEqual(estimate.neg_log_over_speed, 0.0)
        self.assertFalse(estimate.lower_bound_only)

    def test_impossible_event(self):
        estimate = estimate_tail(ModelSpec(), None, level_event(1e6), 20, 1000, seed=1, workers=1)
        self.assertEqual(estimate.hits, 0)
        self.assertTrue(estimate.lower_bound_only)
        self.assertGreater(estimate.ci_high, 0.0)
        self.assertAlmostEqual(estimate.neg_log_over_speed, -math.log(estimate.ci_high) / 20)

    def test_minimum_reps(self):
        with self.assertRaises(ValueError):
            estimate_tail(ModelSpec(), None, level_event(1.5), 20, 10, seed=1)
        override_setting(self, "MIN_TAIL_REPS", 10)
        self.assertEqual(estimate_tail(ModelSpec(), None, level_event(1.5), 20, 10, seed=1).reps, 10)

    def test_polarized_cross(self):
        override_setting(self, "MIN_TAIL_REPS", 200)
        model = ModelSpec.constant(rho=0.5)
        direction = (0.0, 0.0, 1.0)
        plain = estimate_tail(model, None, level_event(0.6, direction), 40, 200, seed=3, workers=1)
        polar = estimate_tail(model, None, level_event(0.6, direction, polarized=True), 40, 200, seed=3, workers=1)
        self.assertEqual(plain.hits, polar.hits)

        with self.assertRaises(ValueError):
            estimate_tail(
                model, PowerLawRegime.create(1.0, 0.5), level_event(0.6, direction, polarized=True),
                40, 200, seed=3,
            )

    def test_wilson_intervals_cover_chi2_tail(self):
        override_setting(self, "MIN_TAIL_REPS", 200)
        n, reps, level = 10, 200, 1.3
        exact = chi2_tail_exact(n, level, 1.0)
        covered = 0
        for seed in range(200):
            estimate = estimate_tail(ModelSpec(), None, level_event(level), n, reps, seed=seed, workers=1)
            covered += estimate.ci_low <= exact <= estimate.ci_high
        # 名义覆盖率95%，200个区间中至少90%应覆盖真值
        self.assertGreaterEqual(covered, 180)

    def test_wilson_interval(self):
        low, high = wilson_interval(0, 100)
        self.assertEqual(low, 0.0)
        self.assertGreater(high, 0.0)
        low, high = wilson_interval(50, 100)
        self.assertLess(low, 0.5)
        self.assertGreater(high, 0.5)


class TestLdpSlope(unittest.TestCase):
    def test_oracle_converges(self):
        report = ldp_slope(ModelSpec(), None, level_event(1.8), [25, 50, 100, 200, 400], 0, seed=0)
        self.assertAlmostEqual(report.reference_rate, 0.5 * (0.8 - math.log(1.8)), places=8)
        self.assertTrue(all(row.source == "oracle" and row.reps == 0 for row in report.rows))
        self.assertTrue(report.gaps_shrinking)
        self.assertLess(report.rows[-1].gap, 0.10)
        self.assertEqual(report.violations(), [])

    def test_coarse_grid_reported(self):
        report = ldp_slope(ModelSpec(), None, level_event(1.8), [25, 50], 0, seed=0)
        self.assertTrue(report.violations())

    def test_invalid_grid(self):
        with self.assertRaises(ValueError):
            ldp_slope(ModelSpec(), None, level_event(1.8), [50, 25], 0, seed=0)
        with self.assertRaises(ValueError):
            ldp_slope(ModelSpec(), None, level_event(1.8), [], 0, seed=0)

    def test_monte_carlo_with_regime(self):
        report = ldp_slope(
            ModelSpec(), PowerLawRegime.create(6.0, 0.9), level_event(1.3), [20], 1000, seed=5, workers=1
        )
        self.assertEqual(report.rows[0].source, "monte_carlo")
        self.assertEqual(report.rows[0].reps, 1000)
        self.assertGreater(report.rows[0].p_hat, 0.0)

    def test_polarized_slopes_agree(self):
        model = ModelSpec.constant(rho=0.5)
        direction = (1.0, 1.0, 2.0)
        reports = [
            ldp_slope(model, None, level_event(3.6, direction, polarized=polarized), [40], 1000, seed=8, workers=1)
            for polarized in (False, True)
        ]
        plain, polar = (report.rows[0] for report in reports)
        self.assertEqual(plain.source, "monte_carlo")
        self.assertGreater(plain.p_hat, 0.0)
        self.assertEqual(plain.p_hat, polar.p_hat)
        self.assertAlmostEqual(plain.slope, polar.slope, places=12)
        self.assertEqual(reports[0].reference_rate, reports[1].reference_rate)


class TestMdpSlope(unittest.TestCase):
    def test_level_zero(self):
        regime = PowerLawRegime.create(6.0, 0.9, 0.1)
        event = EventSpec(Statistic.MDP_SCALED, (1.0, 0.0, 0.0), 0.0, gamma=0.1)
        report = mdp_slope(ModelSpec(), regime, event, [100], 2000, seed=11, workers=1)
        self.assertEqual(report.reference_rate, 0.0)
        row = report.rows[0]
        self.assertEqual(row.source, "monte_carlo")
        self.assertGreater(row.p_hat, 0.3)
        self.assertLess(row.p_hat, 0.6)

    def test_rejects_inadmissible_regime(self):
        regime = PowerLawRegime.create(1.0, 0.5, 0.2)
        event = EventSpec(Statistic.MDP_SCALED, (1.0, 0.0, 0.0), 0.5, gamma=0.2)
        with self.assertRaises(ValueError):
            mdp_slope(ModelSpec(), regime, event, [100], 2000, seed=1)


class TestConsistency(unittest.TestCase):
    def test_huge_threshold_matches_realized(self):
        model = ModelSpec.constant(jumps1=JumpSpec.gaussian(5.0))
        report = run_consistency(model, PowerLawRegime.create(1e12, 0.5), [20, 40], 30, seed=2, workers=1)
        self.assertEqual([row.n for row in report.rows], [20, 40])
        for row in report.rows:
            np.testing.assert_array_equal(row.threshold_error, row.plain_error)

    def test_threshold_removes_jumps(self):
        model = ModelSpec.constant(jumps1=JumpSpec.gaussian(5.0, stddev=2.0), jumps2=JumpSpec.gaussian(5.0))
        report = run_consistency(model, PowerLawRegime.create(6.0, 0.9), [10000], 50, seed=4)
        row = report.rows[0]
        self.assertLess(row.threshold_error[0], 0.15)
        self.assertLess(row.threshold_error[0], row.plain_error[0])
        self.assertEqual(len(report.to_records()), 1)

    def test_empty_grid(self):
        with self.assertRaises(ValueError):
            run_consistency(ModelSpec(), None, [], 10, seed=1)


class TestClt(unittest.TestCase):
    def test_unit_model(self):
        report = run_clt(ModelSpec(), None, 200, 5000, seed=8)
        np.testing.assert_allclose(np.diag(report.reference), [2.0, 2.0, 1.0])
        self.assertEqual(report.violations(), [])
        self.assertEqual(len(report.to_records()), 6)

    def test_degenerate_model(self):
        model = ModelSpec.constant(sigma1=0.0, sigma2=0.0)
        report = run_clt(model, None, 50, 1000, seed=1, workers=1)
        np.testing.assert_array_equal(report.sample, np.zeros((3, 3)))
        np.testing.assert_array_equal(report.reference, np.zeros((3, 3)))
        self.assertEqual(report.violations(), [])


class TestJumpFilter(unittest.TestCase):
    def test_gaussian_jumps_flagged(self):
        model = ModelSpec.constant(jumps1=JumpSpec.gaussian(5.0), jumps2=JumpSpec.gaussian(5.0))
        report = jump_filter_report(model, PowerLawRegime.create(6.0, 0.9), 10000, 100, seed=6)
        self.assertGreater(report.jump_cells, 0)
        self.assertGreater(report.flagged_fraction, 0.95)
        self.assertEqual(report.violations(), [])

    def test_fixed_size_jumps_flagged(self):
        model = ModelSpec.constant(jumps1=JumpSpec.fixed_signed(5.0, 1.0))
        report = jump_filter_report(model, PowerLawRegime.create(6.0, 0.9), 10000, 100, seed=6)
        self.assertGreater(report.legs[0].flagged_fraction, 0.999)
        self.assertEqual(report.legs[1].jump_cells, 0)
        self.assertTrue(math.isnan(report.legs[1].flagged_fraction))

    def test_no_jumps(self):
        report = jump_filter_report(ModelSpec(), PowerLawRegime.create(6.0, 0.9), 200, 10, seed=1, workers=1)
        self.assertEqual(report.jump_cells, 0)
        self.assertTrue(math.isnan(report.flagged_fraction))
        self.assertNotEqual(report.summary()["note"], "")
        self.assertEqual(report.violations(), [])

    def test_requires_regime(self):
        with self.assertRaises(ValueError):
            jump_filter_report(ModelSpec(), None, 100, 10, seed=1)


class TestCgf(unittest.TestCase):
    def test_matches_lambda(self):
        report = run_cgf(ModelSpec(), (0.05, 0.05, 0.0), 50, 2000, seed=13)
        self.assertAlmostEqual(report.reference, -math.log(0.9), places=12)
        self.assertGreater(report.stderr, 0.0)
        self.assertEqual(report.violations(), [])

    def test_moderate_deviation_scaling(self):
        n, gamma = 50, 0.1
        theta = (0.05, 0.05, 0.0)
        plain = run_cgf(ModelSpec(), theta, n, 2000, seed=13)
        self.assertIsNone(plain.gamma)
        self.assertTrue(math.isnan(plain.mdp_estimate))

        report = run_cgf(ModelSpec(), theta, n, 2000, seed=13, gamma=gamma)
        self.assertEqual(report.estimate, plain.estimate)
        scale = n / n ** (2 * gamma)
        # 两种标度下估计值与精确值之差只相差因子 n/v_n²
        self.assertAlmostEqual(report.mdp_estimate - report.mdp_reference, scale * report.gap, places=9)
        eta = 0.05 * math.sqrt(n) / n**gamma
        # 单位模型下 2Σ₁ = diag(2, 2, 1)
        self.assertAlmostEqual(report.mdp_limit, 2 * eta**2, places=12)
        self.assertEqual(report.to_records()[0]["gamma"], gamma)

        with self.assertRaises(ValueError):
            run_cgf(ModelSpec(), theta, n, 2000, seed=13, gamma=0.5)

    def test_outside_domain(self):
        with self.assertRaises(ValueError):
            run_cgf(ModelSpec(), (0.6, 0.0, 0.0), 50, 2000, seed=1)


if __name__ == "__main__":
    unittest.main()
