"""
路径模拟模块的单元测试
"""

import math
import unittest

import numpy as np

from covol_ldp.core.model import JumpCoupling, JumpSpec, ModelSpec
from covol_ldp.core.simulate import SampledPath, derive_subseed, simulate_path


class TestSimulatePath(unittest.TestCase):
    def test_degenerate_model(self):
        model = ModelSpec.constant(sigma1=0.0, sigma2=0.0)
        path, truth = simulate_path(model, 20, seed=1)
        for name in SampledPath.array_fields():
            self.assertFalse(np.any(getattr(path, name)), name)
        self.assertEqual(truth.sum_sq1, 0.0)

    def test_no_jumps(self):
        path, truth = simulate_path(ModelSpec(), 100, seed=2)
        self.assertFalse(np.any(path.dj1))
        self.assertFalse(np.any(path.dj2))
        self.assertFalse(np.any(path.jump_counts1))
        self.assertFalse(np.any(path.jump_counts2))

    def test_decomposition_identity(self):
        model = ModelSpec.constant(
            1.3, 0.7, -0.4, drift1=0.5, drift2=-1.0,
            jumps1=JumpSpec.gaussian(50.0), jumps2=JumpSpec.laplace(30.0, 0.5),
        )
        path, _ = simulate_path(model, 500, seed=3)
        np.testing.assert_array_equal(path.dx1, path.dd1 + path.db1 + path.dj1)
        np.testing.assert_array_equal(path.dx2, path.dd2 + path.db2 + path.dj2)
        self.assertTrue(np.all(path.dj1[path.jump_counts1 == 0] == 0.0))
        self.assertTrue(np.all(path.dj2[path.jump_counts2 == 0] == 0.0))
        # 漂移增量为每格上的精确积分
        np.testing.assert_allclose(path.db1, 0.5 / 500)

    def test_deterministic(self):
        model = ModelSpec.constant(jumps1=JumpSpec.gaussian(5.0), jumps2=JumpSpec.gaussian(5.0))
        first, truth1 = simulate_path(model, 200, seed=42)
        second, truth2 = simulate_path(model, 200, seed=42)
        for name in SampledPath.array_fields():
            np.testing.assert_array_equal(getattr(first, name), getattr(second, name))
        self.assertEqual(truth1, truth2)

        other, _ = simulate_path(model, 200, seed=43)
        self.assertFalse(np.array_equal(first.dx1, other.dx1))

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            simulate_path(ModelSpec(), 0, seed=1)
        with self.assertRaises(ValueError):
            simulate_path(ModelSpec(), 10, seed=-1)
        with self.assertRaises(ValueError):
            simulate_path(ModelSpec(), True, seed=1)

    def test_numpy_integer_arguments(self):
        expected, _ = simulate_path(ModelSpec(), 100, seed=1)
        path, _ = simulate_path(ModelSpec(), np.int64(100), seed=np.uint32(1))
        self.assertEqual(path.n, 100)
        self.assertIs(type(path.n), int)
        self.assertIs(type(path.seed), int)
        np.testing.assert_array_equal(path.dx1, expected.dx1)

    def test_arrays_are_read_only(self):
        path, _ = simulate_path(ModelSpec(), 10, seed=1)
        with self.assertRaises(ValueError):
            path.dx1[0] = 1.0

    def test_cell_covariance(self):
        # 常系数时各格增量独立同分布，√n·dd 的样本协方差应为 (σ1², σ2², σ1σ2ρ)
        n = 100000
        path, _ = simulate_path(ModelSpec.constant(1.0, 2.0, 0.5), n, seed=7)
        d1 = path.dd1 * math.sqrt(n)
        d2 = path.dd2 * math.sqrt(n)

        self.assertAlmostEqual(np.mean(d1 * d1), 1.0, delta=4 * math.sqrt(2.0 / n))
        self.assertAlmostEqual(np.mean(d2 * d2), 4.0, delta=4 * 4.0 * math.sqrt(2.0 / n))
        # Var(Z1 Z2) = σ1²σ2²(1+ρ²)
        self.assertAlmostEqual(np.mean(d1 * d2), 1.0, delta=4 * math.sqrt(4.0 * 1.25 / n))

    def test_realized_variance_of_diffusion(self):
        n = 100000
        path, _ = simulate_path(ModelSpec(), n, seed=8)
        self.assertAlmostEqual(float(np.sum(path.dd1**2)), 1.0, delta=4 * math.sqrt(2.0 / n))

    def test_exponential_tail_bound(self):
        n = 50000
        path, _ = simulate_path(ModelSpec(), n, seed=9)
        cell_variance = 1.0 / n
        for ratio in (1.0, 4.0, 9.0):
            frequency = float(np.mean(path.dd1**2 > ratio * cell_variance))
            bound = math.exp(-ratio / 2.0)
            stderr = math.sqrt(bound * (1 - bound) / n)
            self.assertLessEqual(frequency, bound + 3 * stderr)

    def test_poisson_count_mean(self):
        n = 10000
        model = ModelSpec.constant(jumps1=JumpSpec.gaussian(20000.0))
        path, truth = simulate_path(model, n, seed=10)
        expected = 20000.0 / n
        self.assertAlmostEqual(float(np.mean(path.jump_counts1)), expected, delta=4 * math.sqrt(expected / n))
        self.assertGreater(truth.sum_sq1, 0.0)
        self.assertEqual(truth.sum_cross, 0.0)

    def test_common_clock(self):
        model = ModelSpec.constant(
            sigma1=0.0,
            sigma2=0.0,
            jumps1=JumpSpec.fixed_signed(30.0, 1.0, up_probability=1.0),
            jumps2=JumpSpec.fixed_signed(30.0, 3.0, up_probability=1.0),
            jump_coupling=JumpCoupling.COMMON_CLOCK,
        )
        path, truth = simulate_path(model, 100, seed=11)
        np.testing.assert_array_equal(path.jump_counts1, path.jump_counts2)
        np.testing.assert_array_equal(path.dx2, 3.0 * path.dx1)

        count = int(path.jump_counts1.sum())
        self.assertEqual(truth.sum_sq1, float(count))
        self.assertEqual(truth.sum_sq2, 9.0 * count)
        self.assertEqual(truth.sum_cross, 3.0 * count)


class TestDeriveSubseed(unittest.TestCase):
    def test_deterministic(self):
        self.assertEqual(derive_subseed(123, 4), derive_subseed(123, 4))

    def test_distinct(self):
        self.assertNotEqual(derive_subseed(123, 0), derive_subseed(123, 1))
        self.assertNotEqual(derive_subseed(123, 5), derive_subseed(124, 5))
        seeds = {derive_subseed(2024, i) for i in range(1000)}
        self.assertEqual(len(seeds), 1000)

    def test_range(self):
        value = derive_subseed(2**64 - 1, 7)
        self.assertGreaterEqual(value, 0)
        self.assertLess(value, 2**64)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            derive_subseed(1, -1)
        with self.assertRaises(ValueError):
            derive_subseed(-5, 0)


if __name__ == "__main__":
    unittest.main()
