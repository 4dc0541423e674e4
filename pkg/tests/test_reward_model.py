#!/usr/bin/env python3
"""

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 13/10/26
"""
import unittest
import os
import sys

import numpy as np

try:
    from potluck.reward_model import RewardSystem, reward, rewards, q_value, q_array, q_star, iid_payoff, \
        linear_family, grid_size
    from potluck.simplex import DistPoint, uniform
    from potluck.common import ValidationError, ConfigurationError, EvaluationError
except ModuleNotFoundError:
    current_dir = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, os.path.abspath(os.path.join(current_dir, os.pardir)))
    from potluck.reward_model import RewardSystem, reward, rewards, q_value, q_array, q_star, iid_payoff, \
        linear_family, grid_size
    from potluck.simplex import DistPoint, uniform
    from potluck.common import ValidationError, ConfigurationError, EvaluationError


def random_polynomial(rng, d: int, terms: int = 4, degree: int = 3) -> str:
    """Random polynomial in u0..ud with coefficients in [-2, 2]"""
    parts = [f"({rng.uniform(-2, 2):.3f})"]
    for _ in range(terms):
        factors = [f"u{int(rng.integers(0, d + 1))}" for _ in range(int(rng.integers(1, degree + 1)))]
        parts.append(f"({rng.uniform(-2, 2):.3f})*" + "*".join(factors))
    return " + ".join(parts)


class TestRewardModel(unittest.TestCase):
    def test_01_reward_system(self):
        f = RewardSystem.from_strings(["u1", "1 - u1"], 1)
        self.assertEqual(f.sources, ["u1", "1 - u1"])
        with self.assertRaises(ValidationError):
            RewardSystem.from_strings(["u1"], 1)
        with self.assertRaises(EvaluationError):
            RewardSystem.from_strings(["1/(u0 - 0.5)", "1"], 1)  # not defined at the uniform distribution

    def test_02_rewards_and_q(self):
        f = linear_family(1, 2)
        u = DistPoint((0.75, 0.25))
        self.assertEqual(reward(f, 0, u), 0.25)
        self.assertEqual(reward(f, 1, u), 1.5)
        self.assertEqual(rewards(f, u), [0.25, 1.5])
        self.assertAlmostEqual(q_value(f, u), 0.75 * 0.25 + 0.25 * 1.5, places=15)
        self.assertAlmostEqual(q_value(f, uniform(1)), 0.75, places=15)
        with self.assertRaises(ValidationError):
            reward(f, 2, u)
        with self.assertRaises(ValidationError):
            q_value(f, uniform(2))

        points = np.random.default_rng(0).dirichlet(np.ones(2), size=100)
        vectorized = q_array(f, points)
        for p, value in zip(points, vectorized):
            self.assertAlmostEqual(value, q_value(f, tuple(p)), places=13)

    def test_03_errors_name_the_player(self):
        f = RewardSystem.from_strings(["1/u0", "1"], 1)
        with self.assertRaises(EvaluationError) as ctx:
            reward(f, 0, DistPoint((0.0, 1.0)))
        self.assertEqual(ctx.exception.player, 0)
        self.assertIn("player 0", str(ctx.exception))

    def test_04_qstar_linear(self):
        for a, b in [(1, 2), (1, 1), (3, 0.5)]:
            f = linear_family(a, b)
            result = q_star(f, resolution=1 / 200, refine_iters=3)
            self.assertLessEqual(abs(result.value - (a + b) / 4), 2e-5)
            self.assertLessEqual(abs(result.argmax[1] - 0.5), 1e-4)
            self.assertTrue(result.refined)

    def test_05_qstar_simple_systems(self):
        f = RewardSystem.from_strings(["3", "3"], 1)
        self.assertEqual(q_star(f).value, 3.0)

        f = RewardSystem.from_strings(["u0", "u1", "u2"], 2)
        result = q_star(f, resolution=1 / 50, refine_iters=1)
        self.assertAlmostEqual(result.value, 1.0, places=12)
        # ties between the three vertices go to the lexicographically smallest grid point
        self.assertEqual(result.argmax.weights, (0.0, 0.0, 1.0))

    def test_06_qstar_refinement_never_worsens(self):
        f = RewardSystem.from_strings(["sin(7*u1)", "u0*u1^2", "cos(5*u2)"], 2)
        coarse = q_star(f, resolution=1 / 20, refine_iters=0)
        fine = q_star(f, resolution=1 / 20, refine_iters=3)
        self.assertGreaterEqual(fine.value, coarse.value)
        self.assertFalse(coarse.refined)

    def test_07_grid_guard(self):
        self.assertEqual(grid_size(1, 200), 201)
        self.assertEqual(grid_size(2, 2), 6)
        f = RewardSystem.from_strings(["u0"] + ["u1"] * 6, 6)
        with self.assertRaises(ConfigurationError):
            q_star(f, resolution=1 / 200)
        f = RewardSystem.from_strings(["u0"] * 8, 7)
        with self.assertRaises(ConfigurationError):
            q_star(f, resolution=1 / 4)
        with self.assertRaises(ConfigurationError):
            q_star(linear_family(1, 2), resolution=0)

    def test_08_linear_family(self):
        f = linear_family(1, 2)
        self.assertAlmostEqual(f.closed_form["greedy_limit"], 2 / 3)
        self.assertAlmostEqual(f.closed_form["greedy_rate"], 2 / 3)
        self.assertEqual(f.closed_form["q_star"], 0.75)
        self.assertEqual(f.closed_form["lipschitz"], 3)
        with self.assertRaises(ValidationError):
            linear_family(0, 1)
        self.assertEqual(f, RewardSystem.from_strings(["1*u1", "2*(1-u1)"], 1))

    def test_09_iid_payoff(self):
        f = linear_family(1, 2)
        self.assertAlmostEqual(iid_payoff(f, DistPoint((0.5, 0.5))), 0.75, places=15)
        self.assertAlmostEqual(iid_payoff(f, DistPoint((1.0, 0.0))), 0.0, places=15)

    def test_10_q_between_rewards(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            d = int(rng.integers(1, 4))
            f = RewardSystem.from_strings([random_polynomial(rng, d) for _ in range(d + 1)], d)
            for p in rng.dirichlet(np.ones(d + 1), size=100):
                u = DistPoint(tuple(p))
                values = rewards(f, u)
                self.assertGreaterEqual(q_value(f, u), min(values) - 1e-12)
                self.assertLessEqual(q_value(f, u), max(values) + 1e-12)

    def test_11_scaling(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            d = int(rng.integers(1, 3))
            sources = [random_polynomial(rng, d) for _ in range(d + 1)]
            f = RewardSystem.from_strings(sources, d)
            doubled = RewardSystem.from_strings([f"2*({s})" for s in sources], d)
            u = DistPoint(tuple(rng.dirichlet(np.ones(d + 1))))
            self.assertAlmostEqual(q_value(doubled, u), 2 * q_value(f, u), delta=1e-12 * abs(q_value(f, u)))
            single = q_star(f, resolution=1 / 50, refine_iters=2).value
            double = q_star(doubled, resolution=1 / 50, refine_iters=2).value
            self.assertAlmostEqual(double, 2 * single, delta=1e-12 * max(abs(single), 1e-300))

    def test_12_qstar_steps(self):
        result = q_star(linear_family(1, 2), resolution=1 / 200, refine_iters=3)
        self.assertEqual(result.grid_resolution, 1 / 200)
        self.assertAlmostEqual(result.final_step, 5e-6, delta=1e-18)
        result = q_star(linear_family(1, 2), resolution=1 / 200, refine_iters=0)
        self.assertEqual(result.final_step, result.grid_resolution)


if __name__ == "__main__":
    unittest.main(failfast=True, verbosity=1)
