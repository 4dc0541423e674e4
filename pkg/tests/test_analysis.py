#!/usr/bin/env python3
"""

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 15/10/26
"""
import math
import os
import sys
import tempfile
import unittest

import numpy as np
import pandas as pd

try:
    from potluck.analysis import SeriesPair, abel_identity_residual, kronecker_check, decompose_payoff_gap, \
        greedy_gap, gap_average, liminf_estimate, limit_set, greedy_optimality
    from potluck.engine import Scenario, WeightSequence, run, run_weighted
    from potluck.potential import expression_potential, build_potential_1d
    from potluck.reward_model import RewardSystem, linear_family
    from potluck.simplex import DistPoint
    from potluck.strategies import Strategy
    from potluck.common import ValidationError, ConfigurationError, NeedsFullTrajectoryError
except ModuleNotFoundError:
    current_dir = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, os.path.abspath(os.path.join(current_dir, os.pardir)))
    from potluck.analysis import SeriesPair, abel_identity_residual, kronecker_check, decompose_payoff_gap, \
        greedy_gap, gap_average, liminf_estimate, limit_set, greedy_optimality
    from potluck.engine import Scenario, WeightSequence, run, run_weighted
    from potluck.potential import expression_potential, build_potential_1d
    from potluck.reward_model import RewardSystem, linear_family
    from potluck.simplex import DistPoint
    from potluck.strategies import Strategy
    from potluck.common import ValidationError, ConfigurationError, NeedsFullTrajectoryError


class TestSeries(unittest.TestCase):
    def test_01_series_pair(self):
        s = SeriesPair([1, 1, 1], [1, 2, 3])
        self.assertEqual(len(s), 3)
        with self.assertRaises(ValidationError):
            SeriesPair([], [])
        with self.assertRaises(ValidationError):
            SeriesPair([1, 2], [1])
        with self.assertRaises(ValidationError):
            SeriesPair([1, 2], [0, 1])
        with self.assertRaises(ValidationError) as ctx:
            SeriesPair([1, 2, 3], [1, 3, 2])
        self.assertIn("b_3", str(ctx.exception))
        with self.assertRaises(ValidationError):
            SeriesPair([1, math.nan], [1, 2])
        SeriesPair([1, 2, 3], [2, 2, 2])  # flat b is allowed
        with self.assertRaises(ValidationError):
            SeriesPair.preset("geometric", 100)

    def test_02_abel_identity(self):
        self.assertLess(abel_identity_residual(SeriesPair([1, 1, 1], [1, 2, 3])), 1e-14)
        self.assertEqual(abel_identity_residual(SeriesPair(np.zeros(50), np.arange(1, 51))), 0.0)
        rng = np.random.default_rng(12)
        for _ in range(100):
            n = int(rng.integers(1, 2000))
            s = SeriesPair(rng.uniform(-1, 1, n), np.cumsum(rng.uniform(0.01, 2, n)))
            self.assertLess(abel_identity_residual(s), 1e-10)

    def test_03_kronecker_presets(self):
        diag = kronecker_check(SeriesPair.preset("alternating", 100000))
        self.assertGreaterEqual(diag.c_tail_range[0], 0.690)
        self.assertLessEqual(diag.c_tail_range[1], 0.697)
        self.assertAlmostEqual(diag.c_final, math.log(2), places=4)
        self.assertTrue(diag.hypothesis_holds)
        self.assertLessEqual(diag.tail_min_avg, 1e-4)
        self.assertEqual(diag.verdict, "consistent")

        diag = kronecker_check(SeriesPair.preset("harmonic", 100000))
        self.assertFalse(diag.hypothesis_holds)
        self.assertEqual(diag.tail_min_avg, 1.0)
        self.assertEqual(diag.verdict, "consistent")
        self.assertEqual(diag.to_dict()["length"], 100000)

    def test_04_kronecker_custom(self):
        diag = kronecker_check(SeriesPair(np.zeros(200), np.arange(1, 201)))
        self.assertEqual(diag.tail_min_avg, 0.0)
        self.assertEqual(diag.verdict, "consistent")

        # a_k = 1/k, b_k = k: C_n converges but the averages H_n/n vanish too slowly to be seen at n = 1000
        k = np.arange(1, 1001, dtype=float)
        diag = kronecker_check(SeriesPair(1 / k, k), eps=1e-4)
        self.assertTrue(diag.hypothesis_holds)
        self.assertEqual(diag.verdict, "inconsistent")

        with self.assertRaises(ValidationError):
            kronecker_check(SeriesPair(np.ones(99), np.arange(1, 100)))

    def test_05_liminf_estimate(self):
        self.assertEqual(liminf_estimate([2.5] * 20), 2.5)
        n = np.arange(1, 1001)
        self.assertAlmostEqual(liminf_estimate((-1.0) ** n + 1 / n), -1.0, delta=3e-3)
        self.assertEqual(liminf_estimate(np.arange(10), tail_fraction=0.2), 8.0)
        self.assertEqual(liminf_estimate([math.nan, 1.0] + [3.0] * 10), 3.0)
        with self.assertRaises(ValidationError):
            liminf_estimate([1.0] * 9)
        with self.assertRaises(ValidationError):
            liminf_estimate([1.0] * 20, tail_fraction=0)
        with self.assertRaises(ValidationError):
            liminf_estimate([math.nan] * 20)


class TestTrajectoryAnalysis(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.f = linear_family(1, 2)
        cls.greedy = run(Scenario(cls.f, Strategy.greedy(), 2000))

    def test_01_decomposition(self):
        phi = expression_potential("2*u1 - 1.5*u1^2", 1)
        report = decompose_payoff_gap(self.greedy, self.f, phi, 3.0)
        self.assertTrue(report.within_envelope)
        self.assertLessEqual(report.worst_envelope_ratio, 1.0)
        self.assertTrue(report.telescoping_ok)
        self.assertLessEqual(report.telescoping_residual, 1e-10)
        self.assertLessEqual(report.identity_residual, 1e-12)
        n = report.n[9:]
        self.assertTrue(np.all(np.abs(report.remainder[9:]) <= 6 * np.log(n + 1) / n))

        df = report.to_dataframe()
        self.assertEqual(list(df.columns), ["n", "G_n", "T_n", "R_n", "envelope"])
        self.assertEqual(len(df), 2000)
        summary = report.summary()
        self.assertEqual(summary["horizon"], 2000)
        self.assertEqual(summary["lipschitz"], 3.0)
        with tempfile.TemporaryDirectory() as folder:
            filename = os.path.join(folder, "decomposition.csv")
            report.to_csv(filename)
            written = pd.read_csv(filename)
        self.assertEqual(list(written.columns), ["n", "G_n", "T_n", "R_n", "envelope"])
        self.assertEqual(written["n"].tolist(), list(range(1, 2001)))

        # the tabulated potential gives the same picture
        report = decompose_payoff_gap(self.greedy, self.f, build_potential_1d(self.f), 3.0)
        self.assertTrue(report.within_envelope)

    def test_02_decomposition_degenerate(self):
        f = RewardSystem.from_strings(["2", "2"], 1)
        t = run(Scenario(f, Strategy.constant(1), 200))
        report = decompose_payoff_gap(t, f, expression_potential("0", 1), 0.0)
        self.assertTrue(np.all(report.gap_avg == 0))
        self.assertTrue(np.all(report.remainder == 0))
        self.assertTrue(report.within_envelope)

    def test_03_decomposition_errors(self):
        phi = expression_potential("2*u1 - 1.5*u1^2", 1)
        strided = run(Scenario(self.f, Strategy.greedy(), 100, record_stride=3))
        with self.assertRaises(NeedsFullTrajectoryError):
            decompose_payoff_gap(strided, self.f, phi, 3.0)
        weighted = run_weighted(Scenario(self.f, Strategy.greedy(), 200, weights=WeightSequence("constant")))
        with self.assertRaises(ConfigurationError):
            decompose_payoff_gap(weighted, self.f, phi, 3.0)
        with self.assertRaises(ValidationError):
            decompose_payoff_gap(self.greedy, self.f, expression_potential("u1*u2", 2), 3.0)
        with self.assertRaises(ValidationError):
            decompose_payoff_gap(self.greedy, self.f, phi, -1.0)

    def test_04_greedy_gap(self):
        self.assertEqual(greedy_gap(self.f, DistPoint((0.5, 0.5))), 0.25)
        self.assertEqual(greedy_gap(RewardSystem.from_strings(["4", "4", "4"], 2), DistPoint((0.2, 0.3, 0.5))), 0.0)
        self.assertEqual(greedy_gap(RewardSystem.from_strings(["u0", "u1"], 1), DistPoint((1.0, 0.0))), 0.0)

        rng = np.random.default_rng(6)
        f = RewardSystem.from_strings(["sin(3*u1) - u2", "u0*u2", "exp(u1) - 2"], 2)
        for u in rng.dirichlet(np.ones(3), size=200):
            self.assertGreaterEqual(greedy_gap(f, tuple(u)), -1e-12)

    def test_05_gap_average(self):
        averages = gap_average(self.greedy, self.f)
        self.assertEqual(len(averages), 2000)
        self.assertAlmostEqual(averages[0], 0.25, places=15)  # first step at the uniform distribution
        self.assertTrue(np.all(averages >= -1e-12))
        self.assertLess(averages[-1], 0.05)
        with self.assertRaises(NeedsFullTrajectoryError):
            gap_average(run(Scenario(self.f, Strategy.greedy(), 100, record_stride=10)), self.f)

    def test_06_liminf_of_greedy_payoff(self):
        self.assertAlmostEqual(liminf_estimate(self.greedy.running_avg), 2 / 3, delta=1e-2)

    def test_07_limit_set(self):
        result = limit_set(self.greedy)
        lo, hi = result["ranges"][1]
        self.assertGreaterEqual(lo, 0.66)
        self.assertLessEqual(hi, 0.67)
        self.assertLessEqual(result["max_step"], 1e-3)
        self.assertEqual(result["stride"], 1)
        self.assertEqual(result["samples"], 1001)
        with self.assertRaises(ValidationError):
            limit_set(self.greedy, tail_fraction=1.5)

    def test_08_greedy_optimality(self):
        result = greedy_optimality(linear_family(1, 2))
        self.assertAlmostEqual(result["q_star"], 0.75, places=12)
        self.assertLessEqual(result["argmax_range"][0], 0.5)
        self.assertGreaterEqual(result["argmax_range"][1], 0.5)
        self.assertEqual(len(result["ties"]), 1)
        self.assertAlmostEqual(result["ties"][0], 2 / 3, places=4)
        self.assertFalse(result["boundary_argmax"])
        self.assertFalse(result["greedy_can_be_optimal"])

        # a = b puts the tie exactly at the maximizer
        result = greedy_optimality(linear_family(1, 1))
        self.assertEqual(result["ties"], [0.5])
        self.assertTrue(result["greedy_can_be_optimal"])

        result = greedy_optimality(RewardSystem.from_strings(["0", "1"], 1))
        self.assertTrue(result["boundary_argmax"])
        self.assertEqual(result["argmax_range"], [1.0, 1.0])
        self.assertTrue(result["greedy_can_be_optimal"])

        with self.assertRaises(ConfigurationError):
            greedy_optimality(RewardSystem.from_strings(["u0", "u1", "u2"], 2))


if __name__ == "__main__":
    unittest.main(failfast=True, verbosity=1)
