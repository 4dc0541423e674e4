#!/usr/bin/env python3
"""
End-to-end checks on the reference scenarios: greedy vs i.i.d. payoff rates on the linear family, the Q* bound over
random reward systems, potentials, the Kronecker-type lemma and weighted runs.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 17/10/26
"""
import math
import os
import sys
import tempfile
import unittest

import numpy as np

try:
    from potluck.analysis import SeriesPair, abel_identity_residual, kronecker_check, decompose_payoff_gap
    from potluck.engine import Scenario, WeightSequence, simulate, run, validate_weights
    from potluck.potential import build_potential_1d, grad_condition_residual, expression_potential
    from potluck.reward_model import RewardSystem, linear_family, q_star, q_value
    from potluck.scenarios import load_scenario
    from potluck.strategies import Strategy
    from potluck.common import WeightValidationError
except ModuleNotFoundError:
    current_dir = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, os.path.abspath(os.path.join(current_dir, os.pardir)))
    from potluck.analysis import SeriesPair, abel_identity_residual, kronecker_check, decompose_payoff_gap
    from potluck.engine import Scenario, WeightSequence, simulate, run, validate_weights
    from potluck.potential import build_potential_1d, grad_condition_residual, expression_potential
    from potluck.reward_model import RewardSystem, linear_family, q_star, q_value
    from potluck.scenarios import load_scenario
    from potluck.strategies import Strategy
    from potluck.common import WeightValidationError

scenarios = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")


def random_polynomial(rng, d: int, terms: int = 4, degree: int = 3, scale: float = 2.0) -> str:
    """Random polynomial in u0..ud with coefficients in [-scale, scale]"""
    parts = [f"({rng.uniform(-scale, scale):.3f})"]
    for _ in range(terms):
        factors = [f"u{int(rng.integers(0, d + 1))}" for _ in range(int(rng.integers(1, degree + 1)))]
        parts.append(f"({rng.uniform(-scale, scale):.3f})*" + "*".join(factors))
    return " + ".join(parts)


def random_strategy(rng, kind: str, d: int, horizon: int) -> Strategy:
    if kind == "iid":
        return Strategy.iid(tuple(rng.dirichlet(np.ones(d + 1))))
    elif kind == "constant":
        return Strategy.constant(int(rng.integers(0, d + 1)))
    elif kind == "sequence":
        return Strategy.from_sequence(rng.integers(0, d + 1, horizon).tolist())
    return Strategy(kind)


class TestAcceptance(unittest.TestCase):
    def test_01_greedy_is_suboptimal(self):
        sc, _ = load_scenario(os.path.join(scenarios, "linear_greedy.json"))
        t = simulate(sc)
        self.assertLess(abs(t.bar_final[1] - 2 / 3), 5e-3)
        self.assertLess(abs(t.a_final - 2 / 3), 1e-2)
        self.assertEqual(t.stride, 2)
        self.assertEqual(len(t), 100000)

    def test_02_iid_at_the_maximizer(self):
        sc, _ = load_scenario(os.path.join(scenarios, "linear_iid.json"))
        t = simulate(sc)
        self.assertLess(abs(t.a_final - 0.75), 1e-2)

    def test_03_greedy_optimal_when_symmetric(self):
        f = linear_family(1, 1)
        self.assertEqual(f.closed_form["q_star"], 0.5)
        t = run(Scenario(f, Strategy.greedy(), 200000))
        self.assertLess(abs(t.a_final - 0.5), 1e-2)

    def test_04_qstar_grid(self):
        for a, b in [(1, 2), (2, 1), (1, 1)]:
            result = q_star(linear_family(a, b), resolution=1 / 200, refine_iters=3)
            self.assertLessEqual(abs(result.value - (a + b) / 4), 2e-5)
            self.assertLessEqual(abs(result.argmax[1] - 0.5), 1e-4)

    def test_05_potential_construction(self):
        f = linear_family(1, 2)
        phi = build_potential_1d(f, nodes=1001)
        nodes = np.linspace(0, 1, 1001)
        self.assertLessEqual(max(abs(phi((v,)) - (2 * v - 1.5 * v ** 2)) for v in nodes), 1e-10)
        for v in np.random.default_rng(0).random(50):
            self.assertLessEqual(abs(grad_condition_residual(f, phi, (v,), h=1e-5)[0]), 1e-6)

    def test_06_payoff_never_beats_qstar(self):
        rng = np.random.default_rng(2024)
        kinds = ["greedy", "iid", "round_robin", "constant", "sequence"]
        horizon = 50000
        for k in range(50):
            d = int(rng.integers(1, 4))
            f = RewardSystem.from_strings([random_polynomial(rng, d) for _ in range(d + 1)], d)
            strategy = random_strategy(rng, kinds[k % len(kinds)], d, horizon)
            t = run(Scenario(f, strategy, horizon, seed=k))
            qs = q_star(f, resolution=1 / 200, refine_iters=3)
            tail_min = float(np.min(t.running_avg[horizon // 2 - 1:]))
            self.assertLessEqual(tail_min, qs.value + 0.05, msg=f"scenario {k}: {strategy.kind} on {f.sources}")

    def test_07_convergent_strategies(self):
        rng = np.random.default_rng(7)
        for k in range(10):
            d = int(rng.integers(1, 3))
            f = RewardSystem.from_strings([random_polynomial(rng, d, terms=3, degree=2, scale=1.0)
                                           for _ in range(d + 1)], d)
            for strategy in [Strategy.constant(int(rng.integers(0, d + 1))), Strategy.round_robin()]:
                t = run(Scenario(f, strategy, 100000, seed=k))
                self.assertLess(abs(t.a_final - q_value(f, t.bar_final)), 2e-3)

    def test_08_abel_identity(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            n = int(rng.integers(1, 10001))
            s = SeriesPair(rng.uniform(-1, 1, n), np.cumsum(rng.uniform(0.1, 1, n)))
            self.assertLess(abel_identity_residual(s), 1e-10)

    def test_09_kronecker_presets(self):
        diag = kronecker_check(SeriesPair.preset("alternating", 100000), eps=1e-4)
        self.assertGreaterEqual(diag.c_tail_range[0], 0.690)
        self.assertLessEqual(diag.c_tail_range[1], 0.697)
        self.assertLessEqual(diag.tail_min_avg, 1e-4)
        self.assertEqual(diag.verdict, "consistent")
        diag = kronecker_check(SeriesPair.preset("harmonic", 100000), eps=1e-4)
        self.assertFalse(diag.hypothesis_holds)
        self.assertEqual(diag.verdict, "consistent")

    def test_10_remainder_envelope(self):
        f = linear_family(1, 2)
        t = run(Scenario(f, Strategy.greedy(), 10000))
        report = decompose_payoff_gap(t, f, expression_potential("2*u1 - 1.5*u1^2", 1), f.closed_form["lipschitz"])
        n = report.n[9:]
        self.assertTrue(np.all(np.abs(report.remainder[9:]) <= 6 * np.log(n + 1) / n))
        self.assertTrue(report.within_envelope)
        self.assertLessEqual(report.telescoping_residual, 1e-10)

    def test_11_weighted_runs(self):
        sc, _ = load_scenario(os.path.join(scenarios, "sqrt_weights.json"))
        self.assertEqual(sc.weights.theta, 0.5)
        t = simulate(sc)
        self.assertLess(abs(t.bar_final[1] - 2 / 3), 1e-2)
        self.assertLess(abs(t.a_final - 2 / 3), 1e-2)

        report = validate_weights(WeightSequence("geometric", r=2.0), 1000)
        self.assertEqual(report["verdict"], "fail")
        self.assertFalse(report["ratio_vanishing"])
        self.assertTrue(0.45 <= report["tail_max_ratio"] <= 0.55)
        sc, _ = load_scenario(os.path.join(scenarios, "geometric_weights.json"))
        with self.assertRaises(WeightValidationError):
            simulate(sc)

    def test_12_determinism(self):
        sc, _ = load_scenario(os.path.join(scenarios, "linear_sweep.json"))
        with tempfile.TemporaryDirectory() as folder:
            contents = []
            for name in ["first.csv", "second.csv"]:
                filename = os.path.join(folder, name)
                simulate(sc).to_csv(filename)
                with open(filename, "rb") as f:
                    contents.append(f.read())
        self.assertEqual(contents[0], contents[1])
        self.assertFalse(math.isnan(simulate(sc).a_final))


if __name__ == "__main__":
    unittest.main(failfast=True, verbosity=1)
