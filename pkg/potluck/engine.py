#!/usr/bin/env python3
"""
Simulation loop. At every step n = 1..horizon the strategy nominates a player i looking at x̄_{n-1}, the player
receives r_n = f_i(x̄_{n-1}) (evaluated BEFORE the update), then the empirical frequencies and the running payoff
average are updated:

    x̄_n = x̄_{n-1} + (e_i - x̄_{n-1}) / n          A_n = A_{n-1} + (r_n - A_{n-1}) / n

The weighted variant replaces 1/n by Δ_n / S_n with S_n = Δ_1 + ... + Δ_n.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 9/10/26
"""
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from potluck.common import ValidationError, ConfigurationError, EvaluationError, WeightValidationError, \
    NeedsFullTrajectoryError, LoggerSuperclass, CYN, assert_type
from potluck.reward_model import RewardSystem, reward
from potluck.schemas import weight_kinds
from potluck.simplex import DistPoint, uniform, update_empirical, weighted_update_empirical
from potluck.strategies import Strategy, choose, make_rng

MAX_RECORDS = 100000
MIN_VALIDATION_HORIZON = 100
TAIL_RATIO_TOLERANCE = 0.05
GROWTH_TOLERANCE = 1e-3


# ---------------- Weights ---------------- #
@dataclass(frozen=True)
class WeightSequence:
    """
    Weights Δ_n, n >= 1:
        constant:  Δ_n = value
        power:     Δ_n = n^theta
        geometric: Δ_n = r^n
        custom:    Δ_n = values[n-1]
    """
    kind: str
    theta: float = 0.0
    r: float = 1.0
    value: float = 1.0
    values: tuple = None

    def __post_init__(self):
        if self.kind not in weight_kinds:
            raise ValidationError(f"Unknown weights kind '{self.kind}', expected one of {weight_kinds}")
        if self.kind == "constant" and not self.value >= 0:
            raise ValidationError(f"constant weight should be >= 0, got {self.value}")
        if self.kind == "geometric" and not self.r > 0:
            raise ValidationError(f"geometric ratio should be > 0, got {self.r}")
        if self.kind == "custom":
            if not self.values:
                raise ValidationError("custom weights need a non-empty list of values")
            object.__setattr__(self, "values", tuple(float(x) for x in self.values))

    def delta(self, n: int) -> float:
        if self.kind == "constant":
            return float(self.value)
        elif self.kind == "power":
            return float(n) ** self.theta
        elif self.kind == "geometric":
            try:
                return self.r ** n
            except OverflowError:
                raise ConfigurationError(f"geometric weight r^n overflows at n={n} (r={self.r})")
        if n > len(self.values):
            raise ConfigurationError(f"custom weights have {len(self.values)} values, step {n} requested")
        return self.values[n - 1]

    def log_deltas(self, horizon: int) -> np.ndarray:
        """log(Δ_n) for n = 1..horizon, -inf for zero weights, nan for negative weights"""
        n = np.arange(1, horizon + 1, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "constant":
                return np.full(horizon, np.log(self.value) if self.value > 0 else -np.inf)
            elif self.kind == "power":
                return self.theta * np.log(n)
            elif self.kind == "geometric":
                return n * math.log(self.r)
            return np.log(np.array(self.values[:horizon], dtype=float))

    def min_delta(self, horizon: int) -> float:
        if self.kind == "constant":
            return float(self.value)
        elif self.kind == "power":
            return float(min(1.0, float(horizon) ** self.theta))
        elif self.kind == "geometric":
            return float(self.r ** horizon) if self.r < 1 else float(self.r)
        return float(min(self.values[:horizon]))

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "constant":
            doc["value"] = self.value
        elif self.kind == "power":
            doc["theta"] = self.theta
        elif self.kind == "geometric":
            doc["r"] = self.r
        else:
            doc["values"] = list(self.values)
        return doc


def validate_weights(w: WeightSequence, horizon: int) -> dict:
    """
    Checks numerically the three conditions on a weight sequence: Δ_n >= 0, S_n -> +inf and Δ_n / S_n -> 0. The
    cumulative sums are computed in log space so that fast growing sequences don't overflow.
    :param w: weight sequence
    :param horizon: number of steps inspected (>= 100). Custom lists may be inspected over fewer steps, only their
        length and sign are checked then, a finite list says nothing about the limits
    :returns: report dict, report["verdict"] is "pass" or "fail"
    """
    if horizon < MIN_VALIDATION_HORIZON and w.kind != "custom":
        raise ConfigurationError(f"weight validation needs horizon >= {MIN_VALIDATION_HORIZON}, got {horizon}")
    failed = []
    report = {"kind": w.kind, "horizon": horizon}

    if w.kind == "custom" and len(w.values) < horizon:
        report.update({"min_delta": float(min(w.values)), "verdict": "fail", "failed": ["length"],
                       "message": f"custom weights have {len(w.values)} values, {horizon} required"})
        return report

    report["min_delta"] = w.min_delta(horizon)
    report["nonnegative"] = bool(report["min_delta"] >= 0)
    if not report["nonnegative"]:
        failed.append("nonnegative")

    if horizon < MIN_VALIDATION_HORIZON:
        report.update({"growth": None, "ratio_vanishing": None, "failed": failed,
                       "verdict": "fail" if failed else "pass"})
        return report

    log_d = w.log_deltas(horizon)
    log_d = np.where(np.isnan(log_d), -np.inf, log_d)  # negative weights already reported
    log_s = np.logaddexp.accumulate(log_d)
    half = horizon // 2
    with np.errstate(invalid="ignore"):
        log_growth = log_s[-1] - log_s[half - 1]
    report["log_S_half"] = float(log_s[half - 1])
    report["log_S_horizon"] = float(log_s[-1])
    with np.errstate(over="ignore"):
        s_half, s_horizon = float(np.exp(log_s[half - 1])), float(np.exp(log_s[-1]))
    report["S_half"] = s_half if math.isfinite(s_half) else None  # beyond float range, see the log values
    report["S_horizon"] = s_horizon if math.isfinite(s_horizon) else None
    report["growth"] = bool(log_growth > math.log1p(GROWTH_TOLERANCE))
    if not report["growth"]:
        failed.append("growth")

    tail = max(1, math.ceil(horizon / 10))
    with np.errstate(invalid="ignore"):
        ratios = np.exp(log_d[-tail:] - log_s[-tail:])
    ratios = np.nan_to_num(ratios, nan=0.0)
    first, last = float(ratios[0]), float(ratios[-1])
    margin = 1e-6 * max(abs(first), abs(last))
    if last < first - margin:
        trend = "decreasing"
    elif last > first + margin:
        trend = "increasing"
    else:
        trend = "flat"
    report["tail_max_ratio"] = float(ratios.max())
    report["tail_trend"] = trend
    report["ratio_vanishing"] = bool(trend != "increasing" and
                                     (trend == "decreasing" or report["tail_max_ratio"] <= TAIL_RATIO_TOLERANCE))
    if not report["ratio_vanishing"]:
        failed.append("ratio_vanishing")

    report["failed"] = failed
    report["verdict"] = "fail" if failed else "pass"
    return report


# ---------------- Scenario ---------------- #
def default_stride(horizon: int) -> int:
    return 1 if horizon <= MAX_RECORDS else math.ceil(horizon / MAX_RECORDS)


@dataclass(frozen=True)
class Scenario:
    f: RewardSystem
    strategy: Strategy
    horizon: int
    x0: DistPoint = None  # None means uniform
    seed: int = 0
    weights: WeightSequence = None
    record_stride: int = None  # None means automatic

    def __post_init__(self):
        assert_type(self.f, RewardSystem)
        assert_type(self.strategy, Strategy)
        if type(self.horizon) is not int or self.horizon < 1:
            raise ValidationError(f"horizon should be an integer >= 1, got {self.horizon!r}")
        if self.record_stride is not None and (type(self.record_stride) is not int or self.record_stride < 1):
            raise ValidationError(f"record_stride should be an integer >= 1, got {self.record_stride!r}")
        if self.x0 is not None and self.x0.d != self.f.d:
            raise ValidationError(f"x0 has {len(self.x0)} coordinates, expected {self.f.d + 1}")
        self.strategy.check_dimension(self.f.d)

    @property
    def start(self) -> DistPoint:
        return self.x0 if self.x0 is not None else uniform(self.f.d)

    @property
    def stride(self) -> int:
        return self.record_stride if self.record_stride is not None else default_stride(self.horizon)


# ---------------- Trajectory ---------------- #
@dataclass
class Trajectory:
    """
    Recorded steps of a run. Row k holds step n[k]: the chosen player, the state before the play (bars[k] = x̄_{n-1}),
    the reward, the running average and the cumulative weight S_n.
    """
    d: int
    stride: int
    n: np.ndarray
    choice: np.ndarray
    reward: np.ndarray
    running_avg: np.ndarray
    s_n: np.ndarray
    bars: np.ndarray
    bar_final: DistPoint
    a_final: float
    horizon: int
    weighted: bool = False
    deltas: np.ndarray = None  # per recorded step, weighted mode only
    weight_report: dict = field(default=None)

    def __len__(self):
        return len(self.n)

    def bar_before(self, k: int) -> DistPoint:
        return DistPoint.trusted(tuple(float(x) for x in self.bars[k]))

    @property
    def steps(self):
        """Iterates over the records as (n, choice, bar_before, reward, running_avg, S_n)"""
        for k in range(len(self.n)):
            yield (int(self.n[k]), int(self.choice[k]), self.bar_before(k), float(self.reward[k]),
                   float(self.running_avg[k]), float(self.s_n[k]))

    @property
    def columns(self) -> list:
        return ["n", "choice", "reward", "running_avg", "S_n"] + [f"bar_{i}" for i in range(self.d + 1)]

    def to_dataframe(self) -> pd.DataFrame:
        df = pd.DataFrame({
            "n": self.n,
            "choice": self.choice,
            "reward": self.reward,
            "running_avg": self.running_avg,
            "S_n": self.s_n,
        })
        for i in range(self.d + 1):
            df[f"bar_{i}"] = self.bars[:, i]
        return df

    def to_csv(self, filename: str):
        from potluck.outputs import write_dataframe
        write_dataframe(self.to_dataframe(), filename)

    def terminal(self) -> dict:
        return {"bar_final": list(self.bar_final.weights), "A_final": self.a_final, "horizon": self.horizon}

    def verify_running_average(self) -> float:
        """
        Recomputes the running averages from the recorded rewards and returns the maximal deviation
        """
        if self.stride != 1:
            raise NeedsFullTrajectoryError(f"running average check needs a full trajectory (stride={self.stride})")
        if self.weighted:
            acc = np.cumsum(self.deltas * self.reward)
            with np.errstate(divide="ignore", invalid="ignore"):
                expected = acc / self.s_n
            defined = self.s_n > 0
            if not defined.any():
                return 0.0
            return float(np.max(np.abs(expected[defined] - self.running_avg[defined])))
        expected = np.cumsum(self.reward) / self.n
        return float(np.max(np.abs(expected - self.running_avg)))


class _Recorder:
    def __init__(self, horizon: int, stride: int, d: int, weighted: bool):
        self.stride = stride
        self.horizon = horizon
        size = horizon // stride + (1 if horizon % stride else 0)
        self.n = np.zeros(size, dtype=np.int64)
        self.choice = np.zeros(size, dtype=np.int64)
        self.reward = np.zeros(size)
        self.running_avg = np.zeros(size)
        self.s_n = np.zeros(size)
        self.bars = np.zeros((size, d + 1))
        self.deltas = np.zeros(size) if weighted else None
        self.k = 0

    def __call__(self, n, i, r, a, s, bar, delta=None):
        if n % self.stride and n != self.horizon:
            return
        k = self.k
        self.n[k] = n
        self.choice[k] = i
        self.reward[k] = r
        self.running_avg[k] = a
        self.s_n[k] = s
        self.bars[k] = bar
        if self.deltas is not None:
            self.deltas[k] = delta
        self.k += 1


# ---------------- Simulator ---------------- #
class Simulator(LoggerSuperclass):
    def __init__(self, sc: Scenario, log: logging.Logger = None):
        LoggerSuperclass.__init__(self, log, "Simulator", colour=CYN)
        assert_type(sc, Scenario)
        self.sc = sc

    def run(self) -> Trajectory:
        """
        Uniform mode: x̄ updated with step 1/n, A_n is the plain running average of the rewards
        """
        sc = self.sc
        if sc.weights is not None:
            raise ConfigurationError("scenario has weights, use run_weighted")
        f, strategy, horizon = sc.f, sc.strategy, sc.horizon
        rng = make_rng(sc.seed)
        rec = _Recorder(horizon, sc.stride, f.d, weighted=False)
        self.debug(f"running {strategy.kind} strategy, d={f.d}, horizon={horizon}, stride={sc.stride}")
        t = time.time()

        bar = sc.start
        a = 0.0
        for n in range(1, horizon + 1):
            try:
                i = choose(strategy, n, bar, f, rng)
                r = reward(f, i, bar)
            except EvaluationError as e:
                raise e.attach(step=n)
            a = a + (r - a) / n
            rec(n, i, r, a, float(n), bar.weights)
            bar = update_empirical(bar, i, n)

        self.debug(f"run finished in {time.time() - t:.02f} s, A_final={a!r}")
        return Trajectory(f.d, sc.stride, rec.n, rec.choice, rec.reward, rec.running_avg, rec.s_n, rec.bars,
                          bar, a, horizon)

    def run_weighted(self, force: bool = False) -> Trajectory:
        """
        Weighted mode: x̄ updated with step Δ_n/S_n and A_n = (1/S_n) sum(Δ_k r_k). While S_n = 0 the state stays at x̄_0
        and the running average is undefined (NaN).
        :param force: run even if the weight sequence fails validation
        """
        sc = self.sc
        w = sc.weights
        if w is None:
            raise ConfigurationError("scenario has no weights, use run")
        f, strategy, horizon = sc.f, sc.strategy, sc.horizon

        report = validate_weights(w, horizon if w.kind == "custom" else max(horizon, MIN_VALIDATION_HORIZON))
        if report["verdict"] != "pass":
            if not force:
                msg = f"weight sequence '{w.kind}' failed validation: {', '.join(report['failed'])}"
                self.error(msg, exception=WeightValidationError(msg, report))
            self.warning(f"weight sequence failed validation ({', '.join(report['failed'])}), running anyway")

        if w.delta(1) == 0 and sc.x0 is None:
            raise ConfigurationError("first weight is zero, an explicit starting distribution x0 is required")

        rng = make_rng(sc.seed)
        rec = _Recorder(horizon, sc.stride, f.d, weighted=True)
        self.debug(f"running weighted ({w.kind}) {strategy.kind} strategy, d={f.d}, horizon={horizon}")

        bar = sc.start
        a = math.nan
        s = 0.0
        for n in range(1, horizon + 1):
            delta = w.delta(n)
            if delta < 0:
                raise ValidationError(f"negative weight {delta} at step {n}")
            try:
                i = choose(strategy, n, bar, f, rng)
                r = reward(f, i, bar)
            except EvaluationError as e:
                raise e.attach(step=n)
            s_new = s + delta
            if math.isinf(s_new):
                raise ConfigurationError(f"cumulative weight overflows at step {n}")
            before = bar.weights
            if s_new > 0:
                a = r if s == 0 else a + ((r - a) * delta) / s_new
                bar = weighted_update_empirical(bar, i, delta, s_new)
            rec(n, i, r, a, s_new, before, delta)
            s = s_new

        traj = Trajectory(f.d, sc.stride, rec.n, rec.choice, rec.reward, rec.running_avg, rec.s_n, rec.bars, bar,
                          a, horizon, weighted=True, deltas=rec.deltas, weight_report=report)
        self.debug(f"weighted run finished, S_n={s!r}, A_final={a!r}")
        return traj


def run(sc: Scenario, log: logging.Logger = None) -> Trajectory:
    return Simulator(sc, log=log).run()


def run_weighted(sc: Scenario, force: bool = False, log: logging.Logger = None) -> Trajectory:
    return Simulator(sc, log=log).run_weighted(force=force)


def simulate(sc: Scenario, force: bool = False, log: logging.Logger = None) -> Trajectory:
    """Runs a scenario in the mode it asks for (weighted when it has weights)"""
    if sc.weights is not None:
        return run_weighted(sc, force=force, log=log)
    return run(sc, log=log)
