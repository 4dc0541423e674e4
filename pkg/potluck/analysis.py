#!/usr/bin/env python3
"""
Diagnostics over series and trajectories:
    - the summation-by-parts identity behind the Kronecker-type lemma and a numerical check of its conclusion
    - the decomposition of the payoff gap into a telescoping term and a remainder R_n
    - greedy gap function, its Cesàro averages, liminf proxies and limit-set estimates

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 10/10/26
"""
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from potluck.common import ValidationError, ConfigurationError, NeedsFullTrajectoryError
from potluck.engine import Trajectory
from potluck.expr_parser import evaluate_array
from potluck.outputs import write_dataframe
from potluck.potential import Potential
from potluck.reward_model import RewardSystem, QStarResult, rewards, q_value, q_array

KRONECKER_TAIL = 0.2
ENVELOPE_START = 10
TELESCOPING_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SeriesPair:
    """
    Series a_k and positive nondecreasing b_k, k = 1..n
    """
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if len(a) < 1:
            raise ValidationError("SeriesPair needs at least one term")
        if len(a) != len(b):
            raise ValidationError(f"a and b should have the same length, got {len(a)} and {len(b)}")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise ValidationError("SeriesPair terms should be finite")
        if np.any(b <= 0):
            k = int(np.argmax(b <= 0))
            raise ValidationError(f"b should be strictly positive, b_{k + 1}={b[k]!r}")
        if np.any(np.diff(b) < 0):
            k = int(np.argmax(np.diff(b) < 0))
            raise ValidationError(f"b should be nondecreasing, b_{k + 2}={b[k + 1]!r} < b_{k + 1}={b[k]!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __len__(self):
        return len(self.a)

    @classmethod
    def preset(cls, name: str, length: int) -> "SeriesPair":
        """
        alternating: a_k = (-1)^(k+1), b_k = k (C_n converges to ln 2)
        harmonic:    a_k = 1, b_k = k (C_n diverges)
        """
        k = np.arange(1, length + 1, dtype=float)
        if name == "alternating":
            return cls(np.where(k % 2 == 1, 1.0, -1.0), k)
        elif name == "harmonic":
            return cls(np.ones(length), k)
        raise ValidationError(f"unknown preset '{name}', expected alternating or harmonic")


def abel_identity_residual(s: SeriesPair) -> float:
    """
    Compares both sides of (1/b_n) sum(a_k) = C_n - (1/b_n) sum(C_{k-1} (b_k - b_{k-1})) for every n, with
    C_n = sum(a_k / b_k), C_0 = 0 and b_0 = 0.
    :returns: max absolute residual
    """
    lhs = np.cumsum(s.a) / s.b
    c = np.cumsum(s.a / s.b)
    c_prev = np.concatenate(([0.0], c[:-1]))
    db = np.diff(s.b, prepend=0.0)
    rhs = c - np.cumsum(c_prev * db) / s.b
    return float(np.max(np.abs(lhs - rhs)))


@dataclass
class KroneckerDiagnostic:
    length: int
    c_tail_range: tuple
    c_final: float
    drift: float
    hypothesis_holds: bool
    tail_min_avg: float
    eps: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "C_tail_range": list(self.c_tail_range),
            "C_final": self.c_final,
            "drift": self.drift,
            "hypothesis_holds": self.hypothesis_holds,
            "tail_min_avg": self.tail_min_avg,
            "eps": self.eps,
            "verdict": self.verdict,
        }


def kronecker_check(s: SeriesPair, eps: float = 1e-4, tol: float = 1e-2) -> KroneckerDiagnostic:
    """
    Numerical check of the lemma: if liminf C_n is finite then liminf (1/b_n) sum(a_k) <= 0.

    The hypothesis is estimated on the last 20% of the series: it is taken to hold when the minimum of C_n over the
    second half of the tail moved less than tol from its minimum over the first half. The verdict is "consistent"
    when the hypothesis is violated or the tail minimum of the averages is <= eps.
    """
    n = len(s)
    if n < 100:
        raise ValidationError(f"kronecker check needs at least 100 terms, got {n}")
    c = np.cumsum(s.a / s.b)
    averages = np.cumsum(s.a) / s.b
    tail = max(2, math.ceil(KRONECKER_TAIL * n))
    c_tail = c[-tail:]
    half = tail // 2
    drift = float(abs(c_tail[half:].min() - c_tail[:half].min()))
    hypothesis = bool(drift <= tol)
    tail_min = float(averages[-tail:].min())
    consistent = (not hypothesis) or tail_min <= eps
    return KroneckerDiagnostic(n, (float(c_tail.min()), float(c_tail.max())), float(c[-1]), drift, hypothesis,
                               tail_min, eps, "consistent" if consistent else "inconsistent")


@dataclass
class DecompositionReport:
    """
    G_n = (1/n) sum(f_{x_{k+1}}(x̄_k) - q(x̄_k)), T_n = (1/n) sum((k+1) (Φ(x̂_{k+1}) - Φ(x̂_k))), R_n = T_n - G_n
    """
    n: np.ndarray
    gap_avg: np.ndarray
    telescope_avg: np.ndarray
    remainder: np.ndarray
    envelope: np.ndarray
    lipschitz: float
    within_envelope: bool
    worst_envelope_ratio: float
    telescoping_residual: float
    telescoping_ok: bool
    identity_residual: float

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({
            "n": self.n,
            "G_n": self.gap_avg,
            "T_n": self.telescope_avg,
            "R_n": self.remainder,
            "envelope": self.envelope,
        })

    def to_csv(self, filename: str):
        write_dataframe(self.to_dataframe(), filename)

    def summary(self) -> dict:
        return {
            "horizon": int(self.n[-1]),
            "lipschitz": self.lipschitz,
            "within_envelope": self.within_envelope,
            "worst_envelope_ratio": self.worst_envelope_ratio,
            "telescoping_residual": self.telescoping_residual,
            "telescoping_ok": self.telescoping_ok,
            "identity_residual": self.identity_residual,
            "R_final": float(self.remainder[-1]),
            "G_final": float(self.gap_avg[-1]),
        }


def _require_full(t: Trajectory, what: str):
    if t.stride != 1:
        raise NeedsFullTrajectoryError(f"{what} needs a trajectory recorded with stride 1 (got {t.stride})")


def decompose_payoff_gap(t: Trajectory, f: RewardSystem, phi: Potential, lipschitz: float) -> DecompositionReport:
    """
    Splits the gap between the rewards and the mean payoff along a trajectory into a telescoping part and a
    remainder, and compares the remainder with the envelope 2L ln(n+1)/n
    :param t: trajectory recorded with stride 1 (uniform mode)
    :param f: reward system of the run
    :param phi: potential of f
    :param lipschitz: Lipschitz constant L of the gradient of phi
    """
    _require_full(t, "payoff gap decomposition")
    if t.weighted:
        raise ConfigurationError("payoff gap decomposition is defined for uniform runs only")
    if t.d != f.d or phi.d != f.d:
        raise ValidationError(f"dimension mismatch: trajectory d={t.d}, rewards d={f.d}, potential d={phi.d}")
    if lipschitz < 0:
        raise ValidationError(f"Lipschitz constant should be >= 0, got {lipschitz}")

    n = t.n.astype(float)
    gap = t.reward - q_array(f, t.bars)
    gap_avg = np.cumsum(gap) / n

    hats = np.vstack([t.bars[:, 1:], np.array(t.bar_final.weights[1:])[None, :]])
    values = np.array([phi(v) for v in hats])
    diffs = np.diff(values)
    telescope_avg = np.cumsum(n * diffs) / n
    remainder = telescope_avg - gap_avg
    envelope = 2 * lipschitz * np.log(n + 1) / n

    check = n >= ENVELOPE_START
    if not check.any():
        worst = 0.0
    elif lipschitz > 0:
        worst = float(np.max(np.abs(remainder[check]) / envelope[check]))
    else:
        worst = 0.0 if np.all(remainder[check] == 0) else math.inf
    telescoping = float(np.max(np.abs(np.cumsum(diffs) - (values[1:] - values[0]))))
    identity = float(np.max(np.abs(gap_avg + remainder - telescope_avg)))
    return DecompositionReport(t.n.copy(), gap_avg, telescope_avg, remainder, envelope, float(lipschitz),
                               bool(worst <= 1.0), worst, telescoping, telescoping <= TELESCOPING_TOLERANCE, identity)


def greedy_gap(f: RewardSystem, bar) -> float:
    """
    φ(u) = max_i f_i(u) - q(u), non-negative since q(u) is a convex combination of the f_i(u)
    """
    return max(rewards(f, bar)) - q_value(f, bar)


def gap_average(t: Trajectory, f: RewardSystem) -> np.ndarray:
    """
    Cesàro averages (1/n) sum_{k<n} φ(x̄_k) along a full trajectory
    """
    _require_full(t, "gap average")
    values = np.vstack([evaluate_array(e, t.bars) for e in f.exprs])
    phi = values.max(axis=0) - q_array(f, t.bars)
    return np.cumsum(phi) / t.n


def liminf_estimate(series, tail_fraction: float = 0.5) -> float:
    """
    Proxy for liminf: minimum over the final ceil(tail_fraction * len) entries
    """
    series = np.asarray(series, dtype=float).reshape(-1)
    if len(series) < 10:
        raise ValidationError(f"liminf estimate needs at least 10 values, got {len(series)}")
    if not 0 < tail_fraction <= 1:
        raise ValidationError(f"tail_fraction should be in (0, 1], got {tail_fraction}")
    tail = series[-math.ceil(tail_fraction * len(series)):]
    if np.all(np.isnan(tail)):
        raise ValidationError("tail has no defined values")
    return float(np.nanmin(tail))


def limit_set(t: Trajectory, tail_fraction: float = 0.5) -> dict:
    """
    Per-coordinate range of the recorded empirical states over the tail of the run, approximating the set of limit
    points of x̄_n, and the largest move between consecutive recorded states in that tail.
    """
    if not 0 < tail_fraction <= 1:
        raise ValidationError(f"tail_fraction should be in (0, 1], got {tail_fraction}")
    states = np.vstack([t.bars, np.array(t.bar_final.weights)[None, :]])
    tail = states[-max(2, math.ceil(tail_fraction * len(states))):]
    step = np.abs(np.diff(tail, axis=0)).max(axis=1)
    return {
        "ranges": [[float(lo), float(hi)] for lo, hi in zip(tail.min(axis=0), tail.max(axis=0))],
        "max_step": float(step.max()),
        "stride": t.stride,
        "samples": len(tail),
    }


def greedy_optimality(f: RewardSystem, qs: QStarResult = None, tol: float = 1e-6, resolution: float = 1e-4) -> dict:
    """
    Two-player criterion: the greedy strategy can only be optimal if argmax q meets {0, 1} or the tie set
    {f_0 = f_1}. Both sets are located on a regular grid over u1.
    :param f: reward system with d = 1
    :param qs: optional Q* result used as the reference maximum
    :param tol: points with q >= max - tol belong to the argmax set
    :param resolution: grid step
    """
    if f.d != 1:
        raise ConfigurationError(f"greedy optimality criterion is only available for d=1, got d={f.d}")
    k = max(10, round(1 / resolution))
    v = np.linspace(0.0, 1.0, k + 1)
    points = np.column_stack([1.0 - v, v])
    q = q_array(f, points)
    qmax = max(float(q.max()), qs.value if qs is not None else -math.inf)
    argmax = np.nonzero(q >= qmax - tol)[0]

    g = evaluate_array(f.exprs[1], points) - evaluate_array(f.exprs[0], points)
    ties = set(np.nonzero(g == 0)[0].tolist())
    sign_change = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    for j in sign_change:  # closest grid point to the crossing
        ties.add(int(j) if abs(g[j]) <= abs(g[j + 1]) else int(j) + 1)
    candidates = ties | {0, k}
    near = [j for j in argmax if any(abs(j - c) <= 1 for c in candidates)]
    return {
        "q_star": qmax,
        "argmax_range": [float(v[argmax.min()]), float(v[argmax.max()])],
        "ties": sorted(float(v[j]) for j in ties),
        "boundary_argmax": bool(argmax.min() == 0 or argmax.max() == k),
        "greedy_can_be_optimal": bool(near),
    }
