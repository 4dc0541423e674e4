#!/usr/bin/env python3
"""
The reward system f = (f_0, ..., f_d), the mean payoff q(u) = sum_i u_i f_i(u) and its maximum Q* over P_{d+1}.

Q* is computed by an exhaustive sweep over the regular simplex grid followed by a few rounds of local refinement
around the incumbent. The sweep is deterministic: ties are broken by the lexicographically smallest grid point.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 5/10/26
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from potluck.common import ValidationError, ConfigurationError, EvaluationError, assert_type
from potluck.expr_parser import Expr, parse, evaluate_array
from potluck.simplex import DistPoint, uniform, check_index

MAX_GRID_POINTS = 10**8
MAX_QSTAR_DIMENSION = 6
CHUNK_SIZE = 200000  # grid points evaluated at once
MAX_LOCAL_POINTS = 10**6  # points in one refinement window


@dataclass(frozen=True)
class RewardSystem:
    """
    d+1 reward functions, one per player, defined over P_{d+1}
    """
    d: int
    exprs: tuple
    closed_form: dict = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        exprs = tuple(self.exprs)
        if len(exprs) != self.d + 1:
            raise ValidationError(f"Expected {self.d + 1} reward expressions for d={self.d}, got {len(exprs)}")
        for i, e in enumerate(exprs):
            assert_type(e, Expr)
            if e.d != self.d:
                raise ValidationError(f"Reward of player {i} parsed with d={e.d}, expected d={self.d}")
        object.__setattr__(self, "exprs", exprs)
        # smoke check: every reward must be evaluable at the uniform distribution
        center = uniform(self.d)
        for i in range(self.d + 1):
            reward(self, i, center)

    @classmethod
    def from_strings(cls, sources: list, d: int) -> "RewardSystem":
        return cls(d, tuple(parse(src, d) for src in sources))

    @property
    def sources(self) -> list:
        return [e.src for e in self.exprs]


@dataclass(frozen=True)
class QStarResult:
    value: float
    argmax: DistPoint
    grid_resolution: float  # step of the exhaustive grid, 1/k
    refined: bool
    points_evaluated: int = 0
    final_step: float = 0.0  # step of the last refinement round, equals grid_resolution without refinement


def _coords(u) -> tuple:
    return u.weights if isinstance(u, DistPoint) else tuple(u)


def reward(f: RewardSystem, i: int, u: DistPoint) -> float:
    """
    Reward f_i(u) of player i
    """
    check_index(i, f.d)
    try:
        return f.exprs[i](_coords(u))
    except EvaluationError as e:
        raise e.attach(player=i)


def rewards(f: RewardSystem, u: DistPoint) -> list:
    """All rewards (f_0(u), ..., f_d(u))"""
    coords = _coords(u)
    values = []
    for i, e in enumerate(f.exprs):
        try:
            values.append(e(coords))
        except EvaluationError as err:
            raise err.attach(player=i)
    return values


def q_value(f: RewardSystem, u: DistPoint) -> float:
    """
    Mean payoff q(u) = sum_{i=0..d} u_i f_i(u)
    """
    coords = _coords(u)
    if len(coords) != f.d + 1:
        raise ValidationError(f"point has {len(coords)} coordinates, reward system expects {f.d + 1}")
    return math.fsum(w * r for w, r in zip(coords, rewards(f, coords)))


def q_array(f: RewardSystem, points: np.ndarray) -> np.ndarray:
    """
    Vectorized q over the rows of points (shape (N, d+1))
    """
    total = np.zeros(points.shape[0])
    for i, e in enumerate(f.exprs):
        try:
            total += points[:, i] * evaluate_array(e, points)
        except EvaluationError as err:
            raise err.attach(player=i)
    return total


def iid_payoff(f: RewardSystem, p: DistPoint) -> float:
    """
    Asymptotic payoff rate of the i.i.d.(p) strategy: the empirical frequencies converge to p almost surely, so the
    rate is q(p)
    """
    assert_type(p, DistPoint)
    return q_value(f, p)


def grid_size(d: int, k: int) -> int:
    """Number of points of the simplex grid with k steps per unit in d+1 coordinates"""
    return math.comb(k + d, d)


def _grid_chunks(d: int, k: int):
    """
    Yields the grid points {k_i / k, sum(k_i) = k} in lexicographic order of (k_0, ..., k_d), in chunks. Uses the
    stars and bars bijection with the d-combinations of range(k + d).
    """
    combos = itertools.combinations(range(k + d), d)
    while True:
        chunk = list(itertools.islice(combos, CHUNK_SIZE))
        if not chunk:
            return
        bars = np.array(chunk, dtype=np.int64).reshape(len(chunk), d)
        edges = np.hstack([np.full((len(chunk), 1), -1), bars, np.full((len(chunk), 1), k + d)])
        counts = np.diff(edges, axis=1) - 1
        yield counts / k


def _local_offsets(d: int) -> tuple:
    """Integer offsets of the refinement window around the incumbent, and the window radius"""
    radius = 10
    while (2 * radius + 1) ** d > MAX_LOCAL_POINTS and radius > 1:
        radius -= 1
    axes = [np.arange(-radius, radius + 1)] * d
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, d), radius


def q_star(f: RewardSystem, resolution: float = 1 / 200, refine_iters: int = 3, log=None) -> QStarResult:
    """
    Maximizes q over P_{d+1}: exhaustive sweep of the regular grid with step 'resolution' followed by refine_iters
    rounds of local refinement (step divided by 10 around the incumbent)
    :param f: reward system
    :param resolution: grid step, 1/resolution is rounded to the nearest integer
    :param refine_iters: number of refinement rounds
    :returns: QStarResult
    """
    if not log:
        log = logging.getLogger()
    if not 0 < resolution < 1:
        raise ConfigurationError(f"resolution should be in (0, 1), got {resolution}")
    if refine_iters < 0:
        raise ConfigurationError(f"refine_iters should be >= 0, got {refine_iters}")
    if f.d > MAX_QSTAR_DIMENSION:
        raise ConfigurationError(f"Q* grid search supports d <= {MAX_QSTAR_DIMENSION}, got d={f.d}")

    d = f.d
    k = max(1, round(1 / resolution))
    npoints = grid_size(d, k)
    if npoints > MAX_GRID_POINTS:
        raise ConfigurationError(f"Grid with resolution {resolution} has {npoints} points (limit {MAX_GRID_POINTS}),"
                                 f" please coarsen the resolution")

    log.debug(f"Q* sweep over {npoints} grid points (d={d}, step 1/{k})")
    best_value = -math.inf
    best_point = None
    for points in _grid_chunks(d, k):
        values = q_array(f, points)
        idx = int(np.argmax(values))  # first occurrence -> lexicographically smallest
        if values[idx] > best_value:
            best_value = float(values[idx])
            best_point = points[idx]

    incumbent = DistPoint(tuple(best_point))
    value = q_value(f, incumbent)
    step = 1 / k
    evaluated = npoints

    if d > 0:
        offsets, radius = _local_offsets(d)
        for _ in range(refine_iters):
            step = step / 10
            center = np.array(incumbent.weights[1:])
            free = center + offsets * step
            free = np.where(np.abs(free) < 1e-15, 0.0, free)
            first = 1.0 - free.sum(axis=1)
            first = np.where(np.abs(first) < 1e-15, 0.0, first)
            points = np.hstack([first[:, None], free])
            valid = np.all(points >= 0, axis=1) & np.all(points <= 1, axis=1)
            points = points[valid]
            evaluated += len(points)
            values = q_array(f, points)
            idx = int(np.argmax(values))
            candidate = DistPoint(tuple(points[idx]))
            candidate_value = q_value(f, candidate)
            if candidate_value > value:
                incumbent, value = candidate, candidate_value
            log.debug(f"refinement step {step:.3g} (window radius {radius}): q={value!r}")

    return QStarResult(value, incumbent, 1 / k, refine_iters > 0, evaluated, final_step=step)


def linear_family(a: float, b: float) -> RewardSystem:
    """
    Two-player system f_0(u) = a*u1, f_1(u) = b*(1-u1). Its closed forms are attached as closed_form:
        greedy_limit: limit of the empirical frequency of player 1 under the greedy strategy, b/(a+b)
        greedy_rate: payoff rate of the greedy strategy, ab/(a+b)
        q_star: (a+b)/4, reached at u1 = 1/2
    """
    if a <= 0 or b <= 0:
        raise ValidationError(f"linear family needs positive parameters, got a={a}, b={b}")
    closed_form = {
        "a": a,
        "b": b,
        "greedy_limit": b / (a + b),
        "greedy_rate": a * b / (a + b),
        "q_star": (a + b) / 4,
        "argmax": 0.5,
        "lipschitz": a + b,  # of the gradient field b - (a+b)v
    }
    return RewardSystem(1, (parse(f"{a!r}*u1", 1), parse(f"{b!r}*(1-u1)", 1)), closed_form=closed_form)
