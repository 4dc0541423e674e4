#!/usr/bin/env python3
"""
Geometry of the simplices S_d = {v in [0,1]^d, sum(v) <= 1} and P_{d+1} = {u in [0,1]^{d+1}, sum(u) = 1}, the
tilde/hat coordinate maps between them and the recursive update of the empirical frequency vector.

Points are immutable values. Validation is never silent: a point either satisfies its invariants (within TOLERANCE)
or a ValidationError naming the offending coordinate is raised, nothing is re-normalized.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 3/10/26
"""
from dataclasses import dataclass

import numpy as np

from potluck.common import ValidationError

TOLERANCE = 1e-12


def _as_float_tuple(values, name: str) -> tuple:
    try:
        return tuple(float(x) for x in values)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} coordinates should be real numbers, got {values!r}")


@dataclass(frozen=True)
class DistPoint:
    """
    A point u = (u_0, ..., u_d) of P_{d+1}, e.g. the empirical frequency vector
    """
    weights: tuple

    def __post_init__(self):
        weights = _as_float_tuple(self.weights, "DistPoint")
        if len(weights) < 1:
            raise ValidationError("DistPoint needs at least one coordinate")
        for i, w in enumerate(weights):
            if not (-TOLERANCE <= w <= 1 + TOLERANCE):
                raise ValidationError(f"DistPoint coordinate u{i}={w!r} not in [0, 1]")
        total = sum(weights)
        if abs(total - 1.0) > TOLERANCE:
            raise ValidationError(f"DistPoint coordinates sum to {total!r}, expected 1 (tolerance {TOLERANCE})")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def trusted(cls, weights: tuple) -> "DistPoint":
        """
        Wraps a tuple of floats that is valid by construction (output of the update laws) without re-checking it
        """
        point = object.__new__(cls)
        object.__setattr__(point, "weights", weights)
        return point

    @property
    def d(self) -> int:
        return len(self.weights) - 1

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)

    def as_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)


@dataclass(frozen=True)
class SimplexPoint:
    """
    A point v = (v_1, ..., v_d) of S_d. Note that coords[0] is v_1
    """
    coords: tuple

    def __post_init__(self):
        coords = _as_float_tuple(self.coords, "SimplexPoint")
        for i, c in enumerate(coords):
            if not (-TOLERANCE <= c <= 1 + TOLERANCE):
                raise ValidationError(f"SimplexPoint coordinate v{i + 1}={c!r} not in [0, 1]")
        total = sum(coords)
        if total > 1 + TOLERANCE:
            raise ValidationError(f"SimplexPoint coordinates sum to {total!r} > 1")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return len(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


def tilde(v: SimplexPoint) -> DistPoint:
    """
    v = (v_1, ..., v_d) -> (1 - sum(v), v_1, ..., v_d)
    """
    if not isinstance(v, SimplexPoint):
        v = SimplexPoint(tuple(v))
    return DistPoint((1.0 - sum(v.coords),) + v.coords)


def hat(u: DistPoint) -> SimplexPoint:
    """
    u = (u_0, u_1, ..., u_d) -> (u_1, ..., u_d)
    """
    if not isinstance(u, DistPoint):
        u = DistPoint(tuple(u))
    return SimplexPoint(u.weights[1:])


def uniform(d: int) -> DistPoint:
    """Uniform distribution over the d+1 players"""
    if d < 0:
        raise ValidationError(f"dimension should be >= 0, got {d}")
    return DistPoint(tuple(1.0 / (d + 1) for _ in range(d + 1)))


def check_index(i: int, d: int):
    if type(i) is not int and not isinstance(i, np.integer):
        raise ValidationError(f"player index should be an integer, got {i!r}")
    if not 0 <= i <= d:
        raise ValidationError(f"player index {i} out of range 0..{d}")


def vertex(i: int, d: int) -> DistPoint:
    """
    Point mass on player i, i.e. the indicator 1{x_k = i} as a point of P_{d+1}
    """
    check_index(i, d)
    return DistPoint.trusted(tuple(1.0 if j == i else 0.0 for j in range(d + 1)))


def update_empirical(bar: DistPoint, i: int, n: int) -> DistPoint:
    """
    One step of the empirical frequency recursion: bar + (vertex(i) - bar) / n, where n >= 1 is the index of the new
    observation. At n = 1 the starting distribution is erased and the result is exactly vertex(i).
    """
    if n < 1:
        raise ValidationError(f"step n should be >= 1, got {n}")
    check_index(i, bar.d)
    if n == 1:
        return vertex(i, bar.d)
    return DistPoint.trusted(tuple(w + ((1.0 if j == i else 0.0) - w) / n for j, w in enumerate(bar.weights)))


def weighted_update_empirical(bar: DistPoint, i: int, delta_n: float, s_n: float) -> DistPoint:
    """
    Weighted recursion bar + (delta_n / S_n) (vertex(i) - bar), with S_n = S_{n-1} + delta_n. The product is evaluated
    as ((e - bar) * delta_n) / S_n so that unit weights reproduce update_empirical bit for bit.
    """
    if s_n <= 0:
        raise ValidationError(f"cumulative weight S_n should be > 0, got {s_n}")
    if delta_n < 0:
        raise ValidationError(f"weight delta_n should be >= 0, got {delta_n}")
    if delta_n > s_n:
        raise ValidationError(f"weight delta_n={delta_n} larger than cumulative weight S_n={s_n}")
    check_index(i, bar.d)
    if delta_n == s_n:
        return vertex(i, bar.d)
    return DistPoint.trusted(tuple(w + (((1.0 if j == i else 0.0) - w) * delta_n) / s_n
                                   for j, w in enumerate(bar.weights)))
