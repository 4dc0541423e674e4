#!/usr/bin/env python3
"""
Playing strategies. A strategy nominates, at step n, the index of the player that plays, looking only at the empirical
frequency vector bar = x̄_{n-1} (the state before the n-th play).

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 8/10/26
"""
from dataclasses import dataclass

import numpy as np

from potluck.common import ValidationError, SequenceExhaustedError
from potluck.reward_model import RewardSystem, rewards
from potluck.schemas import strategy_kinds
from potluck.simplex import DistPoint, check_index

GENERATOR_NAME = "numpy.random.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    """One independent PCG64 stream per run"""
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Strategy:
    kind: str
    p: DistPoint = None  # iid
    i: int = None  # constant
    sequence: tuple = None  # sequence

    def __post_init__(self):
        if self.kind not in strategy_kinds:
            raise ValidationError(f"Unknown strategy kind '{self.kind}', expected one of {strategy_kinds}")
        if self.kind == "iid":
            if not isinstance(self.p, DistPoint):
                raise ValidationError("iid strategy needs a distribution p")
            # cumulative distribution, computed once
            object.__setattr__(self, "_cdf", np.cumsum(self.p.weights))
        elif self.kind == "constant":
            if self.i is None:
                raise ValidationError("constant strategy needs a player index i")
            if type(self.i) is not int or self.i < 0:
                raise ValidationError(f"constant strategy index should be a non-negative integer, got {self.i!r}")
        elif self.kind == "sequence":
            if self.sequence is None:
                raise ValidationError("sequence strategy needs a list of indices")
            seq = tuple(self.sequence)
            for k, x in enumerate(seq):
                if type(x) is not int or x < 0:
                    raise ValidationError(f"sequence element {k} should be a non-negative integer, got {x!r}")
            object.__setattr__(self, "sequence", seq)

    @classmethod
    def greedy(cls):
        return cls("greedy")

    @classmethod
    def iid(cls, p):
        if not isinstance(p, DistPoint):
            p = DistPoint(tuple(p))
        return cls("iid", p=p)

    @classmethod
    def round_robin(cls):
        return cls("round_robin")

    @classmethod
    def constant(cls, i: int):
        return cls("constant", i=i)

    @classmethod
    def from_sequence(cls, sequence):
        return cls("sequence", sequence=tuple(sequence))

    def check_dimension(self, d: int):
        """Ensures that every index this strategy can return is a valid player for dimension d"""
        if self.kind == "iid" and self.p.d != d:
            raise ValidationError(f"iid distribution has {len(self.p)} coordinates, expected {d + 1}")
        elif self.kind == "constant":
            check_index(self.i, d)
        elif self.kind == "sequence":
            for x in self.sequence:
                check_index(x, d)

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "iid":
            doc["p"] = list(self.p.weights)
        elif self.kind == "constant":
            doc["i"] = self.i
        elif self.kind == "sequence":
            doc["sequence"] = list(self.sequence)
        return doc


def greedy_choose(f: RewardSystem, bar: DistPoint) -> int:
    """
    Nominates the player with the largest current reward. For two players, player 1 plays iff f_1 >= f_0. With more
    players, ties go to the largest index (which reduces to the same rule for d = 1).
    """
    values = rewards(f, bar)
    if f.d == 1:
        return 1 if values[1] >= values[0] else 0
    best = 0
    for i in range(1, len(values)):
        if values[i] >= values[best]:
            best = i
    return best


def iid_choose(p: DistPoint, rng: np.random.Generator, cdf: np.ndarray = None) -> int:
    """
    Draws a player from p by inverse CDF on a single uniform draw. The index advances while the draw is not strictly
    below the cumulative probability.
    """
    if cdf is None:
        cdf = np.cumsum(p.weights)
    x = rng.random()
    for i, c in enumerate(cdf):
        if x < c:
            return i
    # rounding in the last cumulative value, fall back to the last player with positive probability
    for i in range(len(cdf) - 1, -1, -1):
        if p.weights[i] > 0:
            return i
    return len(cdf) - 1


def choose(s: Strategy, n: int, bar: DistPoint, f: RewardSystem, rng: np.random.Generator) -> int:
    """
    Index of the player that plays at step n >= 1 given the state bar = x̄_{n-1}
    """
    if s.kind == "greedy":
        return greedy_choose(f, bar)
    elif s.kind == "iid":
        return iid_choose(s.p, rng, cdf=s._cdf)
    elif s.kind == "round_robin":
        return (n - 1) % (f.d + 1)
    elif s.kind == "constant":
        check_index(s.i, f.d)
        return s.i
    elif s.kind == "sequence":
        if n > len(s.sequence):
            raise SequenceExhaustedError(f"sequence strategy has {len(s.sequence)} elements, step {n} requested")
        i = s.sequence[n - 1]
        check_index(i, f.d)
        return i
    raise ValidationError(f"Unknown strategy kind '{s.kind}'")
