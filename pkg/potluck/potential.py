#!/usr/bin/env python3
"""
Potential functions Phi on S_d whose gradient is the reward-difference field

    grad Phi(v) = (f_i(tilde v) - f_0(tilde v))_{i=1..d}

For d = 1 the potential always exists (the field is a continuous function on [0, 1]) and is built numerically as its
antiderivative. For d >= 2 Phi is never constructed: the field is only checked for the symmetric-Jacobian condition,
and a closed-form Phi can be supplied as an expression.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 7/10/26
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from potluck.common import ConfigurationError, ValidationError, LoggerSuperclass, GRN
from potluck.expr_parser import parse
from potluck.reward_model import RewardSystem, rewards
from potluck.simplex import SimplexPoint, tilde, TOLERANCE

MIN_NODES = 101


def _free_coords(v) -> np.ndarray:
    if isinstance(v, SimplexPoint):
        return v.as_array()
    return np.asarray(v, dtype=float).reshape(-1)


class Potential:
    """
    A potential Phi: S_d -> R. Two forms are available:
        - tabulated (d = 1): antiderivative table on uniform nodes, evaluated between nodes by cubic Hermite
          interpolation using the field values as node slopes
        - expression: closed form given as an expression of u1..ud, read as v1..vd (u0 stands for 1 - sum(v))
    """
    def __init__(self, d: int, evaluator, kind: str, node_spacing: float = 0.0, offset: float = 0.0,
                 description: str = ""):
        self.d = d
        self.kind = kind
        self.node_spacing = node_spacing
        self.offset = offset
        self.description = description
        self.__evaluator = evaluator

    def __call__(self, v) -> float:
        coords = _free_coords(v)
        if coords.shape[0] != self.d:
            raise ValidationError(f"Potential defined on S_{self.d}, got a point with {coords.shape[0]} coordinates")
        if np.any(coords < -TOLERANCE) or coords.sum() > 1 + TOLERANCE:
            raise ValidationError(f"point {coords.tolist()} outside S_{self.d}")
        return float(self.__evaluator(coords)) + self.offset

    def shifted(self, constant: float) -> "Potential":
        """Same potential plus a constant (the gradient condition only determines Phi up to a constant)"""
        return Potential(self.d, self.__evaluator, self.kind, self.node_spacing, self.offset + constant,
                         self.description)

    def __repr__(self):
        return f"Potential(d={self.d}, kind={self.kind}, {self.description})"


def gradient_field(f: RewardSystem, v) -> np.ndarray:
    """
    Reward-difference field at v: (f_i(tilde v) - f_0(tilde v))_{i=1..d}
    """
    u = tilde(v if isinstance(v, SimplexPoint) else SimplexPoint(tuple(v)))
    if u.d != f.d:
        raise ValidationError(f"point in S_{u.d}, reward system has d={f.d}")
    values = rewards(f, u)
    return np.array([values[i] - values[0] for i in range(1, f.d + 1)])


def q_from_potential(f: RewardSystem, v) -> float:
    """
    Potential form of the mean payoff: f_0(tilde v) + (v | field(v)), equal to q(tilde v)
    """
    coords = _free_coords(v)
    u = tilde(SimplexPoint(tuple(coords)))
    return rewards(f, u)[0] + float(np.dot(coords, gradient_field(f, coords)))


class PotentialBuilder(LoggerSuperclass):
    def __init__(self, f: RewardSystem, log: logging.Logger = None):
        LoggerSuperclass.__init__(self, log, "Potential", colour=GRN)
        self.f = f

    def build(self, nodes: int = 1001) -> Potential:
        """
        Antiderivative of the field on [0, 1] by composite Simpson on a uniform grid, normalized with Phi(0) = 0
        """
        if self.f.d != 1:
            raise ConfigurationError(f"Potential construction is only supported for d=1 (got d={self.f.d}), "
                                     f"use check_integrability for d >= 2")
        if nodes < MIN_NODES:
            raise ConfigurationError(f"at least {MIN_NODES} nodes are required, got {nodes}")

        t = np.linspace(0.0, 1.0, nodes)
        field = np.array([gradient_field(self.f, (x,))[0] for x in t])
        table = cumulative_simpson(field, x=t, initial=0.0)
        spline = CubicHermiteSpline(t, table, field)
        self.debug(f"built tabulated potential with {nodes} nodes, Phi(1)={table[-1]!r}")
        return Potential(1, lambda v: spline(v[0]), "tabulated", node_spacing=1.0 / (nodes - 1),
                         description=f"{nodes} nodes")


def build_potential_1d(f: RewardSystem, nodes: int = 1001, log: logging.Logger = None) -> Potential:
    """
    Builds the potential of a two-player system, see PotentialBuilder.build
    """
    return PotentialBuilder(f, log=log).build(nodes)


def expression_potential(src: str, d: int) -> Potential:
    """
    Closed-form potential given as an expression of u1..ud (the free coordinates v1..vd), u0 = 1 - sum(v)
    """
    e = parse(src, d)
    return Potential(d, lambda v: e((1.0 - float(np.sum(v)),) + tuple(float(x) for x in v)), "expression",
                     description=src)


def finite_difference(phi: Potential, v: np.ndarray, j: int, h: float) -> float:
    """
    Partial derivative of phi along v_j. Central difference when v +- h e_j stays in S_d, otherwise a one-sided
    second order stencil.
    """
    v = np.asarray(v, dtype=float)
    e = np.zeros_like(v)
    e[j] = 1.0
    total = v.sum()
    if v[j] - h >= 0 and total + h <= 1:
        return (phi(v + h * e) - phi(v - h * e)) / (2 * h)
    elif total + 2 * h <= 1:
        return (-3 * phi(v) + 4 * phi(v + h * e) - phi(v + 2 * h * e)) / (2 * h)
    elif v[j] - 2 * h >= 0:
        return (3 * phi(v) - 4 * phi(v - h * e) + phi(v - 2 * h * e)) / (2 * h)
    raise ConfigurationError(f"step h={h} too large to differentiate along v{j + 1} at {v.tolist()} inside S_{len(v)}")


def grad_condition_residual(f: RewardSystem, phi: Potential, v, h: float = 1e-5) -> np.ndarray:
    """
    Residual of the gradient condition: numerical gradient of phi minus the reward-difference field
    :returns: array with d components
    """
    if h <= 0:
        raise ConfigurationError(f"finite difference step should be > 0, got {h}")
    coords = _free_coords(v)
    SimplexPoint(tuple(coords))  # validation
    if phi.d != f.d:
        raise ValidationError(f"potential defined for d={phi.d}, reward system has d={f.d}")
    numeric = np.array([finite_difference(phi, coords, j, h) for j in range(f.d)])
    return numeric - gradient_field(f, coords)


@dataclass
class IntegrabilityReport:
    max_asymmetry: float
    worst_point: list
    worst_pair: tuple
    samples: int
    h: float

    def to_dict(self) -> dict:
        return {
            "max_asymmetry": self.max_asymmetry,
            "worst_point": self.worst_point,
            "worst_pair": list(self.worst_pair),
            "samples": self.samples,
            "h": self.h,
        }


def check_integrability(f: RewardSystem, samples: int = 200, h: float = 1e-5, seed: int = 0) -> IntegrabilityReport:
    """
    Necessary condition for the field to be a gradient: its Jacobian J_ij = d field_i / d v_j must be symmetric.
    J is estimated by central differences at 'samples' random interior points and the maximal |J_ij - J_ji| is
    reported.
    """
    if f.d < 2:
        raise ConfigurationError(f"integrability check needs d >= 2 (got d={f.d}), any two-player field is integrable")
    if h <= 0:
        raise ConfigurationError(f"finite difference step should be > 0, got {h}")
    if samples < 1:
        raise ConfigurationError(f"samples should be >= 1, got {samples}")

    d = f.d
    margin = 2 * h  # keeps v +- h e_j inside S_d
    if margin * (d + 1) >= 1:
        raise ConfigurationError(f"finite difference step h={h} too large for d={d}, needs 2h(d+1) < 1")
    rng = np.random.default_rng(seed)
    worst = (0.0, None, (1, 2))
    for _ in range(samples):
        # Dirichlet sample mapped into the sub-simplex whose coordinates are all >= margin
        u = margin + (1 - margin * (d + 1)) * rng.dirichlet(np.ones(d + 1))
        v = u[1:]
        jac = np.zeros((d, d))
        for j in range(d):
            step = np.zeros(d)
            step[j] = h
            jac[:, j] = (gradient_field(f, v + step) - gradient_field(f, v - step)) / (2 * h)
        asymmetry = np.abs(jac - jac.T)
        i, j = np.unravel_index(int(np.argmax(asymmetry)), asymmetry.shape)
        if asymmetry[i, j] > worst[0] or worst[1] is None:
            worst = (float(asymmetry[i, j]), v.tolist(), (int(min(i, j)) + 1, int(max(i, j)) + 1))

    return IntegrabilityReport(worst[0], worst[1], worst[2], samples, h)
