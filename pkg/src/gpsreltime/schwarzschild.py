"""Schwarzschild metric of a point mass in Schwarzschild coordinates.

The metric is written on R x E with E the Euclidean 3-space centred on the
mass.  With V(x) = -m/|x| and n = x/|x| it reads

    g = diag(-(1 + 2V),  I - 2V/(1 + 2V) n (x) n)

and is only defined in the exterior region 1 + 2V > 0.  All functions
broadcast over leading axes of their vector arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .units import UnitSystem, as_vector, dot, norm


@dataclass(frozen=True)
class GravBody:
    """Central point mass, stored as geometric mass m = G M / c**2 in metres.

    ``m_geo = 0`` is accepted and gives flat (Minkowski) spacetime.
    """

    m_geo: float

    def __post_init__(self):
        if not (math.isfinite(self.m_geo) and self.m_geo >= 0):
            raise DomainError(f"m_geo must be finite and non-negative, got {self.m_geo!r}")

    @classmethod
    def from_gm(cls, gm: float, units: UnitSystem = UnitSystem()) -> "GravBody":
        return cls(units.gm_to_geometric(gm))

    @classmethod
    def from_mass(cls, mass_kg: float, units: UnitSystem = UnitSystem()) -> "GravBody":
        return cls(units.gm_to_geometric(units.gamma * mass_kg))

    @property
    def schwarzschild_radius(self) -> float:
        return 2.0 * self.m_geo


@dataclass(frozen=True)
class MetricComponents:
    tt: float
    spatial: np.ndarray


@dataclass(frozen=True)
class FourVector:
    time_part: float
    space_part: np.ndarray


def _radius(x):
    r = norm(as_vector(x, "x"))
    if np.any(r == 0):
        raise DomainError("singularity at origin")
    return r


def potential(body: GravBody, x):
    """Newtonian potential V(x) = -m/|x| (dimensionless, never positive)."""
    return -body.m_geo / _radius(x)


def validate_exterior(body: GravBody, x):
    """True where 1 + 2V(x) > 0, i.e. |x| > 2m.  The boundary is excluded."""
    return _radius(x) > 2.0 * body.m_geo


def _exterior_potential(body: GravBody, x):
    x = as_vector(x, "x")
    r = _radius(x)
    if not np.all(r > 2.0 * body.m_geo):
        raise DomainError("inside Schwarzschild radius")
    return x, r, -body.m_geo / r


def radial_coefficient(v_pot):
    """The factor 2V/(1 + 2V) weighting the squared radial component."""
    two_v = 2.0 * v_pot
    return two_v / (1.0 + two_v)


def metric_at(body: GravBody, x) -> MetricComponents:
    """Explicit metric components at a single space point."""
    x, r, v_pot = _exterior_potential(body, x)
    if x.ndim != 1:
        raise DomainError("metric_at takes a single space point")
    n = x / r
    tt = -(1.0 + 2.0 * v_pot)
    spatial = np.eye(3) - radial_coefficient(v_pot) * np.outer(n, n)
    # np.outer(n, n) is symmetric bit for bit, so spatial is as well
    return MetricComponents(tt=float(tt), spatial=spatial)


def space_length_sq(body: GravBody, x, q):
    """Schwarzschild length-square |q|^2 - 2V/(1+2V) (n.q)^2 of a space vector q at x."""
    x, r, v_pot = _exterior_potential(body, x)
    q = as_vector(q, "q")
    n_dot_q = dot(x, q) / r
    return dot(q, q) - radial_coefficient(v_pot) * n_dot_q * n_dot_q


def four_length_sq(body: GravBody, x, u: FourVector):
    """Schwarzschild length-square -(1+2V) s^2 + |q|^2_Sch of a four-vector (s, q) at x."""
    _, _, v_pot = _exterior_potential(body, x)
    s = np.asarray(u.time_part, dtype=float)
    return -(1.0 + 2.0 * v_pot) * s * s + space_length_sq(body, x, u.space_part)
