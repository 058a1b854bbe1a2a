"""Unit conversion and 3-D Euclidean helpers.

Internal physics runs in geometric units (c = G = 1): times and masses
are lengths in metres, speeds and potentials are dimensionless.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: CODATA 2018 exact speed of light, m/s.
C_SI = 299792458.0
#: CODATA 2018 Newtonian constant of gravitation, m^3/(kg s^2).
GAMMA_SI = 6.67430e-11
#: IERS/WGS84 geocentric gravitational constant, m^3/s^2.
GM_EARTH_SI = 3.986004418e14

SECONDS_PER_DAY = 86400.0


class Kind(enum.Enum):
    LENGTH = "length"
    TIME = "time"
    MASS = "mass"
    SPEED = "speed"
    POTENTIAL = "potential"


@dataclass(frozen=True)
class UnitSystem:
    """Universal constants used to move between SI and geometric units."""

    c: float = C_SI
    gamma: float = GAMMA_SI

    def __post_init__(self):
        for name in ("c", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and positive, got {value!r}")

    def gm_to_geometric(self, gm: float) -> float:
        """Geometric mass (metres) from a gravitational parameter GM in m^3/s^2."""
        _check_finite(gm)
        return gm / (self.c * self.c)

    def seconds(self, t_geo):
        """Geometric time (metres) to seconds."""
        return t_geo / self.c

    def metres(self, t_si):
        """Seconds to geometric time (metres)."""
        return t_si * self.c


@dataclass(frozen=True)
class GeometricQuantity:
    value: float
    kind: Kind


def _check_finite(value):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"non-finite input {value!r}")


def to_geometric(value: float, kind: Kind, units: UnitSystem = UnitSystem()) -> GeometricQuantity:
    """Convert an SI value of the given kind to geometric units.

    Times are multiplied by c, masses by gamma/c**2, speeds divided by c and
    potentials divided by c**2. Lengths are unchanged.
    """
    _check_finite(value)
    kind = Kind(kind)
    if kind is Kind.TIME:
        return GeometricQuantity(value * units.c, kind)
    if kind is Kind.MASS:
        return GeometricQuantity(value * units.gamma / (units.c * units.c), kind)
    if kind is Kind.SPEED:
        return GeometricQuantity(value / units.c, kind)
    if kind is Kind.POTENTIAL:
        return GeometricQuantity(value / (units.c * units.c), kind)
    return GeometricQuantity(value, kind)


def from_geometric(q: GeometricQuantity, units: UnitSystem = UnitSystem()) -> float:
    """Inverse of :func:`to_geometric`, up to one rounding step."""
    _check_finite(q.value)
    kind = q.kind
    if kind is Kind.SPEED:
        return q.value * units.c
    if kind is Kind.POTENTIAL:
        return q.value * (units.c * units.c)
    if kind is Kind.MASS:
        return q.value * (units.c * units.c) / units.gamma
    if kind is Kind.TIME:
        return q.value / units.c
    return q.value


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Validate and return a float array whose last axis has length 3."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (3,):
        raise DomainError(f"{name} must have trailing dimension 3, got shape {arr.shape}")
    _check_finite(arr)
    return arr


def dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def norm(x):
    return np.sqrt(dot(x, x))


def outward_normal(x) -> np.ndarray:
    """Unit vector x/|x| pointing away from the origin.

    Raises DomainError when |x| = 0, where the normal is undefined.
    """
    x = as_vector(x, "x")
    r = norm(x)
    if np.any(r == 0):
        raise DomainError("normal undefined at origin")
    return x / r[..., None] if np.ndim(r) else x / r
