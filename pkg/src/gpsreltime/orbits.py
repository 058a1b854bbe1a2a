"""Newtonian two-body trajectories feeding the clock-rate integrals.

Trajectories are evaluated in geometric units and are vectorised over time:
``traj.evaluate(t)`` accepts a scalar or an array of coordinate times and
returns positions and velocities with a trailing axis of length 3.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .clock_rates import KinematicState
from .errors import ConvergenceError, DomainError, PreconditionError
from .schwarzschild import GravBody
from .units import UnitSystem, as_vector

KEPLER_TOL = 1e-14
KEPLER_MAX_ITER = 50


@dataclass(frozen=True)
class KeplerElements:
    """Classical elements; angles in radians, epoch in geometric time (metres)."""

    semi_major_axis: float
    eccentricity: float = 0.0
    inclination: float = 0.0
    raan: float = 0.0
    arg_perigee: float = 0.0
    mean_anomaly_epoch: float = 0.0
    epoch: float = 0.0

    def __post_init__(self):
        values = (self.semi_major_axis, self.eccentricity, self.inclination, self.raan,
                  self.arg_perigee, self.mean_anomaly_epoch, self.epoch)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("orbital elements must be finite")
        if not 0.0 <= self.eccentricity < 1.0:
            raise DomainError(f"eccentricity must lie in [0, 1), got {self.eccentricity!r}")
        if self.semi_major_axis <= 0:
            raise DomainError("semi-major axis must be positive")

    @classmethod
    def from_si(cls, semi_major_axis_m, eccentricity=0.0, inclination_deg=0.0, raan_deg=0.0,
                arg_perigee_deg=0.0, mean_anomaly_deg=0.0, epoch_s=0.0,
                units: UnitSystem = UnitSystem()) -> "KeplerElements":
        return cls(semi_major_axis=semi_major_axis_m, eccentricity=eccentricity,
                   inclination=math.radians(inclination_deg), raan=math.radians(raan_deg),
                   arg_perigee=math.radians(arg_perigee_deg),
                   mean_anomaly_epoch=math.radians(mean_anomaly_deg),
                   epoch=epoch_s * units.c)

    @property
    def perigee(self) -> float:
        return self.semi_major_axis * (1.0 - self.eccentricity)

    @property
    def apogee(self) -> float:
        return self.semi_major_axis * (1.0 + self.eccentricity)


def solve_kepler(mean_anomaly, e):
    """Eccentric anomaly E with E - e sin E = M, vectorised over M.

    Newton iteration from E0 = M + e sin M; entries that fail to settle to
    1e-14 within 50 steps are finished by bisection on [M - e, M + e].
    """
    m = np.asarray(mean_anomaly, dtype=float)
    wrapped = np.remainder(m + math.pi, 2 * math.pi) - math.pi
    base = m - wrapped
    ecc = float(e)
    E = wrapped + ecc * np.sin(wrapped)
    done = np.zeros(E.shape, dtype=bool)
    for _ in range(KEPLER_MAX_ITER):
        step = (E - ecc * np.sin(E) - wrapped) / (1.0 - ecc * np.cos(E))
        E = np.where(done, E, E - step)
        done |= np.abs(step) <= KEPLER_TOL
        if done.all():
            break
    if not done.all():
        E = np.where(done, E, _bisect_kepler(wrapped, ecc))
    return base + E


def _bisect_kepler(m, e, iters=200):
    lo = m - e - 1e-12
    hi = m + e + 1e-12
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = mid - e * np.sin(mid) - m < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= KEPLER_TOL):
            return 0.5 * (lo + hi)
    raise ConvergenceError("Kepler equation did not converge")


def _perifocal_to_inertial(el: KeplerElements) -> np.ndarray:
    cO, sO = math.cos(el.raan), math.sin(el.raan)
    ci, si = math.cos(el.inclination), math.sin(el.inclination)
    cw, sw = math.cos(el.arg_perigee), math.sin(el.arg_perigee)
    return np.array([
        [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
        [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
        [sw * si, cw * si, ci],
    ])


def mean_motion(el: KeplerElements, body: GravBody) -> float:
    if body.m_geo <= 0:
        raise DomainError("orbits need a positive central mass")
    return math.sqrt(body.m_geo / el.semi_major_axis ** 3)


def orbital_period(el: KeplerElements, body: GravBody) -> float:
    """Period 2 pi sqrt(a^3/m) in geometric time."""
    return 2 * math.pi / mean_motion(el, body)


def _check_elements(el: KeplerElements, body: GravBody):
    if el.perigee <= 2.0 * body.m_geo:
        raise DomainError("perigee inside Schwarzschild radius")


def kepler_arrays(el: KeplerElements, body: GravBody, t):
    """Positions and velocities (geometric units) at coordinate time(s) ``t``."""
    _check_elements(el, body)
    t = np.asarray(t, dtype=float)
    n = mean_motion(el, body)
    a, e = el.semi_major_axis, el.eccentricity
    M = el.mean_anomaly_epoch + n * (t - el.epoch)
    E = solve_kepler(M, e)
    cE, sE = np.cos(E), np.sin(E)
    b = a * math.sqrt(1.0 - e * e)
    e_dot = n / (1.0 - e * cE)
    pf_pos = np.stack([a * (cE - e), b * sE, np.zeros_like(E)], axis=-1)
    pf_vel = np.stack([-a * sE * e_dot, b * cE * e_dot, np.zeros_like(E)], axis=-1)
    rot = _perifocal_to_inertial(el)
    return pf_pos @ rot.T, pf_vel @ rot.T


def kepler_state(el: KeplerElements, body: GravBody, t: float) -> KinematicState:
    x, v = kepler_arrays(el, body, t)
    return KinematicState(t=t, x=x, v=v)


class Trajectory(abc.ABC):
    """Time-parameterised world line x(t) with coordinate velocity."""

    @abc.abstractmethod
    def evaluate(self, t):
        """Return ``(x, v)`` arrays for coordinate time(s) ``t``."""

    def state(self, t: float) -> KinematicState:
        x, v = self.evaluate(t)
        return KinematicState(t=t, x=x, v=v)


class KeplerOrbit(Trajectory):
    def __init__(self, elements: KeplerElements, body: GravBody):
        _check_elements(elements, body)
        self.elements = elements
        self.body = body

    def evaluate(self, t):
        return kepler_arrays(self.elements, self.body, t)

    @property
    def period(self) -> float:
        return orbital_period(self.elements, self.body)

    def __repr__(self):
        return f"{type(self).__name__}({self.elements!r})"


class CircularOrbit(KeplerOrbit):
    """Kepler orbit restricted to e = 0, evaluated without a Kepler solve."""

    def __init__(self, elements: KeplerElements, body: GravBody):
        if elements.eccentricity != 0.0:
            raise DomainError("CircularOrbit requires eccentricity 0")
        super().__init__(elements, body)
        self._rot = _perifocal_to_inertial(elements)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        n = mean_motion(self.elements, self.body)
        a = self.elements.semi_major_axis
        u = self.elements.mean_anomaly_epoch + n * (t - self.elements.epoch)
        c, s = np.cos(u), np.sin(u)
        zero = np.zeros_like(u)
        pos = np.stack([a * c, a * s, zero], axis=-1)
        vel = np.stack([-a * n * s, a * n * c, zero], axis=-1)
        return pos @ self._rot.T, vel @ self._rot.T


class TabulatedTrajectory(Trajectory):
    """Cubic Hermite interpolation through tabulated positions and velocities."""

    def __init__(self, times, positions, velocities):
        times = np.asarray(times, dtype=float)
        positions = as_vector(positions, "positions")
        velocities = as_vector(velocities, "velocities")
        if times.ndim != 1 or times.size < 2:
            raise DomainError("need at least two tabulated times")
        if not np.all(np.diff(times) > 0):
            raise DomainError("tabulated times must be strictly increasing")
        if positions.shape != (times.size, 3) or velocities.shape != (times.size, 3):
            raise DomainError("positions and velocities must have shape (len(times), 3)")
        self.t_min, self.t_max = float(times[0]), float(times[-1])
        self._spline = CubicHermiteSpline(times, positions, velocities, axis=0)
        self._deriv = self._spline.derivative()

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < self.t_min) | (t > self.t_max)):
            raise PreconditionError("time outside tabulated range")
        return self._spline(t), self._deriv(t)

    @classmethod
    def from_trajectory(cls, traj: Trajectory, times) -> "TabulatedTrajectory":
        x, v = traj.evaluate(np.asarray(times, dtype=float))
        return cls(times, x, v)


def sample_trajectory(traj: Trajectory, t_grid) -> list[KinematicState]:
    """States at each grid time, validated as exterior and timelike."""
    body = getattr(traj, "body", None)
    states = []
    for i, t in enumerate(t_grid):
        try:
            x, v = traj.evaluate(float(t))
        except (ConvergenceError, DomainError, PreconditionError) as exc:
            raise type(exc)(f"grid index {i}: {exc}") from exc
        if body is not None and np.linalg.norm(x) <= 2.0 * body.m_geo:
            raise DomainError(f"grid index {i}: inside Schwarzschild radius")
        if np.dot(v, v) >= 1.0:
            raise DomainError(f"grid index {i}: world line not timelike")
        states.append(KinematicState(t=float(t), x=x, v=v))
    return states
