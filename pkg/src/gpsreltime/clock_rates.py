"""Satellite clock rate relative to Earth-centred coordinate time.

For a clock at x moving with coordinate velocity v = dx/dt, normalising its
four-velocity in the Schwarzschild metric gives the exact rate

    ds/dt = sqrt(1 + 2V - |v|^2_Sch),   |v|^2_Sch = |v|^2 - 2V/(1+2V) (n.v)^2

i.e. sqrt(1 + 2V - |v|^2 + 2V/(1+2V) (n.v)^2).  Note the sign of the radial
term: it follows from the spatial metric, and with V < 0 it slows a clock
with radial velocity further.  The rate reduces to sqrt(1 + 2V - |v|^2) on
circular orbits and to the usual
first-order form 1 + V - |v|^2/2.  The physically interesting quantity is the
offset ds/dt - 1 (about -2.5e-10 for GPS), so every rate is reported with an
offset computed without the cancellation in ``sqrt(1 + eps) - 1``.

Everything here works in geometric units: t and x in metres, v dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import ConvergenceError, DomainError, PreconditionError
from .schwarzschild import GravBody, radial_coefficient
from .units import UnitSystem, as_vector, dot, norm

#: Default quadrature tolerance on the rate offset (absolute, per unit time).
DEFAULT_RATE_TOL = 1e-20
#: Tolerance on |n.v| / |v| for a velocity to count as tangential.
TANGENTIAL_TOL = 1e-9


@dataclass(frozen=True)
class KinematicState:
    """Coordinate time, position and coordinate velocity of a clock.

    ``x`` and ``v`` may carry leading batch axes; rate functions broadcast.
    """

    t: float
    x: np.ndarray
    v: np.ndarray

    @classmethod
    def from_si(cls, t_s, x_m, v_mps, units: UnitSystem = UnitSystem()) -> "KinematicState":
        return cls(t=t_s * units.c, x=as_vector(x_m, "x"), v=as_vector(v_mps, "v") / units.c)


@dataclass(frozen=True)
class GeoidConstant:
    """Geoid rate constant phi0 with dt/dt_E = 1 - phi0.

    A negative phi0 makes coordinate time run fast relative to geoid clocks.
    """

    phi0: float
    bound: float = 1e-8

    def __post_init__(self):
        if not math.isfinite(self.phi0) or abs(self.phi0) >= self.bound:
            raise DomainError(f"|phi0| must be below {self.bound:g}, got {self.phi0!r}")


@dataclass(frozen=True)
class RateResult:
    rate: float
    offset: float


def _scalarise(a):
    return float(a) if np.ndim(a) == 0 else a


def _result(offset) -> RateResult:
    return RateResult(rate=_scalarise(1.0 + offset), offset=_scalarise(offset))


def offset_from_epsilon(eps):
    """sqrt(1 + eps) - 1 to full relative precision, for eps > -1."""
    eps = np.asarray(eps, dtype=float)
    if np.any(~(eps > -1.0)):
        raise DomainError("world line not timelike")
    return np.expm1(0.5 * np.log1p(eps))


def _kinematics(body: GravBody, x, v):
    x = as_vector(x, "x")
    v = as_vector(v, "v")
    r = norm(x)
    if np.any(r == 0):
        raise DomainError("singularity at origin")
    if not np.all(r > 2.0 * body.m_geo):
        raise DomainError("inside Schwarzschild radius")
    if np.any(dot(v, v) >= 1.0):
        raise DomainError("world line not timelike: |v| >= 1")
    return x, v, r, -body.m_geo / r


def exact_epsilon(body: GravBody, x, v):
    """Radicand minus one for the exact rate, in a fixed association order.

    eps = (2V - |v|^2) + 2V/(1+2V) (n.v)^2, so ds/dt = sqrt(1 + eps).
    """
    x, v, r, v_pot = _kinematics(body, x, v)
    n_dot_v = dot(x, v) / r
    radial = radial_coefficient(v_pot) * (n_dot_v * n_dot_v)
    return (2.0 * v_pot - dot(v, v)) + radial


def exact_offsets(body: GravBody, x, v):
    """Vectorised exact offset ds/dt - 1 for arrays of positions and velocities."""
    return offset_from_epsilon(exact_epsilon(body, x, v))


def approx_offsets(body: GravBody, x, v):
    """Vectorised first-order offset V - |v|^2/2."""
    _, v, _, v_pot = _kinematics(body, x, v)
    return v_pot - 0.5 * dot(v, v)


def rate_exact(body: GravBody, state: KinematicState) -> RateResult:
    """Exact proper-time rate ds/dt of a clock in the Schwarzschild field."""
    return _result(exact_offsets(body, state.x, state.v))


def rate_circular(body: GravBody, state: KinematicState) -> RateResult:
    """Rate sqrt(1 + 2V - |v|^2) for a purely tangential velocity.

    Raises PreconditionError if |n.v| exceeds 1e-9 |v|.
    """
    x, v, r, v_pot = _kinematics(body, state.x, state.v)
    speed_sq = dot(v, v)
    n_dot_v = dot(x, v) / r
    if np.any(np.abs(n_dot_v) > TANGENTIAL_TOL * np.sqrt(speed_sq)):
        raise PreconditionError("velocity not tangential")
    return _result(offset_from_epsilon(2.0 * v_pot - speed_sq))


def rate_approx(body: GravBody, state: KinematicState) -> RateResult:
    """First-order rate 1 + V - |v|^2/2, with no higher-order terms."""
    return _result(approx_offsets(body, state.x, state.v))


def geoid_rescale(g: GeoidConstant, dt_e):
    """Coordinate-time duration for a geoid-clock duration: (1 - phi0) dt_E."""
    if not np.all(np.isfinite(dt_e)):
        raise DomainError("duration must be finite")
    return (1.0 - g.phi0) * dt_e


def geoid_elapsed(g: GeoidConstant, dt):
    """Geoid-clock duration for a coordinate-time duration (inverse of geoid_rescale)."""
    return dt / (1.0 - g.phi0)


_MODELS = {"exact": exact_offsets, "approximate": approx_offsets}


def _offset_integrand(body, traj, model):
    try:
        kernel = _MODELS[model]
    except KeyError:
        raise ValueError(f"unknown rate model {model!r}") from None

    def integrand(t):
        x, v = traj.evaluate(t)
        if model == "exact":
            eps = exact_epsilon(body, x, v)
            bad = ~(eps > -1.0)
            if np.any(bad):
                raise DomainError(
                    f"world line not timelike at t={np.atleast_1d(t)[np.argmax(bad)]!r}")
            return offset_from_epsilon(eps)
        return kernel(body, x, v)

    return integrand


def integrate_offset(body: GravBody, traj, t0: float, t1: float,
                     tol: float = DEFAULT_RATE_TOL, model: str = "exact") -> float:
    """Accumulated clock offset, the integral of (ds/dt - 1) over [t0, t1].

    This is proper time minus coordinate time elapsed along ``traj`` and is
    the quantity to use when the drift itself matters: it is ~1e-10 of the
    interval and is returned with full relative precision.
    """
    if t1 < t0:
        raise PreconditionError("t0 must not exceed t1")
    value, _ = quadrature.integrate(_offset_integrand(body, traj, model), t0, t1, tol)
    return value


def integrate_proper_time(body: GravBody, traj, t0: float, t1: float,
                          tol: float = DEFAULT_RATE_TOL) -> float:
    """Proper time elapsed on the clock carried by ``traj`` between t0 and t1."""
    return (t1 - t0) + integrate_offset(body, traj, t0, t1, tol)


def coordinate_time_of_proper(body: GravBody, traj, t_epoch: float, s_target: float,
                              tol: float = 1e-3, *, rate_tol: float = DEFAULT_RATE_TOL,
                              model: str = "exact", max_iter: int = 100) -> float:
    """Coordinate time at which the clock, zeroed at ``t_epoch``, reads ``s_target``.

    Solves ``tau + integral(offset, t_epoch, t_epoch + tau) = s_target`` for the
    elapsed coordinate time with a safeguarded Newton iteration.  The map is
    strictly increasing, so a bracket found by a coarse outward scan keeps
    every iterate valid.  ``tol`` is the accepted error in proper time.
    """
    if s_target < 0:
        raise PreconditionError("s_target must be non-negative")
    if s_target == 0:
        return t_epoch
    integrand = _offset_integrand(body, traj, model)

    def rate_at(tau):
        return 1.0 + float(integrand(np.array([t_epoch + tau]))[0])

    def advance(tau_from, acc_from, tau_to):
        # accumulated offset at tau_to, integrating from the nearest known point
        a, b = sorted((tau_from, tau_to))
        piece, _ = quadrature.integrate(integrand, t_epoch + a, t_epoch + b, rate_tol)
        return acc_from + (piece if tau_to >= tau_from else -piece)

    # offsets are never positive, so the clock lags and tau >= s_target
    lo = float(s_target)
    acc_lo = advance(0.0, 0.0, lo)
    f_lo = acc_lo
    if f_lo >= -tol:
        return t_epoch + lo
    step = max(-f_lo, 4 * math.ulp(lo))
    hi, acc_hi = lo, acc_lo
    for _ in range(64):
        cand = lo + 2.0 * step
        acc_hi = advance(lo, acc_lo, cand)
        hi = cand
        if (hi - s_target) + acc_hi >= 0:
            break
        step *= 2.0
    else:
        raise ConvergenceError("could not bracket the proper-time target")

    tau, acc = lo, acc_lo
    for _ in range(max_iter):
        f = (tau - s_target) + acc
        if abs(f) <= tol:
            return t_epoch + tau
        if f < 0:
            lo = max(lo, tau)
        else:
            hi = min(hi, tau)
        new = tau - f / rate_at(tau)
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - tau) <= 2 * math.ulp(tau):
            return t_epoch + new
        acc = advance(tau, acc, new)
        tau = new
    raise ConvergenceError(f"proper-time inversion did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class Drift:
    """Accumulated time differences over one interval, in geometric units."""

    duration: float
    satellite_vs_coordinate: float
    geoid_vs_coordinate: float
    satellite_vs_geoid: float


def accumulated_drift(body: GravBody, traj, g: GeoidConstant, t0: float, duration: float,
                      tol: float = DEFAULT_RATE_TOL) -> Drift:
    """Satellite, geoid and coordinate clocks compared over ``duration``.

    Each entry is (first clock elapsed) - (second clock elapsed), so a
    positive satellite_vs_geoid means the satellite clock gains on the ground.
    """
    if duration < 0:
        raise PreconditionError("duration must be non-negative")
    sat = integrate_offset(body, traj, t0, t0 + duration, tol) if duration else 0.0
    # t_E - t = dt (1/(1 - phi0) - 1) = dt phi0/(1 - phi0)
    geoid = duration * g.phi0 / (1.0 - g.phi0)
    return Drift(duration=duration, satellite_vs_coordinate=sat,
                 geoid_vs_coordinate=geoid, satellite_vs_geoid=sat - geoid)
