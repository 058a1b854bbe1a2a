"""Pseudorange generation, Gauss-Newton position fixes and the impact experiment.

Signals travel on straight lines at c = 1 in coordinate time, so a receiver
holding the broadcast emission time t_sat forms the pseudorange
d = t_dev - t_sat.  What the satellite broadcasts as t_sat depends on how it
converts its onboard proper time into coordinate time, which is where the
clock-rate models enter.  All quantities are geometric (metres).
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .clock_rates import (
    DEFAULT_RATE_TOL,
    GeoidConstant,
    approx_offsets,
    exact_offsets,
    geoid_elapsed,
    integrate_offset,
)
from .errors import ConvergenceError, GeometryError, GpsRelTimeError, InputError
from .schwarzschild import GravBody
from .units import UnitSystem, as_vector, norm


_MODEL_OFFSETS = {"exact": exact_offsets, "approximate": approx_offsets}


class ClockMode(str, enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"
    UNCORRECTED = "uncorrected"


@dataclass(frozen=True)
class SatelliteClockModel:
    """How a satellite turns onboard proper time into a broadcast time.

    The clock reads zero at coordinate time ``epoch``.  ``exact`` and
    ``approximate`` invert the corresponding rate model; ``uncorrected``
    broadcasts ``epoch + s`` as if proper time were coordinate time.
    """

    mode: ClockMode = ClockMode.EXACT
    epoch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", ClockMode(self.mode))


@dataclass(frozen=True)
class PseudorangeObs:
    """One satellite signal as seen by the receiver.

    ``t_sat_broadcast`` and ``t_dev`` are coordinate times measured from
    ``t_ref``.  Keeping them relative preserves sub-micrometre pseudoranges
    when the absolute epoch is days (about 1e13 m) from zero.
    """

    sat_position: np.ndarray
    t_sat_broadcast: float
    t_dev: float
    t_ref: float = 0.0

    @property
    def pseudorange(self) -> float:
        return self.t_dev - self.t_sat_broadcast


@dataclass(frozen=True)
class SolverConfig:
    step_tol: float = 1e-9
    max_iter: int = 50
    max_condition: float = 1e8


@dataclass(frozen=True)
class PositionFix:
    position: np.ndarray
    clock_bias: float
    iterations: int
    residual_norm: float
    condition_number: float


def broadcast_error(body: GravBody, traj, clock: SatelliteClockModel, t_emit: float,
                    rate_tol: float = DEFAULT_RATE_TOL) -> float:
    """Broadcast minus true coordinate time for an emission at ``t_emit``.

    The onboard clock has accumulated ``t_emit - epoch + lag`` of proper time,
    with ``lag`` the integral of the exact offset.  An uncorrected satellite
    broadcasts that reading as is.  A corrected one inverts its rate model,
    i.e. finds ``d`` with ``d + lag_model(t_emit + d) = lag``.  This is the
    proper-to-coordinate inversion written for the small unknown ``d``, which
    keeps it at full precision; ``d`` is 0 for the exact model.
    """
    if t_emit < clock.epoch:
        raise InputError("emission precedes the clock epoch")
    lag = integrate_offset(body, traj, clock.epoch, t_emit, rate_tol)
    if clock.mode is ClockMode.UNCORRECTED:
        return lag
    model = clock.mode.value
    gap = integrate_offset(body, traj, clock.epoch, t_emit, rate_tol, model) - lag
    d = 0.0
    for _ in range(8):
        lo, hi = sorted((t_emit, t_emit + d))
        piece = integrate_offset(body, traj, lo, hi, rate_tol, model) if hi > lo else 0.0
        f = d + gap + (piece if d >= 0 else -piece)
        x, v = traj.evaluate(t_emit + d)
        rate = 1.0 + float(_MODEL_OFFSETS[model](body, x, v))
        step = f / rate
        d -= step
        if abs(step) <= 1e-18 * max(1.0, t_emit):
            return d
    raise ConvergenceError("broadcast-time inversion did not converge")


def broadcast_time(body: GravBody, traj, clock: SatelliteClockModel, t_emit: float,
                   rate_tol: float = DEFAULT_RATE_TOL) -> float:
    """Coordinate time the satellite claims for an emission at true time ``t_emit``."""
    return t_emit + broadcast_error(body, traj, clock, t_emit, rate_tol)


def make_observation(body: GravBody, traj, clock: SatelliteClockModel, receiver,
                     t_emit: float, rate_tol: float = DEFAULT_RATE_TOL) -> PseudorangeObs:
    """Observation of a signal emitted at ``t_emit`` and received at ``receiver``.

    Reception happens one straight-line light time after emission; times in
    the result are relative to ``t_emit``.
    """
    receiver = as_vector(receiver, "receiver")
    x_sat, _ = traj.evaluate(t_emit)
    flight = float(norm(x_sat - receiver))
    error = broadcast_error(body, traj, clock, t_emit, rate_tol)
    return PseudorangeObs(sat_position=x_sat, t_sat_broadcast=error, t_dev=flight, t_ref=t_emit)


def residuals_and_jacobian(obs, params):
    """Residuals |x_i - p| - (d_i - b) and their Jacobian in (p, b)."""
    sats = np.array([o.sat_position for o in obs], dtype=float)
    rho = np.array([o.pseudorange for o in obs], dtype=float)
    p, b = params[:3], params[3]
    diff = sats - p
    ranges = np.sqrt(np.sum(diff * diff, axis=1))
    res = ranges - (rho - b)
    jac = np.empty((len(obs), 4))
    jac[:, :3] = -diff / ranges[:, None]
    jac[:, 3] = 1.0
    return res, jac


def solve_position(obs, initial_guess=(0.0, 0.0, 0.0), initial_bias: float = 0.0,
                   cfg: SolverConfig = SolverConfig()) -> PositionFix:
    """Gauss-Newton fix of receiver position and clock bias from pseudoranges.

    A step that increases the residual norm is halved until it does not.
    Iteration stops once the step drops below ``cfg.step_tol`` or below the
    point where its predicted change of the residuals is at the rounding level
    of the satellite ranges; such a step is noise and is not applied.
    """
    obs = list(obs)
    if len(obs) < 4:
        raise InputError("at least 4 observations required")
    params = np.append(as_vector(initial_guess, "initial_guess"), float(initial_bias))
    scale = max(float(np.max(np.abs([o.sat_position for o in obs]))), 1.0)
    noise_floor = 4 * np.sqrt(len(obs)) * np.finfo(float).eps * scale

    res, jac = residuals_and_jacobian(obs, params)
    cost = float(res @ res)
    cond = float("inf")
    for it in range(1, cfg.max_iter + 1):
        cond = float(np.linalg.cond(jac))
        if not cond <= cfg.max_condition:
            raise GeometryError(f"ill-conditioned geometry (condition number {cond:.3g})")
        step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        size = float(np.linalg.norm(step))
        # a step whose predicted residual change is at the rounding level of
        # the ranges cannot be told apart from noise
        noise = float(np.linalg.norm(jac @ step)) <= noise_floor
        if size < cfg.step_tol or noise:
            if size < cfg.step_tol:
                params = params + step
                res, jac = residuals_and_jacobian(obs, params)
            return PositionFix(position=params[:3].copy(), clock_bias=float(params[3]),
                               iterations=it, residual_norm=float(np.linalg.norm(res)),
                               condition_number=cond)
        for _ in range(30):
            trial = params + step
            t_res, t_jac = residuals_and_jacobian(obs, trial)
            t_cost = float(t_res @ t_res)
            if t_cost <= cost or not np.isfinite(cost):
                break
            step = 0.5 * step
        params, res, jac, cost = trial, t_res, t_jac, t_cost
    raise ConvergenceError(f"Gauss-Newton did not converge in {cfg.max_iter} iterations")


@dataclass(frozen=True)
class ImpactScenario:
    """Inputs of the relativity impact experiment (geometric units)."""

    body: GravBody
    trajectories: list
    receiver: np.ndarray
    epochs: list
    mode: ClockMode = ClockMode.UNCORRECTED
    reference: ClockMode = ClockMode.EXACT
    clock_epoch: float = 0.0
    geoid: GeoidConstant | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    solver: SolverConfig = SolverConfig()
    rate_tol: float = DEFAULT_RATE_TOL


@dataclass
class ImpactRow:
    epoch_s: float
    mode: str
    reference: str
    position_error_m: float | None
    clock_divergence_s: float
    geoid_divergence_s: float | None
    range_error_m: float
    status: str = "ok"


CSV_COLUMNS = ["epoch_s", "mode", "reference", "position_error_m", "clock_divergence_s",
               "geoid_divergence_s", "range_error_m", "status"]


@dataclass
class ImpactReport:
    rows: list = field(default_factory=list)
    seed: int = 0
    noise_sigma_m: float = 0.0
    satellites: int = 0

    def to_dict(self) -> dict:
        return {
            "schema": "gpsreltime.impact/1",
            "seed": self.seed,
            "noise_sigma_m": self.noise_sigma_m,
            "satellites": self.satellites,
            "rows": [asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                             for v in (getattr(r, c) for c in CSV_COLUMNS)])
        return buf.getvalue()


def _with_noise(obs, noise):
    return [replace(o, t_dev=o.t_dev + float(n)) for o, n in zip(obs, noise)]


def relativity_impact_experiment(sc: ImpactScenario,
                                 units: UnitSystem = UnitSystem()) -> ImpactReport:
    """Compare fixes and broadcast clocks of two clock modes epoch by epoch.

    Per epoch the report holds the distance between the two fixes, the mean
    broadcast-time difference (mode minus reference), its range equivalent,
    and, when a geoid constant is given, how far the raw onboard clock has
    drifted from a geoid clock started at the same epoch.  Solver failures are
    recorded in the row status instead of aborting the run.
    """
    if len(sc.trajectories) < 4:
        raise InputError("at least 4 observations required")
    rng = np.random.default_rng(sc.seed)
    receiver = as_vector(sc.receiver, "receiver")
    clocks = {m: SatelliteClockModel(m, sc.clock_epoch) for m in (sc.mode, sc.reference)}
    report = ImpactReport(seed=sc.seed, noise_sigma_m=sc.noise_sigma, satellites=len(sc.trajectories))
    for t in sc.epochs:
        obs = {}
        for m, clock in clocks.items():
            obs[m] = [make_observation(sc.body, traj, clock, receiver, t, sc.rate_tol)
                      for traj in sc.trajectories]
        divergence = float(np.mean([a.t_sat_broadcast - b.t_sat_broadcast
                                    for a, b in zip(obs[sc.mode], obs[sc.reference])]))
        geoid_div = None
        if sc.geoid is not None:
            elapsed = t - sc.clock_epoch
            lags = [integrate_offset(sc.body, traj, sc.clock_epoch, t, sc.rate_tol)
                    for traj in sc.trajectories]
            # proper elapsed minus geoid elapsed, kept as a difference of small terms
            geoid_div = float(np.mean(lags)) - (geoid_elapsed(sc.geoid, elapsed) - elapsed)
        # both modes see the same noise draw so only the clock model differs
        noise = sc.noise_sigma * rng.standard_normal(len(sc.trajectories))
        status, error = "ok", None
        try:
            fixes = {m: solve_position(_with_noise(obs[m], noise), cfg=sc.solver) for m in clocks}
            error = float(np.linalg.norm(fixes[sc.mode].position - fixes[sc.reference].position))
        except GpsRelTimeError as exc:
            status = f"{type(exc).__name__}: {exc}"
        report.rows.append(ImpactRow(
            epoch_s=float(units.seconds(t)),
            mode=sc.mode.value,
            reference=sc.reference.value,
            position_error_m=error,
            clock_divergence_s=float(units.seconds(divergence)),
            geoid_divergence_s=None if geoid_div is None else float(units.seconds(geoid_div)),
            range_error_m=abs(divergence),
            status=status,
        ))
    return report

