"""Command-line front end: ``gpsreltime {rate,drift,orbit,solve,impact}``.

Exit codes: 0 success, 2 config/parse/input, 3 geometry, 4 convergence,
5 physics domain (non-timelike state, interior point, failed precondition).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .clock_rates import (
    GeoidConstant,
    KinematicState,
    accumulated_drift,
    rate_approx,
    rate_circular,
    rate_exact,
)
from .config import ScenarioConfig, load_scenario
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    GeometryError,
    InputError,
    PreconditionError,
)
from .orbits import orbital_period
from .positioning import (
    ClockMode,
    ImpactScenario,
    SatelliteClockModel,
    make_observation,
    relativity_impact_experiment,
    solve_position,
)
from .schwarzschild import GravBody
from .units import SECONDS_PER_DAY

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_CONVERGENCE = 4
EXIT_DOMAIN = 5

_EXIT_CODES = [
    (InputError, EXIT_CONFIG),
    (GeometryError, EXIT_GEOMETRY),
    (ConvergenceError, EXIT_CONVERGENCE),
    (DomainError, EXIT_DOMAIN),
    (PreconditionError, EXIT_DOMAIN),
]


def _offset_line(label: str, offset: float) -> str:
    per_day = offset * SECONDS_PER_DAY
    return (f"{label:<13}{offset: .5e}  ({per_day * 1e6: .2f} μs/day, "
            f"{per_day: .5e} s/day, {per_day * 1e9: .1f} ns/day)")


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def report_schema(command: str) -> dict:
    """JSON schema for the ``--format json`` output of ``command``."""
    text = resources.files("gpsreltime").joinpath("data/report.schema.json").read_text()
    full = json.loads(text)
    return {"$schema": full["$schema"], "$defs": full["$defs"], "$ref": f"#/$defs/{command}"}


def _render(fmt: str, doc: dict, header: list, rows: list, table: str) -> str:
    if fmt == "json":
        return _json(doc)
    if fmt == "csv":
        return _csv(header, rows)
    return table


# --- rate -----------------------------------------------------------------

def _rate_state(cfg: ScenarioConfig, args):
    units = cfg.units
    if args.gm is not None and args.body_mass is not None:
        raise ConfigError("give either --gm or --body-mass, not both")
    body = cfg.body
    if args.gm is not None:
        body = GravBody.from_gm(args.gm, units)
    elif args.body_mass is not None:
        body = GravBody.from_mass(args.body_mass, units)

    if args.radius is not None:
        x = np.array([args.radius, 0.0, 0.0])
        v = np.array([args.radial_speed, args.speed, 0.0])
        return body, KinematicState.from_si(0.0, x, v, units), "state"
    name = args.orbit or cfg.rate.get("orbit") or next(iter(cfg.orbits), None)
    if name is None:
        raise ConfigError("rate: no orbit configured and no --radius given")
    t = args.time if args.time is not None else float(cfg.rate.get("time", 0.0))
    return body, cfg.trajectory(name, body).state(t * units.c), name


def cmd_rate(cfg: ScenarioConfig, args) -> str:
    body, state, source = _rate_state(cfg, args)
    exact = rate_exact(body, state)
    approx = rate_approx(body, state)
    try:
        circular = rate_circular(body, state).offset
    except PreconditionError:
        circular = None
    gap = exact.offset - approx.offset
    entries = [("exact", exact.offset), ("circular", circular), ("approximate", approx.offset)]
    doc = {
        "command": "rate",
        "source": source,
        "exact": {"rate": exact.rate, "offset": exact.offset},
        "circular": None if circular is None else {"offset": circular},
        "approximate": {"rate": approx.rate, "offset": approx.offset},
        "gap_exact_minus_approx": gap,
        "units": {"offset": "dimensionless", "per_day": "s/day"},
    }
    rows = [(name, off, None if off is None else off * SECONDS_PER_DAY) for name, off in entries]
    rows.append(("gap", gap, gap * SECONDS_PER_DAY))
    lines = [f"clock rate offset ds/dt - 1 ({source})"]
    for name, off in entries:
        lines.append(_offset_line(name, off) if off is not None
                     else f"{name:<13}n/a (velocity not tangential)")
    lines.append(f"{'exact-approx':<13}{gap: .16e}")
    return _render(args.format, doc, ["model", "offset", "offset_s_per_day"], rows,
                   "\n".join(lines) + "\n")


# --- drift ----------------------------------------------------------------

def cmd_drift(cfg: ScenarioConfig, args) -> str:
    u = cfg.units
    name = args.orbit or cfg.drift.get("orbit") or next(iter(cfg.orbits), None)
    if name is None:
        raise ConfigError("drift: no orbit configured")
    duration = args.duration if args.duration is not None else float(
        cfg.drift.get("duration", SECONDS_PER_DAY))
    start = float(cfg.drift.get("start", 0.0))
    if duration < 0:
        raise InputError("duration must be non-negative")
    geoid = cfg.geoid if args.phi0 is None else GeoidConstant(args.phi0, cfg.geoid.bound)
    d = accumulated_drift(cfg.body, cfg.trajectory(name), geoid, start * u.c, duration * u.c)
    values = {
        "satellite_vs_coordinate_s": u.seconds(d.satellite_vs_coordinate),
        "geoid_vs_coordinate_s": u.seconds(d.geoid_vs_coordinate),
        "satellite_vs_geoid_s": u.seconds(d.satellite_vs_geoid),
    }
    doc = {"command": "drift", "orbit": name, "duration_s": duration, "phi0": geoid.phi0, **values}
    table = [f"accumulated clock differences over {duration:g} s ({name}, phi0={geoid.phi0:g})"]
    for key, val in values.items():
        label = key[:-2].replace("_", " ")
        table.append(f"{label:<26}{val: .6e} s  ({val * 1e6: .3f} μs)")
    rows = [(k[:-2], v) for k, v in values.items()]
    return _render(args.format, doc, ["comparison", "seconds"], rows, "\n".join(table) + "\n")


# --- orbit ----------------------------------------------------------------

def cmd_orbit(cfg: ScenarioConfig, args) -> str:
    u = cfg.units
    if args.samples < 1:
        raise InputError("--samples must be at least 1")
    names = [args.orbit] if args.orbit else cfg.orbit_names()
    out = []
    for name in names:
        traj = cfg.trajectory(name)
        el = cfg.orbits[name].elements
        period = orbital_period(el, cfg.body)
        t = el.epoch + period * np.arange(args.samples) / args.samples
        x, v = traj.evaluate(t)
        offsets = rate_exact(cfg.body, KinematicState(t=0.0, x=x, v=v)).offset
        out.append({
            "name": name,
            "period_s": u.seconds(period),
            "perigee_m": el.perigee,
            "apogee_m": el.apogee,
            "eccentricity": el.eccentricity,
            "offset_min": float(np.min(offsets)),
            "offset_max": float(np.max(offsets)),
            "offset_mean": float(np.mean(offsets)),
        })
    header = list(out[0]) if out else ["name"]
    rows = [tuple(o.values()) for o in out]
    table = [f"{'orbit':<8}{'period s':>14}{'perigee m':>16}{'apogee m':>16}"
             f"{'offset min':>15}{'offset max':>15}"]
    for o in out:
        table.append(f"{o['name']:<8}{o['period_s']:>14.3f}{o['perigee_m']:>16.1f}"
                     f"{o['apogee_m']:>16.1f}{o['offset_min']:>15.6e}{o['offset_max']:>15.6e}")
    return _render(args.format, {"command": "orbit", "orbits": out}, header, rows,
                   "\n".join(table) + "\n")


# --- solve ----------------------------------------------------------------

def cmd_solve(cfg: ScenarioConfig, args) -> str:
    u = cfg.units
    block = cfg.solve
    rx_name = block.get("receiver") or next(iter(cfg.receivers), None)
    if rx_name is None:
        raise ConfigError("solve: no receiver configured")
    receiver = np.array(cfg.receiver(rx_name))
    names = cfg.orbit_names(block.get("orbits"))
    t_emit = float(block.get("emission_time", 0.0)) * u.c
    clock = SatelliteClockModel(ClockMode(block.get("mode", "exact")), t_emit)
    obs = [make_observation(cfg.body, cfg.trajectory(n), clock, receiver, t_emit) for n in names]
    sigma = float(block.get("noise_sigma", 0.0))
    if sigma > 0:
        rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
        noise = sigma * rng.standard_normal(len(obs))
        obs = [replace(o, t_dev=o.t_dev + n) for o, n in zip(obs, noise)]
    fix = solve_position(obs, block.get("initial_guess", (0.0, 0.0, 0.0)), cfg=cfg.solver)
    error = float(np.linalg.norm(fix.position - receiver))
    doc = {
        "command": "solve",
        "receiver": rx_name,
        "satellites": names,
        "position_m": [float(c) for c in fix.position],
        "clock_bias_s": u.seconds(fix.clock_bias),
        "position_error_m": error,
        "iterations": fix.iterations,
        "residual_norm_m": fix.residual_norm,
        "condition_number": fix.condition_number,
    }
    table = (f"receiver {rx_name} from {len(names)} satellites ({', '.join(names)})\n"
             f"position      {fix.position[0]:.6f} {fix.position[1]:.6f} {fix.position[2]:.6f} m\n"
             f"position error {error:.3e} m\n"
             f"clock bias    {doc['clock_bias_s']:.3e} s\n"
             f"iterations    {fix.iterations}\n"
             f"residual norm {fix.residual_norm:.3e} m\n"
             f"condition     {fix.condition_number:.3f}\n")
    rows = [(rx_name, *doc["position_m"], doc["clock_bias_s"], error, fix.iterations,
             fix.residual_norm)]
    header = ["receiver", "x_m", "y_m", "z_m", "clock_bias_s", "position_error_m",
              "iterations", "residual_norm_m"]
    return _render(args.format, doc, header, rows, table)


# --- impact ---------------------------------------------------------------

def build_impact_scenario(cfg: ScenarioConfig, seed: int | None = None) -> ImpactScenario:
    u = cfg.units
    block = cfg.impact
    rx_name = block.get("receiver") or next(iter(cfg.receivers), None)
    if rx_name is None:
        raise ConfigError("impact: no receiver configured")
    names = cfg.orbit_names(block.get("orbits"))
    clock_epoch = float(block.get("clock_epoch", 0.0))
    if "times" in block:
        times = [float(t) for t in block["times"]]
    else:
        duration = float(block.get("duration", SECONDS_PER_DAY))
        count = int(block.get("epochs", 4))
        if count < 1 or duration <= 0:
            raise ConfigError("impact: need epochs >= 1 and duration > 0")
        times = [clock_epoch + duration * k / count for k in range(1, count + 1)]
    return ImpactScenario(
        body=cfg.body,
        trajectories=[cfg.trajectory(n) for n in names],
        receiver=np.array(cfg.receiver(rx_name)),
        epochs=[t * u.c for t in times],
        mode=ClockMode(block.get("mode", "uncorrected")),
        reference=ClockMode(block.get("reference", "exact")),
        clock_epoch=clock_epoch * u.c,
        geoid=cfg.geoid,
        noise_sigma=float(block.get("noise_sigma", 0.0)),
        seed=cfg.seed if seed is None else seed,
        solver=cfg.solver,
    )


def cmd_impact(cfg: ScenarioConfig, args) -> str:
    report = relativity_impact_experiment(build_impact_scenario(cfg, args.seed), cfg.units)
    if args.format == "json":
        return report.to_json() + "\n"
    if args.format == "csv":
        return report.to_csv()
    lines = [f"{'epoch s':>10}  {'mode':<12}{'vs':<8}{'pos err m':>12}{'clock div s':>15}"
             f"{'geoid div s':>15}{'range err m':>13}  status"]
    for r in report.rows:
        pos = "-" if r.position_error_m is None else f"{r.position_error_m:.4g}"
        geo = "-" if r.geoid_divergence_s is None else f"{r.geoid_divergence_s:.6e}"
        lines.append(f"{r.epoch_s:>10.1f}  {r.mode:<12}{r.reference:<8}{pos:>12}"
                     f"{r.clock_divergence_s:>15.6e}{geo:>15}{r.range_error_m:>13.3f}  {r.status}")
    return "\n".join(lines) + "\n"


COMMANDS = {"rate": cmd_rate, "drift": cmd_drift, "orbit": cmd_orbit,
            "solve": cmd_solve, "impact": cmd_impact}


def _global_flags(default):
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--config", type=Path, default=default,
                       help="scenario TOML file (default: bundled demo)")
    flags.add_argument("--format", choices=["table", "csv", "json"], default=default)
    flags.add_argument("--seed", type=int, default=default, help="random seed (u64)")
    flags.add_argument("--out", type=Path, default=default, help="write output to this file")
    return flags


def build_parser() -> argparse.ArgumentParser:
    # flags are accepted before or after the subcommand; the subcommand copy
    # must not clobber a value given before it
    common = _global_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="gpsreltime", parents=[_global_flags(None)],
        description="Relativistic satellite clock rates and their effect on positioning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", parents=[common], help="exact, circular and approximate rates")
    p.add_argument("--orbit", help="orbit name from the scenario")
    p.add_argument("--time", type=float, help="coordinate time on the orbit, s")
    p.add_argument("--radius", type=float, help="explicit state: radius, m")
    p.add_argument("--speed", type=float, default=0.0, help="explicit state: tangential speed, m/s")
    p.add_argument("--radial-speed", type=float, default=0.0, help="explicit state: radial speed, m/s")
    p.add_argument("--gm", type=float, help="override GM of the central body, m^3/s^2")
    p.add_argument("--body-mass", type=float, help="override central mass, kg")

    p = sub.add_parser("drift", parents=[common], help="accumulated clock drift")
    p.add_argument("--orbit")
    p.add_argument("--phi0", type=float, help="geoid constant (overrides scenario)")
    p.add_argument("--duration", type=float, help="s")

    p = sub.add_parser("orbit", parents=[common], help="orbit summary and rate range")
    p.add_argument("--orbit")
    p.add_argument("--samples", type=int, default=360)

    sub.add_parser("solve", parents=[common], help="noise-free or noisy position fix")
    sub.add_parser("impact", parents=[common], help="clock-mode impact experiment")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_scenario(args.config)
        if args.format is None:
            args.format = cfg.output_format
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        text = COMMANDS[args.command](cfg, args)
        _emit(text, args.out)
    except tuple(cls for cls, _ in _EXIT_CODES) as exc:
        code = next(c for cls, c in _EXIT_CODES if isinstance(exc, cls))
        print(f"gpsreltime {args.command}: error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
