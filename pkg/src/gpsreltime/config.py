"""Scenario files.

Scenarios are TOML documents with SI inputs (metres, seconds, degrees).
The grammar is documented in ``docs/scenario.md``; ``data/demo.toml`` is a
complete example and the default when no file is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .clock_rates import GeoidConstant
from .errors import ConfigError, GpsRelTimeError
from .orbits import CircularOrbit, KeplerElements, KeplerOrbit
from .positioning import ClockMode, SolverConfig
from .schwarzschild import GravBody
from .units import GM_EARTH_SI, UnitSystem


@dataclass
class OrbitSpec:
    name: str
    elements: KeplerElements


@dataclass
class ScenarioConfig:
    units: UnitSystem
    body: GravBody
    geoid: GeoidConstant
    orbits: dict[str, OrbitSpec]
    receivers: dict[str, tuple[float, float, float]]
    rate: dict = field(default_factory=dict)
    drift: dict = field(default_factory=dict)
    solve: dict = field(default_factory=dict)
    impact: dict = field(default_factory=dict)
    solver: SolverConfig = SolverConfig()
    output_format: str = "table"
    seed: int = 0
    source: str = "<memory>"

    def trajectory(self, name: str, body: GravBody | None = None):
        body = self.body if body is None else body
        try:
            spec = self.orbits[name]
        except KeyError:
            raise ConfigError(f"unknown orbit {name!r}") from None
        cls = CircularOrbit if spec.elements.eccentricity == 0.0 else KeplerOrbit
        return cls(spec.elements, body)

    def receiver(self, name: str):
        try:
            return self.receivers[name]
        except KeyError:
            raise ConfigError(f"unknown receiver {name!r}") from None

    def orbit_names(self, names=None) -> list[str]:
        if names is None:
            return list(self.orbits)
        for n in names:
            if n not in self.orbits:
                raise ConfigError(f"unknown orbit {n!r}")
        return list(names)


_SECTIONS = {"units", "body", "geoid", "orbits", "receivers", "rate", "drift", "solve",
             "impact", "solver", "output", "seed"}


def _number(table: dict, key: str, default=None, where: str = "") -> float:
    if key not in table:
        if default is None:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where}: {key!r} must be a finite number, got {value!r}")
    return float(value)


def _vector(value, where: str):
    if (not isinstance(value, list) or len(value) != 3
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"{where}: expected a list of three numbers, got {value!r}")
    return tuple(float(v) for v in value)


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse and validate a scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries "(at line L, column C)"
        raise ConfigError(f"{source}: {exc}") from None
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
    try:
        return _build(doc, source)
    except ConfigError:
        raise
    except GpsRelTimeError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def _build(doc: dict, source: str) -> ScenarioConfig:
    u = doc.get("units", {})
    units = UnitSystem(c=_number(u, "c", UnitSystem.c, "units"),
                       gamma=_number(u, "gamma", UnitSystem.gamma, "units"))

    b = doc.get("body", {})
    if "mass" in b and "gm" in b:
        raise ConfigError("body: give either 'gm' or 'mass', not both")
    if "mass" in b:
        body = GravBody.from_mass(_number(b, "mass", where="body"), units)
    else:
        body = GravBody.from_gm(_number(b, "gm", GM_EARTH_SI, "body"), units)

    g = doc.get("geoid", {})
    geoid = GeoidConstant(_number(g, "phi0", 0.0, "geoid"), _number(g, "bound", 1e-8, "geoid"))

    orbits = {}
    for i, o in enumerate(doc.get("orbits", [])):
        where = f"orbits[{i}]"
        name = str(o.get("name", f"orbit{i}"))
        if name in orbits:
            raise ConfigError(f"{where}: duplicate orbit name {name!r}")
        values = dict(
            semi_major_axis_m=_number(o, "semi_major_axis", where=where),
            eccentricity=_number(o, "eccentricity", 0.0, where),
            inclination_deg=_number(o, "inclination_deg", 0.0, where),
            raan_deg=_number(o, "raan_deg", 0.0, where),
            arg_perigee_deg=_number(o, "arg_perigee_deg", 0.0, where),
            mean_anomaly_deg=_number(o, "mean_anomaly_deg", 0.0, where),
            epoch_s=_number(o, "epoch", 0.0, where),
        )
        try:
            el = KeplerElements.from_si(units=units, **values)
        except GpsRelTimeError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if el.perigee <= 2.0 * body.m_geo:
            raise ConfigError(f"{where}: perigee inside Schwarzschild radius")
        orbits[name] = OrbitSpec(name, el)

    receivers = {}
    for i, r in enumerate(doc.get("receivers", [])):
        where = f"receivers[{i}]"
        name = str(r.get("name", f"receiver{i}"))
        if "position" not in r:
            raise ConfigError(f"{where}: missing required key 'position'")
        receivers[name] = _vector(r["position"], where)

    s = doc.get("solver", {})
    solver = SolverConfig(step_tol=_number(s, "step_tol", 1e-9, "solver"),
                          max_iter=int(_number(s, "max_iter", 50, "solver")),
                          max_condition=_number(s, "max_condition", 1e8, "solver"))

    fmt = doc.get("output", {}).get("format", "table")
    if fmt not in ("table", "csv", "json"):
        raise ConfigError(f"output: unknown format {fmt!r}")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    cfg = ScenarioConfig(units=units, body=body, geoid=geoid, orbits=orbits,
                         receivers=receivers, rate=dict(doc.get("rate", {})),
                         drift=dict(doc.get("drift", {})), solve=dict(doc.get("solve", {})),
                         impact=dict(doc.get("impact", {})), solver=solver,
                         output_format=fmt, seed=seed, source=source)
    _check_references(cfg)
    return cfg


def _check_references(cfg: ScenarioConfig):
    for block_name in ("rate", "drift"):
        block = getattr(cfg, block_name)
        if "orbit" in block:
            cfg.orbit_names([block["orbit"]])
    for block_name in ("solve", "impact"):
        block = getattr(cfg, block_name)
        if "receiver" in block:
            cfg.receiver(block["receiver"])
        if "orbits" in block:
            cfg.orbit_names(block["orbits"])
    for key in ("mode", "reference"):
        if key in cfg.impact:
            try:
                ClockMode(cfg.impact[key])
            except ValueError:
                raise ConfigError(f"impact: unknown clock mode {cfg.impact[key]!r}") from None


def load_scenario(path: str | Path | None = None) -> ScenarioConfig:
    """Load a scenario file, or the bundled demo scenario when ``path`` is None."""
    if path is None:
        text = resources.files("gpsreltime").joinpath("data/demo.toml").read_text()
        return parse_scenario(text, "demo.toml")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_scenario(text, str(path))
