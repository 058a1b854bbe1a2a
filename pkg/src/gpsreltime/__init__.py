"""Exact and approximate relativistic clock rates for GPS-style satellites."""

__version__ = "0.1.0"

from .clock_rates import (
    GeoidConstant,
    KinematicState,
    RateResult,
    accumulated_drift,
    coordinate_time_of_proper,
    geoid_rescale,
    integrate_offset,
    integrate_proper_time,
    rate_approx,
    rate_circular,
    rate_exact,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    GeometryError,
    GpsRelTimeError,
    InputError,
    PreconditionError,
)
from .orbits import (
    CircularOrbit,
    KeplerElements,
    KeplerOrbit,
    TabulatedTrajectory,
    kepler_state,
    orbital_period,
    sample_trajectory,
)
from .positioning import (
    ClockMode,
    PositionFix,
    PseudorangeObs,
    SatelliteClockModel,
    make_observation,
    relativity_impact_experiment,
    solve_position,
)
from .schwarzschild import (
    FourVector,
    GravBody,
    four_length_sq,
    metric_at,
    potential,
    space_length_sq,
    validate_exterior,
)
from .units import Kind, UnitSystem, from_geometric, outward_normal, to_geometric
