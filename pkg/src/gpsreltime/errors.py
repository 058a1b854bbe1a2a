"""Exception hierarchy.

Every error raised by the package derives from :class:`GpsRelTimeError` so
callers (and the CLI) can map failures onto exit codes by class.
"""


class GpsRelTimeError(Exception):
    """Base class for all package errors."""


class DomainError(GpsRelTimeError, ValueError):
    """Input outside the physical domain (origin, interior, non-timelike)."""


class PreconditionError(GpsRelTimeError, ValueError):
    """A documented precondition of an operation does not hold."""


class ConvergenceError(GpsRelTimeError, RuntimeError):
    """An iterative method exhausted its budget without meeting tolerance."""


class GeometryError(GpsRelTimeError, ValueError):
    """Satellite geometry is degenerate or ill-conditioned."""


class InputError(GpsRelTimeError, ValueError):
    """Malformed or insufficient input data."""


class ConfigError(InputError):
    """Scenario configuration could not be parsed or validated."""
