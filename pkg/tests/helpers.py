"""Random state generators and extended-precision oracles shared by the tests."""

import numpy as np
from mpmath import mp, mpf, sqrt as msqrt

from gpsreltime.schwarzschild import GravBody

C = 299792458.0
GM_EARTH = 3.986004418e14
A_GPS = 26561763.0
EARTH = GravBody(GM_EARTH / C**2)


def unit_vectors(rng, n):
    u = rng.standard_normal((n, 3))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def exterior_states(rng, n, r_min=1.1, r_max=1e12, max_escape_fraction=0.9):
    """Random (m, x, v) with |x| in [r_min, r_max] Schwarzschild radii.

    The speed is drawn as a fraction of the local escape speed sqrt(2m/r) as
    seen by a static observer, and converted to coordinate velocity, so every
    state is timelike.
    """
    m = 10.0 ** rng.uniform(-3, 3, n)
    r = 2 * m * 10.0 ** rng.uniform(np.log10(r_min), np.log10(r_max), n)
    nrm = unit_vectors(rng, n)
    x = nrm * r[:, None]
    d = unit_vectors(rng, n)
    pot = -m / r
    w = rng.uniform(0, max_escape_fraction, n) * np.sqrt(-2 * pot)
    k = 2 * pot / (1 + 2 * pot)
    d_sch = 1 - k * np.sum(nrm * d, axis=1) ** 2
    lam = w * np.sqrt((1 + 2 * pot) / d_sch)
    return m, x, d * lam[:, None]


def circular_states(rng, n, r_min=1.6, r_max=1e12):
    """Random circular-orbit states (Newtonian speed sqrt(m/r), tangential velocity)."""
    m = 10.0 ** rng.uniform(-3, 3, n)
    r = 2 * m * 10.0 ** rng.uniform(np.log10(r_min), np.log10(r_max), n)
    nrm = unit_vectors(rng, n)
    t = np.cross(nrm, unit_vectors(rng, n))
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    return m, nrm * r[:, None], t * np.sqrt(m / r)[:, None]


def gps_states(rng, n):
    """GPS-regime states: Earth mass, radii 2e7..4.2e7 m, near-circular speeds."""
    r = rng.uniform(2.0e7, 4.2e7, n)
    x = unit_vectors(rng, n) * r[:, None]
    speed = np.sqrt(EARTH.m_geo / r) * rng.uniform(0.8, 1.2, n)
    return x, unit_vectors(rng, n) * speed[:, None]


def mp_exact_offset(m, x, v, dps=50):
    """ds/dt - 1 evaluated in mpmath from the binary64 inputs."""
    with mp.workdps(dps):
        x = [mpf(float(c)) for c in x]
        v = [mpf(float(c)) for c in v]
        r = msqrt(sum(c * c for c in x))
        pot = -mpf(float(m)) / r
        nv = sum(a * b for a, b in zip(x, v)) / r
        eps = 2 * pot - sum(c * c for c in v) + 2 * pot / (1 + 2 * pot) * nv * nv
        return msqrt(1 + eps) - 1
