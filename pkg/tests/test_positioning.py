import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from gpsreltime.cli import report_schema
from gpsreltime.clock_rates import (
    GeoidConstant,
    coordinate_time_of_proper,
    integrate_offset,
    rate_exact,
)
from gpsreltime.errors import ConvergenceError, GeometryError, InputError
from gpsreltime.orbits import CircularOrbit, KeplerElements, KeplerOrbit
from gpsreltime.positioning import (
    ClockMode,
    ImpactScenario,
    PseudorangeObs,
    SatelliteClockModel,
    SolverConfig,
    broadcast_error,
    make_observation,
    relativity_impact_experiment,
    residuals_and_jacobian,
    solve_position,
)
from helpers import A_GPS, C, EARTH, unit_vectors

R_EARTH = 6.371e6
DAY = 86400 * C
RECEIVER = np.array([4081945.0, 1410048.0, 4678105.0])


def sky(rng, receiver, n, radius=A_GPS, min_elev=0.2):
    """Satellite positions in the receiver's upper hemisphere."""
    up = receiver / np.linalg.norm(receiver)
    out = []
    while len(out) < n:
        d = unit_vectors(rng, 1)[0]
        if np.dot(d, up) > min_elev + 0.5:
            out.append(d * radius)
    return np.array(out)


def exact_obs(sats, receiver, bias=0.0):
    return [PseudorangeObs(s, 0.0, float(np.linalg.norm(s - receiver)) + bias) for s in sats]


def constellation(n=6, ecc=0.0):
    orbits = []
    for k in range(n):
        el = KeplerElements(A_GPS, ecc if k % 2 else 0.0, 0.96, k * np.pi / 3,
                            0.3 * k, 0.7 + 1.1 * k)
        orbits.append((CircularOrbit if el.eccentricity == 0 else KeplerOrbit)(el, EARTH))
    return orbits


# --- observations -------------------------------------------------------------

def test_exact_observation_reproduces_distance():
    orbit = constellation(2, 0.01)[1]
    t = 0.3 * DAY
    obs = make_observation(EARTH, orbit, SatelliteClockModel("exact"), RECEIVER, t)
    x, _ = orbit.evaluate(t)
    assert abs(obs.pseudorange - np.linalg.norm(x - RECEIVER)) < 1e-6
    obs0 = make_observation(EARTH, orbit, SatelliteClockModel("exact", epoch=t), RECEIVER, t)
    assert abs(obs0.pseudorange - np.linalg.norm(x - RECEIVER)) < 1e-6


def test_zero_baseline():
    orbit = constellation(1)[0]
    x, _ = orbit.evaluate(0.0)
    obs = make_observation(EARTH, orbit, SatelliteClockModel("exact"), x, 0.0)
    assert obs.pseudorange == 0.0


def test_uncorrected_lag_one_day():
    orbit = constellation(1)[0]
    obs = make_observation(EARTH, orbit, SatelliteClockModel("uncorrected"), RECEIVER, DAY)
    lag = obs.t_sat_broadcast / C
    assert obs.t_ref == DAY
    off = rate_exact(EARTH, orbit.state(0.0)).offset
    with mp.workdps(30):
        oracle = float(mpf(off) * 86400)
    assert lag == pytest.approx(oracle, rel=1e-9)
    assert lag * 1e6 == pytest.approx(-21.6, abs=0.05)


def test_approximate_broadcast_matches_inversion():
    orbit = constellation(2, 0.02)[1]
    t = 0.5 * DAY
    clock = SatelliteClockModel("approximate")
    reading = t + integrate_offset(EARTH, orbit, 0.0, t)
    t_claim = coordinate_time_of_proper(EARTH, orbit, 0.0, reading, tol=1e-6, model="approximate")
    err = broadcast_error(EARTH, orbit, clock, t)
    # the absolute-time inversion only resolves to an ulp of t (~2 mm here)
    assert err == pytest.approx(t_claim - t, abs=2 * math.ulp(t))
    # first-order model error on a 0.02 eccentric orbit is tiny but not zero
    assert 0 < abs(err) < 1e-3


def test_emission_before_epoch():
    with pytest.raises(InputError):
        make_observation(EARTH, constellation(1)[0], SatelliteClockModel("exact", 5.0), RECEIVER, 1.0)


# --- solver -----------------------------------------------------------------------

def test_four_satellite_fix(rng):
    sats = sky(rng, RECEIVER, 4)
    fix = solve_position(exact_obs(sats, RECEIVER))
    assert np.linalg.norm(fix.position - RECEIVER) < 1e-6
    assert abs(fix.clock_bias / C) < 1e-14
    assert fix.residual_norm < 1e-6 and fix.iterations <= 50


def test_fewer_than_four():
    with pytest.raises(InputError, match="at least 4"):
        solve_position(exact_obs(np.eye(3) * A_GPS, RECEIVER))


def test_coplanar_geometry_rejected():
    rx = np.array([R_EARTH, 0.0, 0.0])
    ang = np.linspace(0, 2 * np.pi, 5)[:-1] + 0.3
    sats = np.stack([A_GPS * np.cos(ang), A_GPS * np.sin(ang), np.zeros(4)], axis=1)
    with pytest.raises(GeometryError):
        solve_position(exact_obs(sats, rx), initial_guess=(R_EARTH * 0.9, 1e5, 0.0))


def test_common_delay_moves_only_bias(rng):
    sats = sky(rng, RECEIVER, 5)
    delta = 1234.5
    a = solve_position(exact_obs(sats, RECEIVER))
    b = solve_position(exact_obs(sats, RECEIVER, bias=delta))
    np.testing.assert_allclose(b.position, a.position, atol=1e-6)
    assert b.clock_bias - a.clock_bias == pytest.approx(delta, abs=1e-6)


def test_iteration_cap():
    sats = sky(np.random.default_rng(1), RECEIVER, 4)
    with pytest.raises(ConvergenceError):
        solve_position(exact_obs(sats, RECEIVER), cfg=SolverConfig(max_iter=1))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    rx = unit_vectors(rng, 1)[0] * R_EARTH
    obs = exact_obs(sky(rng, rx, 6), rx, bias=rng.uniform(-1e4, 1e4))
    params = np.append(rx + rng.normal(0, 1e5, 3), rng.uniform(-1e4, 1e4))
    _, jac = residuals_and_jacobian(obs, params)
    h = 1.0
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        rp, _ = residuals_and_jacobian(obs, params + e)
        rm, _ = residuals_and_jacobian(obs, params - e)
        fd = (rp - rm) / (2 * h)
        np.testing.assert_allclose(jac[:, j], fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(fd)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 10))
def test_noise_free_exactness_and_idempotence(seed, n):
    rng = np.random.default_rng(seed)
    rx = unit_vectors(rng, 1)[0] * R_EARTH
    sats = sky(rng, rx, n)
    obs = exact_obs(sats, rx)
    fix = solve_position(obs)
    assert fix.residual_norm < 1e-6
    # ranges are rounded doubles; poor geometry amplifies that rounding
    floor = 4 * fix.condition_number * np.finfo(float).eps * np.max(np.abs(sats))
    assert np.linalg.norm(fix.position - rx) < max(1e-6, floor)
    again = solve_position(obs, fix.position, fix.clock_bias)
    assert again.iterations <= 2
    assert np.linalg.norm(again.position - fix.position) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_translation_equivariance(seed):
    # kilometre-scale geometry keeps the rounding floor well below 1e-9 m
    rng = np.random.default_rng(seed)
    rx = rng.uniform(-100, 100, 3)
    sats = rx + sky(rng, np.array([0, 0, 1.0]), 6, radius=2e3)
    shift = rng.uniform(-5e3, 5e3, 3)
    a = solve_position(exact_obs(sats, rx, 3.0), rx + 50)
    b = solve_position(exact_obs(sats + shift, rx + shift, 3.0), rx + shift + 50)
    np.testing.assert_allclose(b.position, a.position + shift, atol=1e-9)


# --- impact experiment -----------------------------------------------------------

@pytest.fixture(scope="module")
def circ6():
    return constellation(6)


def scenario(trajs, mode, reference, **kw):
    kw.setdefault("epochs", [DAY / 4 * k for k in range(1, 5)])
    return ImpactScenario(body=EARTH, trajectories=trajs, receiver=RECEIVER,
                          mode=ClockMode(mode), reference=ClockMode(reference), **kw)


def test_exact_vs_exact_is_zero(circ6):
    rep = relativity_impact_experiment(scenario(circ6, "exact", "exact"))
    assert all(r.position_error_m == 0.0 and r.clock_divergence_s == 0.0 for r in rep.rows)


def test_uncorrected_divergence_grows_like_offset(circ6):
    rep = relativity_impact_experiment(scenario(circ6, "uncorrected", "exact"))
    off = rate_exact(EARTH, circ6[0].state(0.0)).offset
    div = [abs(r.clock_divergence_s) for r in rep.rows]
    assert all(b > a > 0 for a, b in zip(div, div[1:]))
    for r in rep.rows:
        assert r.clock_divergence_s == pytest.approx(off * r.epoch_s, rel=1e-3)
    # same orbit radius for everyone: the lag is common mode and lands in the bias
    assert all(r.position_error_m < 1e-3 for r in rep.rows)


def test_approximate_vs_exact_below_10ps(circ6):
    rep = relativity_impact_experiment(scenario(circ6[:4], "approximate", "exact", epochs=[DAY]))
    assert abs(rep.rows[0].clock_divergence_s) < 10e-12


def test_geoid_divergence_column(circ6):
    rep = relativity_impact_experiment(
        scenario(circ6, "uncorrected", "exact", epochs=[DAY], geoid=GeoidConstant(-6.96927e-10)))
    row = rep.rows[0]
    assert row.geoid_divergence_s * 1e6 == pytest.approx(38.6, rel=0.01)
    assert row.geoid_divergence_s * C / 1e3 == pytest.approx(11.6, rel=0.01)


def test_eccentric_satellites_move_the_fix():
    trajs = constellation(6, ecc=0.02)
    rep = relativity_impact_experiment(scenario(trajs, "uncorrected", "exact", epochs=[DAY / 3]))
    assert rep.rows[0].position_error_m > 1.0


def test_noise_is_seeded(circ6):
    a = relativity_impact_experiment(scenario(circ6, "uncorrected", "exact", noise_sigma=3.0, seed=11))
    b = relativity_impact_experiment(scenario(circ6, "uncorrected", "exact", noise_sigma=3.0, seed=11))
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()
    assert a.to_dict()["seed"] == 11


def test_solver_failures_recorded(circ6):
    rep = relativity_impact_experiment(
        scenario(circ6, "uncorrected", "exact", epochs=[DAY], solver=SolverConfig(max_iter=1)))
    assert rep.rows[0].status.startswith("ConvergenceError")
    assert rep.rows[0].position_error_m is None


def test_report_serialisation(circ6):
    rep = relativity_impact_experiment(scenario(circ6[:4], "uncorrected", "exact", epochs=[DAY]))
    doc = json.loads(rep.to_json())
    jsonschema.validate(doc, report_schema("impact"))
    lines = rep.to_csv().splitlines()
    assert lines[0] == ("epoch_s,mode,reference,position_error_m,clock_divergence_s,"
                        "geoid_divergence_s,range_error_m,status")
    assert float(lines[1].split(",")[4]) == rep.rows[0].clock_divergence_s


def test_impact_needs_four(circ6):
    with pytest.raises(InputError):
        relativity_impact_experiment(scenario(circ6[:3], "uncorrected", "exact"))
