import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rpe3bp.errors import DomainError
from rpe3bp.primaries import PrimaryEphemeris, rho_from_f, solve_kepler, true_anomaly_and_rho

eccs = st.floats(0.0, 0.9)


def test_kepler_fixed_points():
    assert solve_kepler(0.0, 0.3) == 0.0
    assert math.isclose(solve_kepler(math.pi, 0.3), math.pi)


def test_kepler_against_bisection():
    from scipy.optimize import brentq
    ref = brentq(lambda x: x - 0.2 * math.sin(x) - math.pi / 2, 0, 2 * math.pi, xtol=1e-15)
    xi = solve_kepler(math.pi / 2, 0.2)
    assert abs(xi - ref) < 1e-12
    assert abs(xi - 0.2 * math.sin(xi) - math.pi / 2) < 1e-12
    assert abs(xi - 1.7670) < 1e-4


def test_kepler_rejects_parabolic():
    with pytest.raises(DomainError):
        solve_kepler(1.0, 1.0)
    with pytest.raises(DomainError):
        PrimaryEphemeris(0.3, 1.0)


@given(st.floats(-50, 50), eccs)
def test_kepler_residual_and_period(t, e):
    xi = solve_kepler(t, e)
    assert abs(xi - e * math.sin(xi) - t) <= 1e-13 * max(1.0, abs(t))
    assert abs(solve_kepler(t + 2 * math.pi, e) - xi - 2 * math.pi) < 1e-12


def test_true_anomaly_examples():
    f, rho = true_anomaly_and_rho(0.0, 0.2)
    assert math.isclose(rho, 0.8) and abs(f) < 1e-15
    f, rho = true_anomaly_and_rho(math.pi, 0.2)
    assert math.isclose(rho, 1.2) and math.isclose(abs(f), math.pi)


@given(st.floats(-10, 10), eccs)
def test_orbit_equation(xi, e):
    f, rho = true_anomaly_and_rho(xi, e)
    assert abs(rho - (1 - e * e) / (1 + e * math.cos(f))) < 1e-12
    assert abs(rho_from_f(f, e) - rho) < 1e-12


def test_positions_examples():
    q0, q1 = PrimaryEphemeris(0.5, 0.0).primary_positions(1.234)
    assert np.allclose(q0, -q1) and math.isclose(np.hypot(*q0), 0.5)
    q0, q1 = PrimaryEphemeris(0.3, 0.0).primary_positions(math.pi / 2)
    assert np.allclose(q0, [0, 0.3], atol=1e-15) and np.allclose(q1, [0, -0.7], atol=1e-15)
    eph = PrimaryEphemeris(0.3, 0.2)
    q0, q1 = eph.primary_positions(1.0)
    xi = solve_kepler(1.0, 0.2)
    assert abs(np.hypot(*(q0 - q1)) - (1 - 0.2 * math.cos(xi))) < 1e-12


@given(st.floats(0.0, 0.5), eccs, st.floats(-20, 20))
def test_centre_of_mass_and_period(mu, e, t):
    eph = PrimaryEphemeris(mu, e)
    q0, q1 = eph.primary_positions(t)
    assert np.allclose((1 - mu) * q0 + mu * q1, 0.0, atol=1e-15)
    _, rho = eph.f_rho(t)
    assert 1 - e - 1e-14 <= rho <= 1 + e + 1e-14
    assert abs(np.hypot(*(q0 - q1)) - rho) < 1e-12
    p0, p1 = eph.primary_positions(t + 2 * math.pi)
    assert np.allclose(p0, q0, atol=1e-12) and np.allclose(p1, q1, atol=1e-12)


def test_circular_limit_is_linear_in_eps():
    t = np.linspace(0, 2 * np.pi, 257)
    dev = [np.max(np.abs(PrimaryEphemeris(0.3, e).f_rho(t)[0] - t)) for e in (1e-3, 1e-4)]
    assert abs(dev[0] / dev[1] - 10.0) < 0.01
    f, rho = PrimaryEphemeris(0.3, 0.0).f_rho(t)
    assert np.allclose(f, t) and np.allclose(rho, 1.0)


def test_rate_matches_finite_difference():
    eph = PrimaryEphemeris(0.3, 0.4)
    h = 1e-6
    fdot = eph.rates(0.7)[0]
    fd = (eph.f_rho(0.7 + h)[0] - eph.f_rho(0.7 - h)[0]) / (2 * h)
    assert abs(fdot - fd) < 1e-8


def test_mass_ratio_range():
    with pytest.raises(DomainError):
        PrimaryEphemeris(0.6, 0.0)
    PrimaryEphemeris(0.0, 0.0)
