import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rpe3bp import dynamics as dyn
from rpe3bp import two_body as tb
from rpe3bp.errors import CollisionError
from rpe3bp.primaries import PrimaryEphemeris


def test_kepler_attraction():
    a = dyn.cartesian_rhs([1.0, 0.0], [0.0, 0.0], 0.0, PrimaryEphemeris(0.0, 0.0))
    assert np.allclose(a, [-1.0, 0.0])


def test_barycentre_equal_masses():
    a = dyn.cartesian_rhs([0.0, 0.0], [0.0, 0.0], 0.4, PrimaryEphemeris(0.5, 0.0))
    assert np.allclose(a, 0.0, atol=1e-15)


def test_collision_flag():
    eph = PrimaryEphemeris(0.3, 0.0)
    q0, _ = eph.primary_positions(0.0)
    with pytest.raises(CollisionError):
        dyn.cartesian_rhs(q0 + 1e-5, [0, 0], 0.0, eph, collision_floor=1e-3)


def test_circular_test_orbit_returns():
    eph = PrimaryEphemeris(0.3, 0.0)
    r = 10.0
    # effective central mass 1 at large r, plus the averaged quadrupole
    omega = math.sqrt((1.0 + 0.75 * 0.3 * 0.7 / r ** 2) / r ** 3)
    s = dyn.polar_state(r, 0.0, 0.0, 0.0, r * r * omega, eph)
    period = 2 * math.pi / omega
    tr = dyn.integrate(s, (0.0, period), eph)
    end = tr.final
    assert abs(end.r - r) / r < 1e-3
    assert abs(math.remainder(end.alpha, 2 * math.pi)) < 1e-2


@given(st.floats(2.0, 30.0), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi),
       st.floats(-1, 1), st.floats(-3, 3), st.sampled_from([0.0, 0.1, 0.5]))
def test_polar_and_cartesian_fields_agree(r, alpha, t, y, G, e):
    eph = PrimaryEphemeris(0.3, e)
    s = dyn.polar_state(r, alpha, t, y, G, eph)
    d = dyn.polar_rhs(s, eph)
    c = dyn.polar_to_cartesian(s)
    acc = dyn.cartesian_rhs([c.qx, c.qy], [c.vx, c.vy], t, eph)
    ca, sa = math.cos(alpha), math.sin(alpha)
    # radial and tangential projections of the acceleration
    ydot = acc[0] * ca + acc[1] * sa + G * G / r ** 3
    gdot = r * (acc[1] * ca - acc[0] * sa)
    assert abs(d.y - ydot) < 1e-12 * max(1, abs(ydot))
    assert abs(d.G - gdot) < 1e-12 * max(1, abs(gdot))
    assert d.t == 1.0 and math.isclose(d.r, y) and math.isclose(d.alpha, G / r ** 2)


@given(st.floats(2.0, 30.0), st.floats(0, 6.3), st.floats(0, 6.3), st.floats(-1, 1), st.floats(-3, 3))
def test_jacobi_rate_vanishes_when_circular(r, alpha, t, y, G):
    eph = PrimaryEphemeris(0.3, 0.0)
    d = dyn.polar_rhs(dyn.polar_state(r, alpha, t, y, G, eph), eph)
    assert abs(d.G + d.E) < 1e-14
    d0 = dyn.polar_rhs(dyn.polar_state(r, alpha, t, y, G, PrimaryEphemeris(0.0, 0.3)),
                       PrimaryEphemeris(0.0, 0.3))
    assert d0.G == 0.0


def test_two_body_trajectory_matches_closed_form():
    eph = PrimaryEphemeris(0.0, 0.0)
    G = 2.0
    u = np.linspace(tb.u_of_tau(-3.0), 5.0, 30)
    tau = tb.tau_from_u(u)
    s0 = dyn.polar_state(G * G * tb.r_h(-3.0), tb.alpha_h_continuous(-3.0), G ** 3 * u[0],
                         tb.y_h(-3.0) / G, G, eph)
    tr = dyn.integrate(s0, (G ** 3 * u[0], G ** 3 * u[-1]), eph, t_eval=G ** 3 * u)
    assert np.allclose(tr.column("r"), G * G * tb.r_h(tau), rtol=1e-9)
    assert np.allclose(tr.column("alpha"), tb.alpha_h_continuous(tau), atol=1e-9)


def _passage(eps, G=2.0, r0=200.0):
    eph = PrimaryEphemeris(0.3, eps)
    tau = -math.sqrt(2 * r0 / G ** 2 - 1)
    s = dyn.polar_state(G * G * tb.r_h(tau), tb.alpha_h_continuous(tau), 0.0, tb.y_h(tau) / G, G, eph)
    cfg = dyn.IntegratorConfig(r_stop=r0 * 1.0001)
    return dyn.integrate(s, (0.0, 1e6), eph, cfg)


def test_jacobi_conserved_only_when_circular():
    tr = _passage(0.0)
    assert tr.status == "radius_reached"
    assert tr.diagnostics["max_dJ"] < 1e-8
    tr = _passage(0.05)
    j = tr.diagnostics["jacobi"]
    assert np.max(np.abs(j - j[0])) > 1e-4


def test_energy_drift_scales_with_tolerance():
    eph = PrimaryEphemeris(0.3, 0.1)
    s = dyn.polar_state(5.0, 0.3, 0.0, 0.1, 1.7, eph)
    d = [dyn.integrate(s, (0.0, 300.0), eph, dyn.IntegratorConfig(rel_tol=tol, abs_tol=tol * 1e-2))
         .diagnostics["max_dH"] for tol in (1e-8, 5e-9)]
    assert d[0] < 1e-6
    assert d[1] < d[0] * 4


def test_default_energy_drift_over_thousand():
    eph = PrimaryEphemeris(0.3, 0.05)
    s = dyn.polar_state(6.0, 0.4, 0.0, 0.05, 1.8, eph)
    assert dyn.integrate(s, (0.0, 1000.0), eph).diagnostics["max_dH"] < 1e-9


def test_time_reversal():
    eph = PrimaryEphemeris(0.3, 0.2)
    s = dyn.polar_state(8.0, 0.5, 0.3, 0.2, 2.0, eph)
    fwd = dyn.integrate(s, (0.3, 40.3), eph).final
    back = dyn.integrate(dyn.time_reversed(fwd), (-40.3, -0.3), eph).final
    ret = dyn.time_reversed(back)
    assert np.allclose(ret[:5], s[:5], atol=1e-9)


def test_mcgehee_round_trip():
    m = dyn.to_mcgehee(dyn.PolarState(2.0, 0, 0, 0, 1, 0))
    assert m.x == 1.0
    assert math.isclose(dyn.to_mcgehee(dyn.PolarState(200.0, 0, 0, 0, 1, 0)).x, 0.1)
    s = dyn.PolarState(123.4, 0.2, 0.3, -0.1, 1.5, 0.7)
    assert np.allclose(dyn.from_mcgehee(dyn.to_mcgehee(s)), s, rtol=1e-14)


def test_escape_to_far_field():
    eph = PrimaryEphemeris(0.3, 0.1)
    G = 2.0
    s = dyn.polar_state(G * G * tb.r_h(0.5), tb.alpha_h(0.5), 0.0, tb.y_h(0.5) / G, G, eph)
    tr = dyn.integrate(s, (0.0, 1e12), eph, dyn.IntegratorConfig(r_stop=1e6))
    assert tr.status == "radius_reached" and tr.final.r >= 1e6
    assert np.any(tr.charts == dyn.CHARTS["mcgehee"])


def test_chart_switch_continuity():
    eph = PrimaryEphemeris(0.3, 0.0)
    s = dyn.polar_state(40.0, 0.0, 0.0, 0.2, 2.0, eph)
    t_eval = np.linspace(0, 200, 9)
    a = dyn.integrate(s, (0, 200), eph, t_eval=t_eval)
    b = dyn.integrate(s, (0, 200), eph, dyn.IntegratorConfig(auto_switch=False), t_eval=t_eval)
    assert np.allclose(a.states, b.states, rtol=1e-9, atol=1e-9)
