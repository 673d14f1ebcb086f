import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rpe3bp import two_body as tb
from rpe3bp.errors import DomainError

taus = st.floats(-50, 50, allow_nan=False)


def test_pericentre():
    s = tb.eval_homoclinic(0.0, 1.0)
    assert s.r == 0.5 and s.y == 0.0 and s.G == 1.0
    assert math.isclose(s.alpha, math.pi)


def test_tau_one():
    s = tb.eval_homoclinic(1.0, 1.0)
    assert math.isclose(s.r, 1.0) and math.isclose(s.y, 1.0)
    assert math.isclose(s.alpha, 1.5 * math.pi)


def test_tau_two_energy():
    s = tb.eval_homoclinic(2.0, 2.0)
    assert math.isclose(s.r, 10.0)
    assert abs(tb.h2bp(s.r, s.y, s.G)) < 1e-15


def test_zero_momentum_rejected():
    with pytest.raises(DomainError, match="degenerate"):
        tb.eval_homoclinic(0.3, 0.0)


@given(taus, st.sampled_from([0.5, 1.0, 5.0]))
def test_parabolic_energy(tau, G):
    s = tb.eval_homoclinic(tau, G)
    assert abs(tb.h2bp(s.r, s.y, s.G)) < 1e-13


@given(taus)
def test_chart_invariants(tau):
    assert tb.r_h(tau) >= 0.5
    z = complex(math.cos(tb.alpha_h(tau)), math.sin(tb.alpha_h(tau)))
    assert abs(z - (tau - 1j) / (tau + 1j)) < 1e-12
    assert math.isclose(tb.r_h(-tau), tb.r_h(tau))
    assert tb.y_h(-tau) == -tb.y_h(tau)
    d = math.remainder(tb.alpha_h(-tau) + tb.alpha_h(tau), 2 * math.pi)
    assert abs(d) < 1e-12


def test_y_h_vanishes_only_at_zero():
    t = np.linspace(-5, 5, 1001)
    assert np.all((tb.y_h(t) == 0) == (t == 0))
    assert np.argmin(tb.r_h(t)) == 500


@pytest.mark.parametrize("u,tau", [(0.0, 0.0), (2.0 / 3.0, 1.0)])
def test_tau_from_u_exact(u, tau):
    assert abs(tb.tau_from_u(u) - tau) < 1e-15


def test_tau_from_u_large():
    t = tb.tau_from_u(100.0)
    assert abs(200.0 - t - t ** 3 / 3) < 1e-13
    c = 600.0 ** (1 / 3)
    assert abs(t - (c - 1 / c)) < 1e-3


@given(st.floats(-10, 10))
def test_inversion_round_trip(tau):
    assert abs(tb.tau_from_u(tb.u_of_tau(tau)) - tau) < 1e-12


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_inversion_monotone_and_accurate(u1, u2):
    t1, t2 = tb.tau_from_u(u1), tb.tau_from_u(u2)
    scale = max(1.0, abs(u1))
    assert abs(2 * u1 - t1 - t1 ** 3 / 3) <= 1e-13 * scale
    if u1 < u2:
        assert t1 <= t2


def test_far_field():
    u = np.array([1e6, -1e6])
    tau = tb.tau_from_u(u)
    # r_h ~ tau^2/2 with tau ~ (6u)^(1/3)
    assert np.allclose(tb.r_h(tau) / np.abs(u) ** (2 / 3), 6 ** (2 / 3) / 2, rtol=2e-3)
    a = np.remainder(tb.alpha_h(tau), 2 * np.pi)
    # the angle decays like 2/tau
    assert np.all(np.minimum(a, 2 * np.pi - a) * np.abs(tau) < 2.01)


def test_y_h_consistency():
    assert tb.y_h_consistency_check(np.arange(-2, 2.0001, 0.1)) < 1e-8
    assert tb.y_h_consistency_check([0.0]) < 1e-9
    assert tb.y_h_consistency_check(np.arange(10, 20.001, 0.5)) < 1e-8


def test_continuous_angle_is_unwrapped():
    t = np.linspace(-30, 30, 2001)
    a = tb.alpha_h_continuous(t)
    assert np.max(np.abs(np.diff(a))) < 0.1
    assert np.allclose(np.exp(1j * a), np.exp(1j * tb.alpha_h(t)))
