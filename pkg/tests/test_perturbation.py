import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rpe3bp import perturbation as pert
from rpe3bp import two_body as tb
from rpe3bp.dynamics import PolarState
from rpe3bp.errors import DomainError
from rpe3bp.primaries import PrimaryEphemeris


def test_zero_section_is_parabola():
    c = pert.FrameCoords(2 / 3, 0.0, 0.0, 0.0, 0.0, 0.0)
    s = pert.eta_map(c, 2.0)
    assert math.isclose(s.r, 4.0)
    assert math.isclose(s.y, tb.y_h(1.0) / 2) and s.G == 2.0
    assert abs(math.remainder(s.alpha - tb.alpha_h(1.0), 2 * math.pi)) < 1e-14
    assert abs(tb.h2bp(s.r, s.y, s.G)) < 1e-15


@given(st.floats(-30, 30).filter(lambda u: abs(u) > 1e-3), st.floats(-3, 3),
       st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_eta_round_trip(u, beta, Y, J):
    c = pert.FrameCoords(u, beta, 0.4, Y, J, 0.1)
    back = pert.eta_inverse(pert.eta_map(c, 3.0), 3.0, u_sign=math.copysign(1, u))
    assert np.allclose(back, c, atol=1e-12 * max(1, abs(u)))


def test_eta_example_round_trip():
    c = pert.FrameCoords(1.0, 1.0, 0.0, 0.01, 0.02, 0.0)
    assert np.allclose(pert.eta_inverse(pert.eta_map(c, 3.0), 3.0), c, atol=1e-12)


def test_singular_chart():
    with pytest.raises(DomainError):
        pert.eta_map(pert.FrameCoords(1e-8, 0, 0, 0, 0, 0), 3.0)
    with pytest.raises(DomainError):
        pert.PerturbedFrame(1.0, PrimaryEphemeris(0.3))


def test_loop_integral_in_beta():
    i_m = 3.0
    n = 64
    total = 0.0
    for b in 2 * np.pi * np.arange(n) / n:
        c = pert.FrameCoords(0.8, b, 0.2, 0.01, 0.03, 0.0)
        total += pert.pullback_difference(c, pert.FrameCoords(0, 1, 0, 0, 0, 0), i_m) * 2 * np.pi / n
    assert abs(total - 2 * np.pi * i_m) < 1e-10


def test_pullback_u_component():
    c = pert.FrameCoords(0.8, 0.1, 0.2, 0.01, 0.03, 0.0)
    rh = tb.r_h(tb.tau_from_u(0.8))
    d = pert.pullback_difference(c, pert.FrameCoords(1, 0, 0, 0, 0, 0), 3.0)
    assert abs(d - 2 * 3.0 / rh) < 1e-12


@given(st.floats(-20, 20), st.floats(0, 6.3), st.floats(0, 6.3))
def test_massless_limit(u, beta, t):
    assert pert.perturbative_potential(u, beta, t, 3.0, 0.2, 0.0) == 0.0


@given(st.floats(-20, 20), st.floats(0, 6.3), st.floats(0, 6.3), st.floats(-5, 5))
def test_circular_depends_on_phase_difference(u, beta, t, c):
    a = pert.perturbative_potential(u, beta, t, 3.0, 0.0, 0.3)
    b = pert.perturbative_potential(u, beta + c, t + c, 3.0, 0.0, 0.3)
    assert abs(a - b) < 1e-14


def test_two_evaluation_paths():
    a = pert.perturbative_potential(1.0, 0.7, 0.2, 5.0, 0.0, 0.3)
    b = pert.potential_direct(1.0, 0.7, 0.2, 5.0, 0.0, 0.3)
    assert abs(a - b) < 1e-12
    a = pert.perturbative_potential(-2.0, 0.3, 1.1, 2.0, 0.2, 0.3)
    b = pert.potential_direct(-2.0, 0.3, 1.1, 2.0, 0.2, 0.3)
    assert abs(a - b) < 1e-12


def test_cancellation_at_large_momentum():
    # the closed form keeps its relative accuracy where plain subtraction loses digits
    import mpmath
    mpmath.mp.dps = 40
    i_m, u, beta, t = 8.0, 3.0, 0.4, 0.9
    mu = mpmath.mpf(0.3)  # masses must sum to one exactly in the reference
    tau = mpmath.mpf(tb.tau_from_u(u))
    rh = (tau ** 2 + 1) / 2
    al = beta + mpmath.atan2(-2 * tau / (tau ** 2 + 1), (tau ** 2 - 1) / (tau ** 2 + 1))
    r = i_m ** 2 * rh
    x, y = r * mpmath.cos(al), r * mpmath.sin(al)
    q0 = (mu * mpmath.cos(t), mu * mpmath.sin(t))
    q1 = (-(1 - mu) * mpmath.cos(t), -(1 - mu) * mpmath.sin(t))
    v = (1 - mu) / mpmath.hypot(x - q0[0], y - q0[1]) + mu / mpmath.hypot(x - q1[0], y - q1[1])
    ref = float(i_m ** 3 * v - i_m / rh)
    got = pert.perturbative_potential(u, beta, t, i_m, 0.0, 0.3)
    assert abs(got - ref) < 1e-13 * abs(ref)


def test_decay_profile_scaling():
    u = np.linspace(-30, 30, 61)
    p4 = pert.potential_decay_profile(4.0, 0.3, 0.0, u)
    p8 = pert.potential_decay_profile(8.0, 0.3, 0.0, u)
    assert abs(np.max(p4[:, 1]) / np.max(p8[:, 1]) - 1) < 0.3
    assert np.all(pert.potential_decay_profile(4.0, 0.0, 0.1, u)[:, 1:] == 0)


def test_eccentric_part_is_linear_in_eps():
    u = np.linspace(-10, 10, 21)
    a = np.max(pert.potential_decay_profile(4.0, 0.3, 0.01, u)[:, 2])
    b = np.max(pert.potential_decay_profile(4.0, 0.3, 0.02, u)[:, 2])
    assert abs(b / a - 2) < 0.05


def test_potential_smooth_in_u():
    f = lambda u: pert.perturbative_potential(u, 0.3, 0.5, 3.0, 0.1, 0.3)
    errs = []
    for h in (1e-2, 5e-3):
        d = (f(0.7 + h) - f(0.7 - h)) / (2 * h)
        d2 = (f(0.7 + h / 2) - f(0.7 - h / 2)) / h
        errs.append(abs(d - d2))
    assert 3 < errs[0] / errs[1] < 5
