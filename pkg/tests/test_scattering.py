import math

import numpy as np
import pytest

from rpe3bp import melnikov as mel
from rpe3bp import scattering as sc
from rpe3bp.errors import DomainError, NoiseFloorError, StripExitError

MU = 0.3
P = sc.CylinderPoint


def test_massless_identity():
    assert sc.scattering_melnikov(P(1.0, 2.5), 1, 0.0, 0.05) == P(1.0, 2.5)


def test_circular_model_rotates_only():
    shifts = []
    for phi in (0.0, 1.3, 4.0):
        for s in (1, -1):
            q = sc.scattering_melnikov(P(phi, 5.0), s, MU, 0.0)
            assert q.i == 5.0 or abs(q.i - 5.0) < 1e-14
            shifts.append(q.phi - phi)
    assert np.ptp(shifts) < 1e-12
    omega = -(mel.circular_reduced(5.0 * 1.001, MU) - mel.circular_reduced(5.0 * 0.999, MU)) / 0.01
    assert abs(shifts[0] - omega) < 1e-9


def test_model_leading_gain():
    q = sc.scattering_melnikov(P(math.pi / 2, 5.0), 1, MU, 0.005)
    lead = MU * (1 - MU) * (1 - 2 * MU) * 15 * math.pi * 0.005 / (8 * 5.0 ** 5)
    assert abs((q.i - 5.0) / lead - 1) < 0.25


def test_strip():
    with pytest.raises(StripExitError):
        sc.scattering_melnikov(P(0.0, 3.0), 1, MU, 0.05)
    lo, hi = sc.default_strip(0.05)
    assert lo == 1.5 and abs(hi - 0.05 ** (-1 / 3)) < 1e-12
    assert sc.default_strip(0.0)[1] == math.inf


def test_model_inverse_step():
    tab = mel.reduced_table(MU, 0.05, 2.2, 2.8, n_i=16)
    p = P(0.9, 2.5)
    q = sc.scattering_melnikov(p, 1, MU, 0.05, table=tab)
    dphi, di = tab.gradient(q.phi, q.i, 1)
    back = P(q.phi + di, q.i - dphi)
    g = math.hypot(*tab.gradient(p.phi, p.i, 1))
    assert math.hypot(back.phi - p.phi, back.i - p.i) < 10 * g * g


def test_area_preservation():
    tab = mel.reduced_table(MU, 0.005, 4.8, 5.2, n_i=16)
    h = 1e-3
    corners = [P(1.0, 5.0), P(1.0 + h, 5.0), P(1.0 + h, 5.0 + h), P(1.0, 5.0 + h)]
    img = [sc.scattering_melnikov(c, 1, MU, 0.005, table=tab) for c in corners]
    x = np.array([c.phi for c in img])
    y = np.array([c.i for c in img])
    area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert abs(area / h ** 2 - 1) < 1e-6


def test_critical_phases_at_large_momentum():
    cp = sc.critical_point(1.0, 5.0, MU, 1e-4, 1, precision="extended", dps=12)
    cm = sc.critical_point(1.0, 5.0, MU, 1e-4, -1, precision="extended", dps=12)
    assert abs(cp.sigma - 1.0) < 0.2
    assert abs(math.remainder(cm.sigma - 1.0 - math.pi, 2 * math.pi)) < 0.2
    assert cp.second_derivative * cm.second_derivative < 0


def test_critical_phase_needs_a_harmonic():
    with pytest.raises(NoiseFloorError):
        sc.critical_phase(1.0, 3.0, 0.0, 0.0, 1)
    with pytest.raises(NoiseFloorError):
        sc.critical_phase(1.0, 6.0, MU, 0.0, 1)


def test_critical_phase_solves_stationarity():
    hs = mel.compute_harmonics(2.5, MU, 0.02)
    for s in (1, -1):
        sg = sc.critical_phase(0.7, 2.5, MU, 0.02, s)
        assert abs(hs.L(sg, 0.7, d_sigma=1)) < 1e-14


def test_shooting_circular_conserves_momentum():
    r = sc.scattering_shoot(P(0.8, 2.6), 1, MU, 0.0)
    assert abs(r.diagnostics["delta_g"]) < 5e-7
    assert r.diagnostics["max_dH"] < 1e-8
    # the phi shift agrees with the model rotation
    q = sc.scattering_melnikov(P(0.8, 2.6), 1, MU, 0.0)
    assert abs((r.point.phi - 0.8) / (q.phi - 0.8) - 1) < 0.05


def test_shooting_kepler_limit():
    r = sc.scattering_shoot(P(0.4, 2.5), 1, 0.0, 0.0)
    assert abs(r.point.phi - 0.4) < 1e-8
    assert abs(r.point.i - 2.5) < 1e-8


def test_shooting_matches_model_at_critical_phase():
    p = P(math.pi / 2, 2.5)
    shot = sc.scattering_shoot(p, 1, MU, 0.05).diagnostics["delta_g"]
    model = sc.scattering_melnikov(p, 1, MU, 0.05, phase="critical").i - 2.5
    assert np.sign(shot) == np.sign(model) and abs(shot / model - 1) < 0.2


def test_splitting_amplitude_exponential_law():
    a, _ = sc.splitting_amplitude(2.0, MU, 0.0, n_sigma=8)
    b, _ = sc.splitting_amplitude(2.4, MU, 0.0, n_sigma=8)
    pred = math.exp(-(2.4 ** 3 - 2.0 ** 3) / 3)
    assert abs(b / a / pred - 1) < 0.4


def test_splitting_amplitude_is_first_harmonic():
    a, _ = sc.splitting_amplitude(2.5, MU, 0.0, n_sigma=8)
    ref = 2 * abs(mel.compute_harmonics(2.5, MU, 0.0).harmonic(1, 0.0))
    assert a > 0 and abs(a / ref - 1) < 0.1
    assert sc.splitting_amplitude(2.5, 0.0, 0.0)[0] == 0.0


def test_model_object():
    m = sc.ScatteringModel.from_window(MU, 0.05, 2.5, 3.5, n_i=16)
    q = m.apply(P(0.3, 3.0), "+")
    assert m.evaluations == 1 and q != P(0.3, 3.0)
    with pytest.raises(DomainError):
        sc.ScatteringModel(MU, 0.05, mode="other")
