"""Acceptance battery with a machine-readable report.

Each check returns a dict with keys

    id, name, passed, measured, threshold, seconds, detail

and run_suite collects them into

    {"schema": "rpe3bp.verify", "version": 1, "level": ...,
     "passed": bool, "checks": [...]}.

Level 'quick' runs the conservation, closed-form and cheap quadrature
checks; 'full' runs everything.
"""
import math
import time

import numpy as np

from . import diffusion as dif
from . import dynamics as dyn
from . import melnikov as mel
from . import scattering as sc
from . import two_body as tb
from .primaries import PrimaryEphemeris

REPORT_SCHEMA = "rpe3bp.verify"
REPORT_VERSION = 1


def _result(cid, name, passed, measured, threshold, t0, detail=None, budget=None):
    sec = time.perf_counter() - t0
    ok = bool(passed) and (budget is None or sec <= budget)
    return dict(id=cid, name=name, passed=ok, measured=measured, threshold=threshold,
                seconds=round(sec, 3), time_budget=budget, detail=detail or {})


def check_closed_form(u_max=5.0, momenta=(1.0, 2.0, 5.0)):
    """Integrated Kepler parabola against its closed form on [-u_max, u_max]."""
    t0 = time.perf_counter()
    eph = PrimaryEphemeris(0.0, 0.0)
    worst = 0.0
    u = np.linspace(-u_max, u_max, 41)
    for G in momenta:
        tau = tb.tau_from_u(u)
        s0 = dyn.PolarState(G * G * float(tb.r_h(tau[0])), float(tb.alpha_h_continuous(tau[0])),
                            G ** 3 * u[0], float(tb.y_h(tau[0])) / G, G, 0.0)
        tr = dyn.integrate(s0, (G ** 3 * u[0], G ** 3 * u[-1]), eph, t_eval=G ** 3 * u,
                           cfg=dyn.IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15))
        ref = np.c_[G * G * tb.r_h(tau), tb.alpha_h_continuous(tau), tb.y_h(tau) / G]
        got = tr.states[:, [0, 1, 3]]
        worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref)))))
    return _result(1, "two-body closed form", worst < 1e-9, worst, 1e-9, t0, budget=5.0)


def check_conservation():
    """H_pol drift per 10^3 time units (eps = 0.05) and Jacobi drift over a passage (eps = 0)."""
    t0 = time.perf_counter()
    eph = PrimaryEphemeris(0.3, 0.05)
    s = dyn.polar_state(6.0, 0.4, 0.0, 0.05, 1.8, eph)
    tr = dyn.integrate(s, (0.0, 1000.0), eph)
    dh = tr.diagnostics["max_dH"]
    eph0 = PrimaryEphemeris(0.3, 0.0)
    G = 2.0
    tau = -math.sqrt(2.0 * 500.0 / G ** 2 - 1.0)
    s = dyn.polar_state(G * G * float(tb.r_h(tau)), float(tb.alpha_h_continuous(tau)), 0.0,
                        float(tb.y_h(tau)) / G, G, eph0)
    cfg = dyn.IntegratorConfig(r_stop=500.0 * 1.0001)
    tr0 = dyn.integrate(s, (0.0, 1e6), eph0, cfg)
    dj = tr0.diagnostics["max_dJ"]
    ok = dh < 1e-9 and dj < 1e-8
    return _result(2, "energy and Jacobi conservation", ok, dict(dH=dh, dJ=dj),
                   dict(dH=1e-9, dJ=1e-8), t0,
                   detail=dict(passage_status=tr0.status, steps=tr0.n_steps), budget=30.0)


def check_mean_harmonic():
    """Mean of L over (sigma, theta) against mu(1-mu) pi / (2 I^3) at I = 5 and 8."""
    t0 = time.perf_counter()
    mu = 0.3
    out = {}
    ok = True
    for i, tol in ((5.0, 0.01), (8.0, 0.002)):
        tab = mel.melnikov_table(i, mu, 0.0, n_sigma=16, n_theta=16)
        mean = float(np.mean(tab.values))
        ref = mel.mean_leading(i, mu)
        rel = abs(mean - ref) / ref
        out[f"I={i:g}"] = dict(mean=mean, leading=ref, rel_dev=rel, tol=tol,
                               multipole=mel.mean_multipole_series(i, mu))
        ok &= rel < tol
    return _result(3, "zeroth harmonic mean", ok, out, "1% (I=5), 0.2% (I=8)", t0, budget=60.0)


def first_harmonic_modulus(i, mu, eps=0.0, precision="double"):
    if precision == "extended":
        return abs(complex(mel.harmonic_extended(1, [0.0], i, mu, eps, dps=20)[0]))
    return abs(complex(mel.compute_harmonics(i, mu, eps, l_max=2).harmonic(1, 0.0)))


def check_exponential_law(mu=0.3, eps=0.0):
    """Slope of ln|L^[1]| against I^3 over I = 2.0, 2.2, ..., 3.0."""
    t0 = time.perf_counter()
    grid = np.round(np.arange(2.0, 3.0001, 0.2), 10)
    mods = np.array([first_harmonic_modulus(i, mu, eps, "extended") for i in grid])
    dbl = np.array([first_harmonic_modulus(i, mu, eps) for i in grid])
    slope = float(np.polyfit(grid ** 3, np.log(mods), 1)[0])
    rel = abs(slope + 1.0 / 3.0) / (1.0 / 3.0)
    # the same fit with the algebraic prefactor I^(-1/2) removed
    slope_pref = float(np.polyfit(grid ** 3, np.log(mods * np.sqrt(grid)), 1)[0])
    detail = dict(I=grid.tolist(), modulus=mods.tolist(),
                  extended_vs_double=float(np.max(np.abs(mods - dbl) / mods)),
                  slope_without_prefactor=slope_pref, mu=mu, eps=eps)
    return _result(4, "exponential splitting law", rel < 0.02, slope, "-1/3 within 2%", t0,
                   detail=detail, budget=300.0)


def check_mass_ratio(i=3.0):
    """|L^[1]| ratio between mu = 0.25 and 0.40 at eps = 0 against 1.953."""
    t0 = time.perf_counter()
    a = first_harmonic_modulus(i, 0.25)
    b = first_harmonic_modulus(i, 0.40)
    pred = (0.25 * 0.75 * 0.5) / (0.4 * 0.6 * 0.2)
    ratio = a / b
    rel = abs(ratio - pred) / pred
    return _result(5, "mass-ratio law", rel < 0.05, ratio, f"{pred:.4f} within 5%", t0,
                   detail=dict(I=i, prediction=pred, rel_dev=rel), budget=120.0)


def check_circular_shooting(n=10, seed=12345, mu=0.3):
    """|G_out - G_in| for shooting at eps = 0 at random (phi, I), I in [2, 3]."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    pts = np.c_[rng.uniform(0.0, 2.0 * np.pi, n), rng.uniform(2.0, 3.0, n)]
    worst = 0.0
    rows = []
    for k, (phi, i) in enumerate(pts):
        sign = 1 if k % 2 == 0 else -1
        r = sc.scattering_shoot(sc.CylinderPoint(phi, i), sign, mu, 0.0)
        dg = abs(r.diagnostics["delta_g"])
        worst = max(worst, dg)
        rows.append(dict(phi=float(phi), I=float(i), sign=sign, delta_g=r.diagnostics["delta_g"]))
    return _result(6, "circular scattering conserves G", worst < 5e-7, worst, 5e-7, t0,
                   detail=dict(points=rows, seed=seed), budget=120.0)


def check_cross_method(mu=0.3, i=2.5, eps=0.05, phis=(math.pi / 8, math.pi / 4, math.pi / 2)):
    """Shooting Delta G against the Melnikov model Delta I, both channels."""
    t0 = time.perf_counter()
    rows = []
    ok = True
    for phi in phis:
        for sign in (1, -1):
            p = sc.CylinderPoint(phi, i)
            shot = sc.scattering_shoot(p, sign, mu, eps).diagnostics["delta_g"]
            model = sc.scattering_melnikov(p, sign, mu, eps).i - i
            crit = sc.scattering_melnikov(p, sign, mu, eps, phase="critical").i - i
            agree = (np.sign(shot) == np.sign(model)) and abs(shot - model) <= 0.2 * abs(model)
            ok &= bool(agree)
            rows.append(dict(phi=phi, sign=sign, shooting=shot, model=model,
                             model_at_critical_phase=crit, agree=bool(agree)))
    worst = max(abs(r["shooting"] - r["model"]) / abs(r["model"]) for r in rows)
    return _result(7, "shooting vs Melnikov model", ok, worst, "same sign, 20%", t0,
                   detail=dict(rows=rows), budget=600.0)


def check_critical_phases(mu=0.3, i=5.0, eps=1e-4, n_theta=16):
    """Critical phases at I = 5 lie within 0.2 of theta and theta + pi."""
    t0 = time.perf_counter()
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    h1 = mel.harmonic_extended(1, thetas, i, mu, eps, dps=12)
    worst = 0.0
    opposite = True
    rows = []
    for th, c in zip(thetas, h1):
        h = {1: complex(c)}
        sp, gp, _ = mel.branch_critical_point(h, th, 1)
        sm, gm, _ = mel.branch_critical_point(h, th, -1)
        dp = abs(math.remainder(sp - th, 2 * math.pi))
        dm = abs(math.remainder(sm - th - math.pi, 2 * math.pi))
        worst = max(worst, dp, dm)
        opposite &= gp * gm < 0
        rows.append(dict(theta=float(th), sigma_plus=sp, sigma_minus=sm, d2_plus=gp, d2_minus=gm))
    return _result(8, "critical phases", worst < 0.2 and opposite, worst, 0.2, t0,
                   detail=dict(rows=rows, eps=eps, opposite_hessians=bool(opposite)), budget=60.0)


def check_transversality(mu=0.3, i=3.0, eps=0.03, phi=math.pi / 4):
    """Bracket {L+, L-} above noise and against 2 dphi(L+ - L-) dI L+."""
    t0 = time.perf_counter()
    b = mel.transversality_bracket(phi, i, mu, eps)
    lead = 2.0 * (b.plus.d_phi - b.minus.d_phi) * b.plus.d_i
    rel = abs(b.value - lead) / abs(lead)
    ok = (not b.below_noise) and rel < 0.3
    g = mel.gradient_leading(phi, i, mu, eps)
    detail = dict(bracket=b.value, noise=b.noise, leading_form=lead, ratio=b.value / lead,
                  closed_form_leading=2.0 * g["dphi_diff"] * g["dI"])
    return _result(9, "transversality bracket", ok, rel, "above 10x noise, within 30%", t0,
                   detail=detail, budget=300.0)


def check_drift(mu=0.3, eps=0.05, i0=3.0, target=3.05, window=(2.5, 4.0)):
    """Alternating chain reaches target; single-map controls return near I0."""
    t0 = time.perf_counter()
    model = dif.model_for_window(mu, eps, *window)
    start = sc.CylinderPoint(0.0, i0)
    chain = dif.plan_drift(start, target, model, 10 ** 7)
    gained = chain.end.i - i0
    ctrl = {}
    ok = chain.succeeded and gained >= target - i0 - 1e-12
    for sign in (1, -1):
        res = dif.single_map_control(start, sign, 10 ** 5, model)
        ctrl["+" if sign > 0 else "-"] = dict(max_excursion=res.max_excursion, returns=res.returns)
        ok &= res.returns >= 10
    detail = dict(evaluations=chain.meta["evaluations"], steps=len(chain), controls=ctrl,
                  window=list(window))
    return _result(10, "drift versus single-map controls", ok, gained, "dI >= 0.05", t0,
                   detail=detail, budget=600.0)


def check_circular_no_drift(mu=0.3, i0=3.0, window=(2.5, 4.0)):
    """At eps = 0 the planner fails and I stays put over 10^4 steps."""
    t0 = time.perf_counter()
    model = dif.model_for_window(mu, 0.0, *window)
    chain = dif.plan_drift(sc.CylinderPoint(0.0, i0), i0 + 0.05, model, 2 * 10 ** 4)
    dev = abs(chain.end.i - i0)
    ok = (not chain.succeeded) and len(chain) == 10 ** 4 and dev < 1e-9
    return _result(11, "no drift at eps = 0", ok, dev, 1e-9, t0,
                   detail=dict(status=chain.status, steps=len(chain)), budget=10.0)


QUICK = (check_closed_form, check_conservation, check_mean_harmonic, check_mass_ratio,
         check_circular_no_drift)
FULL = (check_closed_form, check_conservation, check_mean_harmonic, check_exponential_law,
        check_mass_ratio, check_circular_shooting, check_cross_method, check_critical_phases,
        check_transversality, check_drift, check_circular_no_drift)


def run_suite(level="quick", progress=None):
    """Run the battery; progress, if given, is called with each result."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    checks = []
    for fn in (QUICK if level == "quick" else FULL):
        try:
            res = fn()
        except Exception as exc:  # a crash is a failed check, reported as such
            res = dict(id=None, name=fn.__name__, passed=False, measured=None, threshold=None,
                       seconds=None, time_budget=None, detail=dict(error=repr(exc)))
        checks.append(res)
        if progress:
            progress(res)
    return dict(schema=REPORT_SCHEMA, version=REPORT_VERSION, level=level,
                passed=all(c["passed"] for c in checks), checks=checks)


def validate_report(report):
    """Raise ValueError unless report follows the documented schema."""
    if report.get("schema") != REPORT_SCHEMA or report.get("version") != REPORT_VERSION:
        raise ValueError("wrong schema or version")
    if report.get("level") not in ("quick", "full") or not isinstance(report.get("passed"), bool):
        raise ValueError("bad level or passed flag")
    for c in report.get("checks", []):
        for key in ("id", "name", "passed", "measured", "threshold", "seconds", "detail"):
            if key not in c:
                raise ValueError(f"check missing {key!r}")
    return True
