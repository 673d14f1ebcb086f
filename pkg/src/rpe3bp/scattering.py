"""Scattering maps of the parabolic cylinder.

A point of the cylinder is the asymptotic data (phi, I) of an orbit
arriving from infinity on a parabola: phi is the limiting direction of
approach and I the limiting angular momentum.  Each of the two homoclinic
channels (labelled + and -, according to whether the pericentre passage
happens near phase phi or phi + pi) sends incoming data to outgoing data.

Two realisations are provided:

* the Melnikov model, (phi, I) -> (phi - dI Lsign, I + dphi Lsign);
* shooting: a near-parabolic orbit is found numerically whose incoming and
  outgoing osculating energies both vanish, and its asymptotic elements
  are extracted from the two tails.
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import dynamics as dyn
from . import melnikov as mel
from . import two_body as tb
from .errors import ConvergenceError, DomainError, NoiseFloorError, StripExitError
from .perturbation import I_FLOOR, FrameCoords, eta_map
from .primaries import PrimaryEphemeris


class CylinderPoint(NamedTuple):
    phi: float
    i: float


def default_strip(eps):
    """Validity window in I: [I_FLOOR, eps^(-1/3)] (unbounded above at eps = 0)."""
    return (I_FLOOR, eps ** (-1.0 / 3.0) if eps > 0 else math.inf)


def _check_strip(p, strip):
    if not (strip[0] <= p.i <= strip[1]):
        raise StripExitError(f"I = {p.i} outside the strip [{strip[0]}, {strip[1]}]",
                             chain=None)


def _sign(sign):
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise DomainError(f"sign must be + or -, got {sign!r}")


# --------------------------------------------------------------------------
# Melnikov model

def scattering_melnikov(p, sign, mu, eps, table=None, strip=None, phase="fixed"):
    """Image of p under the Melnikov model of the given channel.

    With a ReducedMelnikov table the gradients come from its splines,
    otherwise from reduced_potentials (phase selects the line sigma = phi
    (+ pi) or the exact critical phase, see reduced_potentials).
    """
    s = _sign(sign)
    strip = strip or default_strip(eps)
    _check_strip(p, strip)
    if mu == 0:
        return CylinderPoint(p.phi, p.i)
    if table is not None:
        dphi, di = table.gradient(p.phi, p.i, s)
    else:
        g = mel.reduced_potentials(p.phi, p.i, mu, eps, phase=phase)[0 if s > 0 else 1]
        dphi, di = g.d_phi, g.d_i
    return CylinderPoint(p.phi - di, p.i + dphi)


# --------------------------------------------------------------------------
# critical phases

class CriticalPoint(NamedTuple):
    sigma: float
    second_derivative: float
    iterations: int


def critical_point(theta, i, mu, eps, sign, precision="double", l_max=None, dps=30):
    """Critical point of sigma -> L(sigma, theta) on the given branch.

    The + branch is the maximum near theta, the - branch the minimum near
    theta + pi; see melnikov.branch_critical_point.  precision='extended'
    evaluates the harmonics with mpmath, which is needed once L^[1] drops
    below double precision noise (I >~ 4); l_max then defaults to 1.
    """
    s = _sign(sign)
    if mu == 0:
        raise NoiseFloorError("no oscillating harmonic when mu = 0", signal=0.0, noise=0.0)
    if precision == "extended":
        l_max = l_max or 1
        h = {l: complex(mel.harmonic_extended(l, [theta], i, mu, eps, dps=dps)[0])
             for l in range(1, l_max + 1)}
        noise = 0.0
    else:
        hs = mel.compute_harmonics(i, mu, eps)
        l_top = hs.l_max if l_max is None else min(l_max, hs.l_max)
        h = {l: complex(hs.harmonic(l, theta)) for l in range(1, l_top + 1)}
        noise = float(hs.noise[1]) if hs.l_max >= 1 else 0.0
    if abs(h.get(1, 0.0)) < 10.0 * noise:
        raise NoiseFloorError("first harmonic below noise floor; use extended precision",
                              signal=abs(h.get(1, 0.0)), noise=noise)
    return CriticalPoint(*mel.branch_critical_point(h, theta, s))


def critical_phase(theta, i, mu, eps, sign, **kw):
    """sigma solving dL/dsigma(sigma, theta) = 0 on the branch of the given sign."""
    return critical_point(theta, i, mu, eps, sign, **kw).sigma


# --------------------------------------------------------------------------
# shooting

@dataclass
class AsymptoticElements:
    """Limits of the angular momentum and direction along one tail."""

    g_inf: float
    phi_inf: float
    quality: float
    energy: float = 0.0


@dataclass(frozen=True)
class ShootingConfig:
    """Settings of the shooting construction.

    u_seed -- position of the seed on the reference parabola (negative,
    inbound); r_newton -- radius at which osculating energies are matched
    during the Newton iterations; r_out -- radius of the final tails used
    for the extrapolation of G; tol -- target for the energy and matching
    residuals.
    """

    u_seed: float = -20.0
    r_newton: float = 1000.0
    r_out: float = 1e4
    tol: float = 1e-11
    max_iter: int = 30
    fd_step: float = 1e-7
    match_phi: bool = True
    match_i: bool = True
    integrator: dyn.IntegratorConfig = dyn.IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


def _asymptote(state, outgoing):
    """Osculating Kepler energy, angular momentum and asymptotic direction.

    The direction is that of the osculating parabola's asymptote, the apse
    line turned by pi.  It coincides with the true asymptote when the
    energy vanishes and, unlike the hyperbolic asymptote, depends smoothly
    on the energy, which the Newton iterations need.
    """
    r, alpha, _, y, G, _ = state
    k = 0.5 * y * y + 0.5 * G * G / (r * r) - 1.0 / r
    # eccentricity vector in the polar frame: radial and transverse parts
    er = G * G / r - 1.0
    et = -y * G
    omega = alpha + math.atan2(et, er)
    a = omega + math.pi if outgoing else omega - math.pi
    a = alpha + math.remainder(a - alpha, 2.0 * math.pi)
    return k, G, a


@dataclass
class _Shot:
    k_in: float
    k_out: float
    g_in: float
    g_out: float
    phi_in: float
    phi_out: float
    legs: tuple
    state: dyn.PolarState


def _seed_state(p_energy, sigma, beta, i_seed, i_ref, u0, ephem):
    """Inbound state at u0 on the reference parabola with physical energy p."""
    t0 = sigma + i_ref ** 3 * u0
    s = eta_map(FrameCoords(u0, beta, t0, 0.0, i_seed - i_ref, 0.0), i_ref)
    v = dyn.potential_polar(s.r, s.alpha, s.t, ephem)[0]
    y2 = 2.0 * (p_energy + v) - s.G * s.G / (s.r * s.r)
    if y2 <= 0:
        raise ConvergenceError("seed energy leaves no radial motion", estimate=p_energy)
    y = -math.sqrt(y2)
    return dyn.polar_state(s.r, s.alpha, s.t, y, s.G, ephem)


def _shoot(p_energy, sigma, beta, i_seed, i_ref, cfg, ephem, r_stop, keep=False):
    s0 = _seed_state(p_energy, sigma, beta, i_seed, i_ref, cfg.u_seed, ephem)
    icfg = dyn.IntegratorConfig(**{**cfg.integrator.__dict__, "r_stop": r_stop,
                                    "stop_at_apocentre": True})
    horizon = 50.0 * r_stop ** 1.5 + 1e4
    back = dyn.integrate(s0, (s0.t, s0.t - horizon), ephem, icfg, store_steps=keep)
    fwd = dyn.integrate(s0, (s0.t, s0.t + horizon), ephem, icfg, store_steps=keep)
    for leg in (back, fwd):
        if leg.status == "collision":
            raise ConvergenceError("close encounter with a primary during shooting", estimate=leg)
        if leg.status not in ("radius_reached", "apocentre"):
            raise ConvergenceError(f"tail did not reach r = {r_stop} ({leg.status})", estimate=leg)
    k_in, g_in, a_in = _asymptote(back.final, outgoing=False)
    k_out, g_out, a_out = _asymptote(fwd.final, outgoing=True)
    return _Shot(k_in, k_out, g_in, g_out, a_in, a_out, (back, fwd) if keep else (), s0)


def _tail_fit(leg, t_peri):
    """Fit G = g + c/|t - t_peri| over the last half (in time) of a tail."""
    t = np.abs(leg.times - t_peri)
    G = leg.column("G")
    T = t[-1]
    sel = t >= 0.5 * T
    if np.count_nonzero(sel) < 4:
        return float(G[-1]), math.inf
    A = np.c_[np.ones(np.count_nonzero(sel)), 1.0 / t[sel]]
    coef, *_ = np.linalg.lstsq(A, G[sel], rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - G[sel]) ** 2)))
    if resid > 1e-8:
        # Richardson on the endpoints of the window
        t1 = t[sel][0]
        g1 = G[sel][0]
        return float((T * G[-1] - t1 * g1) / (T - t1)), resid
    return float(coef[0]), resid


@dataclass
class ShootingResult:
    point: CylinderPoint
    incoming: AsymptoticElements
    outgoing: AsymptoticElements
    diagnostics: dict = field(default_factory=dict)


def scattering_shoot(p, sign, mu, eps, cfg=None, sigma0=None):
    """Image of p under the scattering map of the given channel, by shooting.

    Unknowns are the seed energy, the pericentre phase sigma and (when
    matching is on) the seed angle and angular momentum; conditions are
    vanishing incoming and outgoing osculating energies and incoming
    asymptotic data equal to p.  sigma is seeded at the critical phase of
    the channel.

    Returns ShootingResult with the outgoing CylinderPoint (phi measured
    on the same branch as the incoming one), the asymptotic elements of
    both tails and diagnostics (energy drift, residuals, iteration counts).
    """
    s = _sign(sign)
    cfg = cfg or ShootingConfig()
    ephem = PrimaryEphemeris(mu, eps)
    i_ref = p.i
    if sigma0 is None:
        try:
            sigma0 = critical_phase(p.phi, p.i, mu, eps, s)
        except (NoiseFloorError, ConvergenceError):
            sigma0 = p.phi + (0.0 if s > 0 else math.pi)
    x = np.array([0.0, sigma0, p.phi, p.i])
    refine_sigma = mu > 0
    n_shots = 0

    def residual(x):
        nonlocal n_shots
        n_shots += 1
        sh = _shoot(x[0], x[1], x[2], x[3], i_ref, cfg, ephem, cfg.r_newton)
        res = [sh.k_in, sh.k_out, sh.phi_in - p.phi, sh.g_in - p.i]
        return np.array(res), sh

    active = [0] + ([1] if refine_sigma else []) + ([2] if cfg.match_phi else []) \
        + ([3] if cfg.match_i else [])
    rows = [0] + ([1] if refine_sigma else []) + ([2] if cfg.match_phi else []) \
        + ([3] if cfg.match_i else [])
    res, sh = residual(x)
    it = 0
    while np.max(np.abs(res[rows])) > cfg.tol:
        it += 1
        if it > cfg.max_iter:
            raise ConvergenceError("shooting Newton did not converge", estimate=(x, res))
        J = np.zeros((len(rows), len(active)))
        for c, k in enumerate(active):
            dx = np.zeros(4)
            h = cfg.fd_step * (1.0 if k != 3 else max(1.0, abs(x[3])))
            dx[k] = h
            rp, _ = residual(x + dx)
            J[:, c] = (rp[rows] - res[rows]) / h
        step = np.linalg.solve(J, -res[rows])
        x[active] += step
        res, sh = residual(x)

    # final tails out to r_out for the extrapolation of G
    final = _shoot(x[0], x[1], x[2], x[3], i_ref, cfg, ephem, cfg.r_out, keep=True)
    back, fwd = final.legs
    g_in, q_in = _tail_fit(back, x[1])
    g_out, q_out = _tail_fit(fwd, x[1])
    inc = AsymptoticElements(g_in, final.phi_in, q_in, final.k_in)
    out = AsymptoticElements(g_out, final.phi_out, q_out, final.k_out)
    # outgoing direction on the branch of the incoming one (alpha_h gains 2 pi)
    phi_out = final.phi_out - 2.0 * math.pi
    diag = dict(
        sigma=float(x[1]), sigma_seed=float(sigma0), seed_energy=float(x[0]),
        seed_angle=float(x[2]), seed_momentum=float(x[3]), newton_iterations=it,
        shots=n_shots, residual=float(np.max(np.abs(res[rows]))),
        max_dH=max(back.diagnostics["max_dH"], fwd.diagnostics["max_dH"]),
        steps=int(back.n_steps + fwd.n_steps),
        tails=(back.status, fwd.status),
        delta_g=g_out - g_in, delta_phi=phi_out - final.phi_in,
    )
    return ShootingResult(CylinderPoint(phi_out - final.phi_in + p.phi, g_out), inc, out, diag)


def splitting_amplitude(i, mu, eps, theta=0.0, n_sigma=16, cfg=None):
    """Size of the first sigma-harmonic of G_out - G_in over a full sweep.

    For each pericentre phase sigma on a uniform grid the seed energy is
    adjusted so that the incoming tail is parabolic; the outgoing G is
    recorded without further matching.  Returns (amplitude, samples) with
    amplitude = 2 |first DFT coefficient| and samples the array of
    (sigma, delta G) pairs.
    """
    cfg = cfg or ShootingConfig()
    if mu == 0:
        return 0.0, np.zeros((0, 2))
    ephem = PrimaryEphemeris(mu, eps)
    sig = 2.0 * np.pi * np.arange(n_sigma) / n_sigma
    dg = np.empty(n_sigma)
    for n, sg in enumerate(sig):
        pe = 0.0
        for _ in range(cfg.max_iter):
            s0 = _seed_state(pe, sg, theta, i, i, cfg.u_seed, ephem)
            icfg = dyn.IntegratorConfig(**{**cfg.integrator.__dict__, "r_stop": cfg.r_newton,
                                            "stop_at_apocentre": True})
            back = dyn.integrate(s0, (s0.t, s0.t - 50 * cfg.r_newton ** 1.5 - 1e4), ephem, icfg,
                                 store_steps=False)
            k_in, g_in, _ = _asymptote(back.final, outgoing=False)
            if abs(k_in) < cfg.tol:
                break
            # dk_in/dp is one to leading order
            pe -= k_in
        else:
            raise ConvergenceError("could not make the incoming tail parabolic", estimate=k_in)
        fwd = dyn.integrate(s0, (s0.t, s0.t + 50 * cfg.r_newton ** 1.5 + 1e4), ephem, icfg,
                            store_steps=False)
        if fwd.status != "radius_reached" and fwd.status != "apocentre":
            raise ConvergenceError(f"outgoing tail ended with {fwd.status}", estimate=fwd)
        dg[n] = fwd.final.G - g_in
    c = np.fft.rfft(dg) / n_sigma
    amp = 2.0 * abs(c[1])
    return float(amp), np.c_[sig, dg]


# --------------------------------------------------------------------------
# model object

@dataclass
class ScatteringModel:
    """Pair of scattering maps in one of two modes.

    mode 'melnikov' uses a ReducedMelnikov table (built on demand over
    the strip window); mode 'shooting' runs scattering_shoot.
    """

    mu: float
    eps: float
    mode: str = "melnikov"
    table: object = None
    strip: tuple = None
    shooting: ShootingConfig = None
    evaluations: int = 0

    def __post_init__(self):
        if self.mode not in ("melnikov", "shooting"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.strip is None:
            self.strip = default_strip(self.eps)

    @classmethod
    def from_window(cls, mu, eps, i_lo, i_hi, n_i=64, **kw):
        tab = mel.reduced_table(mu, eps, i_lo, i_hi, n_i) if mu > 0 else None
        return cls(mu, eps, "melnikov", tab, (i_lo, i_hi), **kw)

    def apply(self, p, sign):
        self.evaluations += 1
        if self.mode == "melnikov":
            return scattering_melnikov(p, sign, self.mu, self.eps, self.table, self.strip)
        _check_strip(p, self.strip)
        return scattering_shoot(p, sign, self.mu, self.eps, self.shooting).point
