"""Coordinates adapted to the parabolic homoclinic orbit and the potential
felt along it.

With reference angular momentum I the frame map sends (u, beta, t, Y, J, E)
to the polar state

    r = I^2 r_h(u),  alpha = beta + alpha_h(u),
    y = y_h(u)/I + (Y - J/r_h(u)^2) / (I^2 y_h(u)),  G = I + J,

so that the zero section Y = J = 0 is the Kepler parabola.  The potential
left over after removing the Kepler term, rescaled to the u clock, is

    V(u, beta, t) = I^3 V_pol(I^2 r_h, beta + alpha_h, t) - I/r_h.

It is evaluated through the relative offset x = rho/(I^2 r_h) of the
primaries, with the dipole part cancelled algebraically so that no digits
are lost when x is small.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import two_body as tb
from .dynamics import PolarState
from .errors import DomainError
from .primaries import PrimaryEphemeris, solve_kepler, true_anomaly_and_rho

I_FLOOR = 1.5
U_FLOOR = 1e-6


class FrameCoords(NamedTuple):
    u: float
    beta: float
    t: float
    Y: float
    J: float
    E: float


@dataclass(frozen=True)
class PerturbedFrame:
    i_m: float
    ephemeris: PrimaryEphemeris

    def __post_init__(self):
        if self.i_m < I_FLOOR:
            raise DomainError(f"reference angular momentum must be >= {I_FLOOR}, got {self.i_m}")

    def to_polar(self, c):
        return eta_map(c, self.i_m)

    def from_polar(self, s, u_sign=None):
        return eta_inverse(s, self.i_m, u_sign)

    def potential(self, u, beta, t):
        e = self.ephemeris
        return perturbative_potential(u, beta, t, self.i_m, e.eps, e.mu)


def eta_map(c, i_m):
    """Frame coordinates -> PolarState.  Requires |u| >= U_FLOOR."""
    if abs(c.u) < U_FLOOR:
        raise DomainError("frame chart is singular at the pericentre (|u| < u_floor)")
    tau = tb.tau_from_u(c.u)
    rh = float(tb.r_h(tau))
    yh = float(tb.y_h(tau))
    y = yh / i_m + (c.Y - c.J / rh ** 2) / (i_m * i_m * yh)
    return PolarState(i_m * i_m * rh, c.beta + float(tb.alpha_h_continuous(tau)), c.t, y,
                      i_m + c.J, c.E)


def eta_inverse(s, i_m, u_sign=None):
    """PolarState -> frame coordinates.

    The radius fixes |tau|; its sign is taken from u_sign when given and
    from the sign of y otherwise (which is right near the zero section).
    """
    rh = s.r / (i_m * i_m)
    if rh < 0.5:
        raise DomainError("radius below the pericentre of the reference parabola")
    tau = math.sqrt(max(2.0 * rh - 1.0, 0.0))
    sign = u_sign if u_sign is not None else (1.0 if s.y >= 0 else -1.0)
    tau = math.copysign(tau, sign)
    u = float(tb.u_of_tau(tau))
    if abs(u) < U_FLOOR:
        raise DomainError("frame chart is singular at the pericentre (|u| < u_floor)")
    yh = float(tb.y_h(tau))
    J = s.G - i_m
    Y = (s.y - yh / i_m) * i_m * i_m * yh + J / rh ** 2
    beta = s.alpha - float(tb.alpha_h_continuous(tau))
    return FrameCoords(u, beta, s.t, Y, J, s.E)


def pullback_difference(c, dc, i_m):
    """Contraction of (eta^* lambda_pol - lambda) with a tangent vector dc.

    lambda_pol = y dr + G dalpha + E dt and lambda = Y du + J dbeta + E dt.
    Uses the chain rule through the closed forms; the result equals
    (2 I/r_h) du + I dbeta.
    """
    s = eta_map(c, i_m)
    tau = tb.tau_from_u(c.u)
    rh = float(tb.r_h(tau))
    yh = float(tb.y_h(tau))
    dr = i_m * i_m * yh * dc.u          # d r_h/du = y_h
    dalpha = dc.beta + dc.u / rh ** 2   # d alpha_h/du = 1/r_h^2
    lam_pol = s.y * dr + s.G * dalpha + s.E * dc.t
    lam = c.Y * dc.u + c.J * dc.beta + c.E * dc.t
    return lam_pol - lam


# --------------------------------------------------------------------------
# the potential

def _h2(z):
    """(1+z)^(-1/2) - 1 + z/2, free of cancellation."""
    s = np.sqrt(1.0 + z)
    return z * z * (s + 2.0) / (2.0 * s * (s + 1.0) ** 2)


def potential_bracket(x, c, mu):
    """Dimensionless bracket B with V = (I/r_h) B.

    x is the offset rho/(I^2 r_h) and c the cosine of the angle between the
    body and the primaries' axis.
    """
    nu = 1.0 - mu
    z0 = mu * x * (mu * x - 2.0 * c)
    z1 = nu * x * (nu * x + 2.0 * c)
    return -0.5 * mu * nu * x * x + nu * _h2(z0) + mu * _h2(z1)


def potential_from_geometry(rh, cos_ah, sin_ah, beta, f, rho, i_m, mu):
    """V from r_h, the direction of the parabola point and the primaries.

    All arguments broadcast.  cos_ah, sin_ah give alpha_h; f and rho are
    the true anomaly and separation of the primaries.
    """
    cb = np.cos(beta - f)
    sb = np.sin(beta - f)
    c = cb * cos_ah - sb * sin_ah
    x = rho / (i_m * i_m * rh)
    return (i_m / rh) * potential_bracket(x, c, mu)


def perturbative_potential(u, beta, t, i_m, eps, mu):
    """V(u, beta, t; I, eps) for scalar or broadcastable array arguments."""
    if mu == 0:
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(beta), np.asarray(t)).shape) \
            if np.ndim(u) or np.ndim(beta) or np.ndim(t) else 0.0
    tau = np.asarray(tb.tau_from_u(u), dtype=float)
    t = np.asarray(t, dtype=float)
    if eps == 0.0:
        f, rho = t, 1.0
    else:
        f, rho = true_anomaly_and_rho(solve_kepler(t, eps), eps)
    den = tau * tau + 1.0
    v = potential_from_geometry(0.5 * den, (tau * tau - 1.0) / den, -2.0 * tau / den,
                                np.asarray(beta, dtype=float), f, rho, i_m, mu)
    return float(v) if np.ndim(v) == 0 else v


def potential_direct(u, beta, t, i_m, eps, mu):
    """Same quantity by plain subtraction I^3 V_pol - I/r_h (reference path)."""
    from .dynamics import potential_polar
    tau = tb.tau_from_u(u)
    rh = float(tb.r_h(tau))
    alpha = beta + float(tb.alpha_h(tau))
    vpol = potential_polar(i_m * i_m * rh, alpha, t, PrimaryEphemeris(mu, eps))[0]
    return i_m ** 3 * vpol - i_m / rh


def circular_potential(u, phase, i_m, mu):
    """V at eps = 0 as a function of u and t - beta."""
    return perturbative_potential(u, 0.0, phase, i_m, 0.0, mu)


def potential_decay_profile(i_m, mu, eps, u_grid, n_angles=32):
    """Normalised size of V along the homoclinic orbit.

    For each u returns the maxima over a (beta, t) grid of
    |V| r_h^3 I^3 and |V - V_circ| r_h^3 I^3.

    Returns
    -------
    ndarray of shape (len(u_grid), 3): columns u, |V|, |V - V_circ|.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    ang = 2.0 * np.pi * np.arange(n_angles) / n_angles
    B, T = np.meshgrid(ang, ang, indexing="ij")
    out = np.empty((len(u_grid), 3))
    for k, u in enumerate(u_grid):
        rh = float(tb.r_h(tb.tau_from_u(u)))
        v = perturbative_potential(u, B, T, i_m, eps, mu)
        vc = perturbative_potential(u, B, T, i_m, 0.0, mu)
        w = rh ** 3 * i_m ** 3
        out[k] = (u, np.max(np.abs(v)) * w, np.max(np.abs(v - vc)) * w)
    return out
