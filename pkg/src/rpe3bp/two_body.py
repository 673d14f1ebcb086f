"""Closed-form parabolic homoclinic orbit of the Kepler problem.

The zero-energy orbit with angular momentum G is written in a regular
parameter tau, with r = G^2 (tau^2 + 1)/2.  The time-like parameter
u = (tau + tau^3/3)/2 advances at rate G^-3 along the flow, so physical
time equals G^3 u measured from pericentre.
"""
import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


class TwoBodyState(NamedTuple):
    r: float
    alpha: float
    y: float
    G: float


def r_h(tau):
    """Normalised radius (tau^2 + 1)/2 of the unit-G parabola."""
    tau = np.asarray(tau, dtype=float)
    return 0.5 * (tau * tau + 1.0)


def y_h(tau):
    """Normalised radial momentum 2 tau / (1 + tau^2)."""
    tau = np.asarray(tau, dtype=float)
    return 2.0 * tau / (1.0 + tau * tau)


def alpha_h(tau):
    """Polar angle of the unit-G parabola, in [0, 2 pi).

    Uses exp(i alpha) = (tau - i)/(tau + i) = ((tau^2 - 1) - 2 i tau)/(tau^2 + 1).
    """
    tau = np.asarray(tau, dtype=float)
    a = np.arctan2(-2.0 * tau, tau * tau - 1.0)
    return np.mod(a, TWO_PI)


def alpha_h_continuous(tau):
    """Angle along the parabola as a continuous function of tau.

    Runs from 0 (tau -> -inf) through pi (pericentre) to 2 pi (tau -> +inf).
    Equal to pi + 2 arctan(tau).
    """
    tau = np.asarray(tau, dtype=float)
    return math.pi + 2.0 * np.arctan(tau)


def u_of_tau(tau):
    tau = np.asarray(tau, dtype=float)
    return 0.5 * (tau + tau ** 3 / 3.0)


def tau_from_u(u):
    """Real root of tau + tau^3/3 = 2u.

    Closed-form Cardano seed tau = c - 1/c with c = (3|u| + sqrt(9u^2+1))^(1/3),
    polished by Newton steps.  Works on scalars and arrays.
    """
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    c = np.cbrt(3.0 * au + np.sqrt(9.0 * au * au + 1.0))
    tau = c - 1.0 / c
    target = 2.0 * au
    for _ in range(3):
        res = tau + tau ** 3 / 3.0 - target
        tau = tau - res / (1.0 + tau * tau)
    tau = np.copysign(tau, u)
    if tau.ndim == 0:
        return float(tau)
    return tau


def h2bp(r, y, G):
    """Kepler energy y^2/2 + G^2/(2 r^2) - 1/r."""
    return 0.5 * y * y + 0.5 * G * G / (r * r) - 1.0 / r


def eval_homoclinic(tau, G):
    """State on the parabolic homoclinic orbit with angular momentum G.

    Parameters
    ----------
    tau : float
        Regular parameter, tau = 0 at pericentre.
    G : float
        Angular momentum, nonzero.

    Returns
    -------
    TwoBodyState
        (G^2 r_h, alpha_h, y_h / G, G) with alpha in [0, 2 pi).
    """
    if G == 0:
        raise DomainError("degenerate angular momentum: G must be nonzero")
    tau = float(tau)
    return TwoBodyState(G * G * float(r_h(tau)), float(alpha_h(tau)),
                        float(y_h(tau)) / G, float(G))


def eval_homoclinic_u(u, G):
    """Same as eval_homoclinic, parametrised by u."""
    return eval_homoclinic(tau_from_u(u), G)


def y_h_consistency_check(tau_grid, step=1e-5):
    """Largest |d r_h/du - y_h| over a grid of tau values.

    The u-derivative is taken by central differences in u, mapping back to
    tau with tau_from_u, so the check exercises the inversion as well.
    """
    tau_grid = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    u = u_of_tau(tau_grid)
    drdu = (r_h(tau_from_u(u + step)) - r_h(tau_from_u(u - step))) / (2.0 * step)
    return float(np.max(np.abs(drdu - y_h(tau_grid))))
