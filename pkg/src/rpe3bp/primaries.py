"""Keplerian ephemeris of the two primaries.

Mean anomaly t, eccentric anomaly xi and true anomaly f are linked by
t = xi - eps sin(xi) and

    rho exp(i f) = a^2 exp(i xi) - eps + eps^2/(4 a^2) exp(-i xi),

with a = (sqrt(1+eps) + sqrt(1-eps))/2 and rho = 1 - eps cos(xi) the
separation.  The heavy primary (mass 1-mu) sits at mu rho (cos f, sin f)
and the light one (mass mu) at -(1-mu) rho (cos f, sin f).
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi
KEPLER_TOL = 1e-13


def _check_eps(eps):
    if not (0.0 <= eps < 1.0):
        raise DomainError(f"eccentricity must lie in [0, 1), got {eps}")


def solve_kepler(t, eps):
    """Eccentric anomaly xi solving xi - eps sin(xi) = t.

    Newton iteration on the reduced mean anomaly with a bisection fallback
    on the bracket [M - eps, M + eps]; accepts scalars or arrays.
    """
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    if eps == 0.0:
        return float(t) if t.ndim == 0 else t.copy()
    turns = np.floor(t / TWO_PI)
    m = t - TWO_PI * turns
    xi = m + eps * np.sin(m) / (1.0 - eps * np.cos(m) + 1e-300)
    xi = np.clip(xi, m - eps, m + eps)
    for _ in range(50):
        res = xi - eps * np.sin(xi) - m
        if np.all(np.abs(res) <= 0.25 * KEPLER_TOL):
            break
        dres = np.maximum(1.0 - eps * np.cos(xi), 1e-12)
        xi = np.clip(xi - res / dres, m - eps, m + eps)
    res = xi - eps * np.sin(xi) - m
    bad = np.abs(res) > KEPLER_TOL
    if np.any(bad):
        lo = np.where(bad, m - eps, 0.0)
        hi = np.where(bad, m + eps, 0.0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = mid - eps * np.sin(mid) - m
            lo = np.where(fm < 0, mid, lo)
            hi = np.where(fm < 0, hi, mid)
        xi = np.where(bad, 0.5 * (lo + hi), xi)
    xi = xi + TWO_PI * turns
    return float(xi) if xi.ndim == 0 else xi


def anomaly_coefficient(eps):
    """a = (sqrt(1+eps) + sqrt(1-eps))/2."""
    return 0.5 * (math.sqrt(1.0 + eps) + math.sqrt(1.0 - eps))


def true_anomaly_and_rho(xi, eps):
    """True anomaly f and separation rho from the eccentric anomaly.

    f is continuous in xi and agrees with xi at multiples of pi.
    """
    _check_eps(eps)
    xi = np.asarray(xi, dtype=float)
    a2 = 0.5 * (1.0 + math.sqrt(1.0 - eps * eps))
    b = eps * eps / (4.0 * a2)
    re = (a2 + b) * np.cos(xi) - eps
    im = (a2 - b) * np.sin(xi)
    rho = 1.0 - eps * np.cos(xi)
    # arg of the complex expression, unwrapped to follow xi
    f = np.arctan2(im, re)
    f = f + TWO_PI * np.round((xi - f) / TWO_PI)
    if f.ndim == 0:
        return float(f), float(rho)
    return f, rho


def rho_from_f(f, eps):
    """Separation from the true anomaly, (1 - eps^2)/(1 + eps cos f)."""
    return (1.0 - eps * eps) / (1.0 + eps * np.cos(f))


def true_anomaly_rate(f, eps):
    """df/dt = (1 + eps cos f)^2 / (1 - eps^2)^(3/2)."""
    return (1.0 + eps * np.cos(f)) ** 2 / (1.0 - eps * eps) ** 1.5


@dataclass(frozen=True)
class PrimaryEphemeris:
    """Primaries of mass 1-mu and mu on Kepler ellipses of eccentricity eps.

    The library accepts mu in [0, 1/2]; mu = 0 is the pure Kepler limit.
    """

    mu: float
    eps: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.mu <= 0.5):
            raise DomainError(f"mass ratio must lie in [0, 1/2], got {self.mu}")
        _check_eps(self.eps)

    @property
    def a_coef(self):
        return anomaly_coefficient(self.eps)

    def anomalies(self, t):
        """Return (xi, f, rho) at mean anomaly t."""
        xi = solve_kepler(t, self.eps)
        f, rho = true_anomaly_and_rho(xi, self.eps)
        return xi, f, rho

    def f_rho(self, t):
        _, f, rho = self.anomalies(t)
        return f, rho

    def rates(self, t):
        """Time derivatives (df/dt, drho/dt)."""
        xi = solve_kepler(t, self.eps)
        f, rho = true_anomaly_and_rho(xi, self.eps)
        eps = self.eps
        fdot = math.sqrt(1.0 - eps * eps) / (rho * rho)
        rhodot = eps * np.sin(xi) / rho
        return fdot, rhodot

    def primary_positions(self, t):
        """Positions (q0, q1) of the heavy and light primary at time t.

        For array t the returned arrays have shape t.shape + (2,).
        """
        f, rho = self.f_rho(t)
        d = np.stack([np.cos(f), np.sin(f)], axis=-1) * np.asarray(rho)[..., None]
        return self.mu * d, -(1.0 - self.mu) * d

    def table(self, t_grid):
        """Columns t, xi, f, rho, q0x, q0y, q1x, q1y as a 2-D array."""
        t_grid = np.asarray(t_grid, dtype=float)
        xi, f, rho = self.anomalies(t_grid)
        q0, q1 = self.primary_positions(t_grid)
        return np.column_stack([t_grid, xi, f, rho, q0[:, 0], q0[:, 1], q1[:, 0], q1[:, 1]])
