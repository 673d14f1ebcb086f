"""Quadrature rules used for the Melnikov integrals.

de_fourier_rule implements the double exponential transformation of
Ooura and Mori for one-sided Fourier integrals

    int_0^inf f(x) sin(w x) dx,   int_0^inf f(x) cos(w x) dx,

with f smooth and slowly (algebraically) decaying.  The transformed nodes
approach the zeros of the trigonometric factor double exponentially, so
the slowly decaying tail needs no truncation model.  Nodes and weights are
available in double precision (numpy) and in mpmath at any precision.
"""
import math

import mpmath
import numpy as np

BETA = 0.25


def _alpha(m):
    return BETA / math.sqrt(1.0 + m * math.log1p(m) / (4.0 * math.pi))


def _phi_and_dphi(t, alpha):
    """phi(t) = t / (1 - exp(-D(t))) and its derivative (numpy)."""
    t = np.asarray(t, dtype=float)
    D = 2.0 * t + alpha * (-np.expm1(-t)) + BETA * np.expm1(t)
    dD = 2.0 + alpha * np.exp(-t) + BETA * np.exp(t)
    small = np.abs(t) < 1e-8
    ts = np.where(small, 1.0, t)
    Ds = np.where(small, 1.0, D)
    den = -np.expm1(-Ds)
    emD = np.exp(-Ds)
    phi = ts / den
    dphi = (den - ts * dD * emD) / (den * den)
    d1 = 2.0 + alpha + BETA
    d2 = 0.5 * (BETA - alpha)
    phi0 = 1.0 / d1
    dphi0 = -(d2 - 0.5 * d1 * d1) / (d1 * d1)
    phi = np.where(small, phi0, phi)
    dphi = np.where(small, dphi0, dphi)
    return phi, dphi


def de_fourier_rule(omega, m=60.0, kind="sin", digits=17):
    """Nodes x and weights w with int_0^inf f(x) trig(omega x) dx ~ sum w f(x).

    Parameters
    ----------
    omega : float
        Positive angular frequency.
    m : float
        Mesh parameter; the step in the transformed variable is pi/m.
        Larger m gives more nodes and higher accuracy.
    kind : {'sin', 'cos'}
    digits : int
        Terms whose weight is below 10^-digits relative are dropped.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    h = math.pi / m
    alpha = _alpha(m)
    shift = 0.0 if kind == "sin" else -0.5
    cut = 10.0 ** (-digits)
    # left end: phi' decays like exp(-alpha e^|t|)
    t_lo = -math.log(digits * math.log(10.0) / alpha + 1.0) - 1.0
    # right end: sin(M phi) - sin(n pi) ~ M t exp(-beta e^t)
    t_hi = math.log(digits * math.log(10.0) / BETA + 1.0) + 1.0
    n = np.arange(math.floor(t_lo / h), math.ceil(t_hi / h) + 1)
    t = (n + shift) * h
    phi, dphi = _phi_and_dphi(t, alpha)
    arg = m * phi
    trig = np.sin(arg) if kind == "sin" else np.cos(arg)
    w = (math.pi / omega) * trig * dphi
    x = arg / omega
    keep = np.abs(w) > cut * (math.pi / omega)
    return x[keep], w[keep]


def de_fourier_rule_mp(omega, m, kind="sin", dps=None):
    """mpmath version of de_fourier_rule; returns lists of mpf."""
    dps = dps or mpmath.mp.dps
    with mpmath.workdps(dps + 10):
        omega = mpmath.mpf(omega)
        m = mpmath.mpf(m)
        h = mpmath.pi / m
        alpha = mpmath.mpf(BETA) / mpmath.sqrt(1 + m * mpmath.log(1 + m) / (4 * mpmath.pi))
        beta = mpmath.mpf(BETA)
        digits = dps + 5
        t_lo = -math.log(digits * math.log(10.0) / float(alpha) + 1.0) - 1.0
        t_hi = math.log(digits * math.log(10.0) / BETA + 1.0) + 1.0
        hf = float(h)
        shift = mpmath.mpf(0) if kind == "sin" else mpmath.mpf(-0.5)
        cut = mpmath.mpf(10) ** (-digits) * mpmath.pi / omega
        xs, ws = [], []
        d1 = 2 + alpha + beta
        d2 = (beta - alpha) / 2
        for n in range(math.floor(t_lo / hf), math.ceil(t_hi / hf) + 1):
            t = (n + shift) * h
            if t == 0:
                phi = 1 / d1
                dphi = -(d2 - d1 * d1 / 2) / (d1 * d1)
            else:
                D = 2 * t + alpha * (1 - mpmath.exp(-t)) + beta * mpmath.expm1(t)
                dD = 2 + alpha * mpmath.exp(-t) + beta * mpmath.exp(t)
                den = -mpmath.expm1(-D)
                emD = mpmath.exp(-D)
                phi = t / den
                dphi = (den - t * dD * emD) / (den * den)
            arg = m * phi
            trig = mpmath.sin(arg) if kind == "sin" else mpmath.cos(arg)
            w = (mpmath.pi / omega) * trig * dphi
            if abs(w) > cut:
                xs.append(arg / omega)
                ws.append(w)
    return xs, ws


def periodic_trapezoid_nodes(n):
    """Midpoint nodes w_j in (-pi/2, pi/2) for the compactified real line."""
    return -0.5 * np.pi + (np.arange(n) + 0.5) * np.pi / n
