"""Independent reference computations used by the tests."""
import numpy as np

from rpe3bp import two_body as tb
from rpe3bp.perturbation import perturbative_potential
from rpe3bp.primaries import solve_kepler, true_anomaly_and_rho


def _v_direct(u, beta, t, i_m, mu, eps):
    """I^3 V_pol - I/r_h by plain subtraction of the two point-mass potentials."""
    tau = np.asarray(tb.tau_from_u(u))
    rh = 0.5 * (1.0 + tau * tau)
    r = i_m * i_m * rh
    alpha = beta + np.pi + 2.0 * np.arctan(tau)
    if eps == 0.0:
        f, rho = t, np.ones_like(t)
    else:
        f, rho = true_anomaly_and_rho(solve_kepler(t, eps), eps)
    qx, qy = r * np.cos(alpha), r * np.sin(alpha)
    px, py = rho * np.cos(f), rho * np.sin(f)
    d0 = np.hypot(qx - mu * px, qy - mu * py)
    d1 = np.hypot(qx + (1 - mu) * px, qy + (1 - mu) * py)
    return i_m ** 3 * ((1 - mu) / d0 + mu / d1) - i_m / rh


def melnikov_brute(sigma, theta, i_m, mu, eps, tau_cut=40.0, n_gl=16, n_tail_t=128):
    """L(sigma, theta) by direct quadrature of V(s, theta, sigma + I^3 s).

    Gauss-Legendre panels of width about 2/I^3 in s resolve the oscillation
    on |tau| <= tau_cut with the integrand formed by plain subtraction.  Outside,
    the oscillating part is negligible and the t-average of V is integrated
    over w = arctan(tau).
    """
    u_cut = float(tb.u_of_tau(tau_cut))
    n_pan = int(np.ceil(2 * u_cut * i_m ** 3 / 2.0))
    x, w = np.polynomial.legendre.leggauss(n_gl)
    edges = np.linspace(-u_cut, u_cut, n_pan + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1] - edges[0])
    s = (mid[:, None] + half * x[None, :]).ravel()
    ws = np.tile(half * w, n_pan)
    core = np.sum(ws * _v_direct(s, theta, sigma + i_m ** 3 * s, i_m, mu, eps))
    # tails, both sides, t-averaged
    a = np.arctan(tau_cut)
    xw, ww = np.polynomial.legendre.leggauss(64)
    wv = a + (0.5 * np.pi - a) * 0.5 * (xw + 1)
    wq = (0.5 * np.pi - a) * 0.5 * ww
    tgrid = 2 * np.pi * np.arange(n_tail_t) / n_tail_t
    tail = 0.0
    for sgn in (1.0, -1.0):
        tau = sgn * np.tan(wv)
        u = np.asarray(tb.u_of_tau(tau))
        # plain subtraction loses everything out here; use the series-free bracket
        vals = perturbative_potential(u[:, None], theta, tgrid[None, :], i_m, eps, mu).mean(axis=1)
        tail += np.sum(wq * vals * 0.5 / np.cos(wv) ** 4)
    return core + tail
