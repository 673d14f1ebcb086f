"""Melnikov potential of the parabolic homoclinic orbit and derived objects.

    L(sigma, theta) = int V(s, theta, sigma + I^3 s) ds
                    = sum_l L^[l](theta) exp(i l sigma),
    L^[l](theta)    = int V^[l](s, theta) exp(i l I^3 s) ds,

where V^[l] is the l-th Fourier coefficient of V in t.  Each harmonic is
computed directly:

* the t-coefficients (and the theta-dependence, as a Fourier series in
  theta) come from FFTs on a uniform (beta, t) grid;
* l = 0: the substitution s = u(tan w) turns the integral into one of a
  smooth pi-periodic function of w, so the midpoint rule converges
  geometrically;
* l >= 1: the oscillatory integral over s in R is split into even and odd
  parts and evaluated with the double exponential Fourier rule.

Because the harmonics decay like exp(-l I^3/3), the l >= 1 values drop
below double precision noise for I of about 4; an mpmath path evaluates
them at any precision.

The reduced potentials are L evaluated on the two critical lines
sigma = phi and sigma = phi + pi:

    Lplus(phi)  = sum_l L^[l](phi) exp(i l phi),
    Lminus(phi) = sum_l (-1)^l L^[l](phi) exp(i l phi).
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from . import two_body as tb
from .errors import ConvergenceError, DomainError, NoiseFloorError
from .perturbation import I_FLOOR, potential_bracket
from .primaries import solve_kepler, true_anomaly_and_rho
from .quadrature import de_fourier_rule, de_fourier_rule_mp, periodic_trapezoid_nodes

EPS64 = np.finfo(float).eps


def _validate(i_m, mu, eps):
    if not (0.0 <= mu <= 0.5):
        raise DomainError(f"mass ratio must lie in [0, 1/2], got {mu}")
    if not (0.0 <= eps < 1.0):
        raise DomainError(f"eccentricity must lie in [0, 1), got {eps}")
    if i_m < I_FLOOR:
        raise DomainError(f"angular momentum must be >= {I_FLOOR}, got {i_m}")


def _default_nt(i_m, mu, eps, l_max, digits=17):
    """t-grid size so that aliased harmonics fall below 10^-digits."""
    q = 2.0 * (1.0 - mu) * (1.0 + eps) / (i_m * i_m)
    q = max(q, eps / (1.0 + math.sqrt(1.0 - eps * eps)), 1e-3)
    need = digits * math.log(10.0) / -math.log(min(q, 0.95)) + l_max + 2
    n = 16
    while n < need:
        n *= 2
    return n


def _default_nbeta(eps, digits=17):
    if eps == 0.0:
        return 4
    q = eps / (1.0 + math.sqrt(1.0 - eps * eps))
    need = 2 * (digits * math.log(10.0) / -math.log(q)) + 2
    n = 8
    while n < need and n < 64:
        n *= 2
    return n


def _primary_grid(n_t, eps):
    t = 2.0 * np.pi * np.arange(n_t) / n_t
    if eps == 0.0:
        return t, t.copy(), np.ones(n_t)
    f, rho = true_anomaly_and_rho(solve_kepler(t, eps), eps)
    return t, f, rho


def _grid_potential(rh, cos_ah, sin_ah, beta, f, rho, i_m, mu):
    """V on a (node, beta, t) grid. rh, cos_ah, sin_ah are 1-D over nodes."""
    psi = beta[:, None] - f[None, :]
    cb = np.cos(psi)[None, :, :]
    sb = np.sin(psi)[None, :, :]
    c = cb * cos_ah[:, None, None] - sb * sin_ah[:, None, None]
    x = rho[None, None, :] / (i_m * i_m * rh[:, None, None])
    return (i_m / rh)[:, None, None] * potential_bracket(x, c, mu)


def _theta_coefficients(v, l, beta):
    """Coefficients b_j(node) with V^[l](node, beta) = exp(-i l beta) sum_j b_j exp(i j beta)."""
    n_beta = len(beta)
    n_t = v.shape[2]
    vl = np.fft.fft(v, axis=2)[:, :, l % n_t] / n_t
    vl = vl * np.exp(1j * l * beta)[None, :]
    return np.fft.fft(vl, axis=1) / n_beta


def _tau_geometry(tau):
    den = tau * tau + 1.0
    return 0.5 * den, (tau * tau - 1.0) / den, -2.0 * tau / den


@dataclass
class HarmonicSet:
    """Fourier data of L(sigma, theta) at fixed (I, mu, eps).

    coeffs[l, j] (l = 0..l_max, j indexed like numpy FFT frequencies) give

        L^[l](theta) = exp(-i l theta) sum_j coeffs[l, j] exp(i j theta),

    and L^[-l] is the complex conjugate of L^[l].  noise[l] estimates the
    rounding noise of harmonic l.
    """

    i_m: float
    mu: float
    eps: float
    coeffs: np.ndarray
    noise: np.ndarray
    settings: dict = field(default_factory=dict)

    @property
    def l_max(self):
        return self.coeffs.shape[0] - 1

    @property
    def j_values(self):
        n = self.coeffs.shape[1]
        return np.fft.fftfreq(n, 1.0 / n).astype(int)

    def harmonic(self, l, theta):
        """L^[l](theta), complex; theta may be an array."""
        theta = np.asarray(theta, dtype=float)
        if abs(l) > self.l_max:
            return np.zeros_like(theta, dtype=complex)
        la = abs(l)
        e = np.exp(1j * np.multiply.outer(theta, self.j_values))
        val = np.exp(-1j * la * theta) * (e @ self.coeffs[la])
        if la == 0:
            return val.real + 0j
        return val if l > 0 else np.conj(val)

    def mean_theta(self, l):
        """theta-average of exp(i l theta) L^[l], i.e. the j = 0 coefficient."""
        return self.coeffs[abs(l), 0]

    def L(self, sigma, theta, d_sigma=0, d_theta=0):
        """L(sigma, theta) or a partial derivative of it (orders d_sigma, d_theta)."""
        sigma, theta = np.broadcast_arrays(np.asarray(sigma, float), np.asarray(theta, float))
        j = self.j_values
        ej = np.exp(1j * np.multiply.outer(theta, j))
        total = np.zeros(sigma.shape)
        for l in range(self.l_max + 1):
            # term exp(i l (sigma - theta)) exp(i j theta)
            freq_t = j - l
            fac = (1j * l) ** d_sigma * (1j * freq_t) ** d_theta
            s = (ej * fac) @ self.coeffs[l]
            s = s * np.exp(1j * l * (sigma - theta))
            total = total + (s.real if l == 0 else 2.0 * s.real)
        return total if total.ndim else float(total)

    def reduced(self, phi, sign, d_phi=0):
        """Reduced potential sum_l s^l L^[l](phi) exp(i l phi), s = +1 or -1."""
        phi = np.asarray(phi, dtype=float)
        j = self.j_values
        ej = np.exp(1j * np.multiply.outer(phi, j)) * (1j * j) ** d_phi
        total = np.zeros(phi.shape)
        for l in range(self.l_max + 1):
            s = ej @ self.coeffs[l]
            w = 1.0 if l == 0 else 2.0 * (sign ** l)
            total = total + w * s.real
        return total if total.ndim else float(total)

    def critical_sigma(self, theta, sign):
        """Critical phase of sigma -> L(sigma, theta) on the branch of the sign."""
        h = {l: complex(self.harmonic(l, theta)) for l in range(1, self.l_max + 1)}
        return branch_critical_point(h, theta, sign)[0]

    def reduced_noise(self):
        return float(self.noise[0] + 2.0 * np.sum(self.noise[1:]))


def compute_harmonics(i_m, mu, eps, l_max=None, n_t=None, n_beta=None, n_w=256, m_de=40.0,
                      tol=1e-16):
    """Harmonics L^[l] for l = 0..l_max in double precision.

    Parameters
    ----------
    i_m, mu, eps : float
        Angular momentum of the reference parabola, mass ratio, eccentricity.
    l_max : int, optional
        Highest harmonic.  By default harmonics are added until they fall
        below tol relative to the mean (at least 2).
    n_t, n_beta : int, optional
        FFT grid sizes in t and beta; chosen from the parameters if omitted.
    n_w : int
        Midpoint nodes for the zeroth harmonic.
    m_de : float
        Mesh parameter of the double exponential rule.
    """
    _validate(i_m, mu, eps)
    return _compute_harmonics_cached(float(i_m), float(mu), float(eps), l_max, n_t, n_beta,
                                     int(n_w), float(m_de), float(tol))


@lru_cache(maxsize=512)
def _compute_harmonics_cached(i_m, mu, eps, l_max, n_t, n_beta, n_w, m_de, tol):
    n_t_given = n_t is not None
    n_t = n_t or _default_nt(i_m, mu, eps, 0 if l_max is None else l_max)
    while True:
        hs = _harmonics_on_grid(i_m, mu, eps, l_max, n_t, n_beta, n_w, m_de, tol)
        # an automatically chosen l_max must stay well inside the t grid
        if n_t_given or l_max is not None or hs.l_max < n_t // 4 or n_t >= 1024:
            return hs
        n_t *= 2


def _harmonics_on_grid(i_m, mu, eps, l_max, n_t, n_beta, n_w, m_de, tol):
    auto_l = l_max is None
    lcap = n_t // 4 if auto_l else l_max
    n_beta = n_beta or _default_nbeta(eps)
    beta = 2.0 * np.pi * np.arange(n_beta) / n_beta
    _, f, rho = _primary_grid(n_t, eps)
    coeffs = []
    noise = []
    if mu == 0.0:
        coeffs = np.zeros((lcap + 1 if not auto_l else 3, n_beta), dtype=complex)
        return HarmonicSet(i_m, mu, eps, coeffs, np.zeros(coeffs.shape[0]),
                           dict(n_t=n_t, n_beta=n_beta, n_w=n_w, m_de=m_de))

    # zeroth harmonic on the compactified line, tau = tan(w)
    w = periodic_trapezoid_nodes(n_w)
    cw = np.cos(w)
    rh = 0.5 / (cw * cw)
    cos_ah = -np.cos(2.0 * w)
    sin_ah = -np.sin(2.0 * w)
    v = _grid_potential(rh, cos_ah, sin_ah, beta, f, rho, i_m, mu)
    b0 = _theta_coefficients(v, 0, beta)
    jac = (np.pi / n_w) * 0.5 / cw ** 4
    c0 = jac @ b0
    coeffs.append(c0)
    noise.append(10.0 * EPS64 * float(np.sum(jac * np.max(np.abs(b0), axis=1))))

    l = 1
    quiet = 0
    while True:
        if not auto_l and l > l_max:
            break
        omega = l * i_m ** 3
        cl = np.zeros(n_beta, dtype=complex)
        scale = 0.0
        for kind in ("cos", "sin"):
            x, wt = de_fourier_rule(omega, m_de, kind)
            u = np.concatenate([x, -x])
            tau = np.asarray(tb.tau_from_u(u))
            rh, cos_ah, sin_ah = _tau_geometry(tau)
            v = _grid_potential(rh, cos_ah, sin_ah, beta, f, rho, i_m, mu)
            b = _theta_coefficients(v, l, beta)
            n = len(x)
            bp, bm = b[:n], b[n:]
            if kind == "cos":
                part = wt @ (bp + bm)
            else:
                part = 1j * (wt @ (bp - bm))
            cl += part
            scale += float(np.sum(np.abs(wt) * np.max(np.abs(bp) + np.abs(bm), axis=1)))
        coeffs.append(cl)
        noise.append(10.0 * EPS64 * scale)
        if auto_l:
            mag = np.max(np.abs(cl))
            small = mag < max(tol * abs(c0[0]), noise[-1])
            quiet = quiet + 1 if small else 0
            if (l >= 2 and quiet >= 2) or l >= lcap:
                break
        l += 1
    return HarmonicSet(i_m, mu, eps, np.array(coeffs), np.array(noise),
                       dict(n_t=n_t, n_beta=n_beta, n_w=n_w, m_de=m_de))


def check_convergence(i_m, mu, eps, l_max=2, tol=1e-10):
    """Recompute with refined grids and return the largest coefficient change.

    Raises ConvergenceError when it exceeds tol.
    """
    a = compute_harmonics(i_m, mu, eps, l_max=l_max)
    s = a.settings
    b = compute_harmonics(i_m, mu, eps, l_max=l_max, n_t=2 * s["n_t"], n_beta=2 * s["n_beta"],
                          n_w=2 * s["n_w"], m_de=1.5 * s["m_de"])
    th = np.linspace(0, 2 * np.pi, 17)[:-1]
    diff = max(np.max(np.abs(a.harmonic(l, th) - b.harmonic(l, th))) for l in range(l_max + 1))
    if diff > tol:
        raise ConvergenceError(f"harmonics changed by {diff:.3e} under refinement", estimate=b)
    return diff


# --------------------------------------------------------------------------
# critical phases

def _sigma_derivatives(h, sigma):
    """Oscillating part of L and its first two sigma-derivatives.

    h maps l >= 1 to L^[l](theta).
    """
    f = g = g2 = 0.0
    for l, c in h.items():
        e = c * complex(math.cos(l * sigma), math.sin(l * sigma))
        f += 2.0 * e.real
        g -= 2.0 * l * e.imag
        g2 -= 2.0 * l * l * e.real
    return f, g, g2


def _newton_sigma(h, sigma, tol, max_iter):
    for k in range(1, max_iter + 1):
        _, g, g2 = _sigma_derivatives(h, sigma)
        if g2 == 0.0:
            return None
        step = max(-0.5, min(0.5, -g / g2))
        sigma += step
        if abs(step) < tol:
            return sigma, k
    return None


def branch_critical_point(h, theta, sign, tol=1e-13, max_iter=60, n_scan=64):
    """Critical point of the sigma-dependence of L on the branch of sign.

    The + branch is a maximum and the - branch a minimum (L^[1] is a
    positive multiple of exp(-i theta) to leading order).  Newton is
    started at theta (+) or theta + pi (-); if it fails or lands on a
    critical point of the wrong type, it is restarted from the global
    maximum (minimum) of a scan over n_scan phases.

    Returns (sigma, second derivative, iterations), sigma reduced to
    [seed - pi, seed + pi).
    """
    seed = theta + (0.0 if sign > 0 else math.pi)
    want = -1.0 if sign > 0 else 1.0
    res = _newton_sigma(h, seed, tol, max_iter)
    if res is not None and want * _sigma_derivatives(h, res[0])[2] > 0:
        sigma, k = res
    else:
        grid = 2.0 * math.pi * np.arange(n_scan) / n_scan
        vals = np.array([_sigma_derivatives(h, x)[0] for x in grid])
        start = grid[np.argmax(vals) if sign > 0 else np.argmin(vals)]
        res = _newton_sigma(h, start, tol, max_iter)
        if res is None:
            raise ConvergenceError("no critical phase found", estimate=start)
        sigma, k = res
    sigma = seed + math.remainder(sigma - seed, 2.0 * math.pi)
    g2 = _sigma_derivatives(h, sigma)[2]
    if want * g2 <= 0:
        raise ConvergenceError("degenerate second derivative at critical phase", estimate=sigma)
    return sigma, g2, k


# --------------------------------------------------------------------------
# extended precision path

def harmonic_extended(l, thetas, i_m, mu, eps, dps=40, m_de=40, n_t=None):
    """L^[l](theta) for l >= 1 at the given thetas with dps significant digits.

    Returns a list of mpmath complex numbers.  The working precision is
    raised by the number of digits the harmonic lies below the O(1)
    integrand (about l I^3 / (3 ln 10)).  The t-average uses a trapezoid
    rule sized for the requested precision.
    """
    _validate(i_m, mu, eps)
    if l < 1:
        raise DomainError("extended path handles l >= 1")
    thetas = [float(t) for t in np.atleast_1d(thetas)]
    dps = int(dps + math.ceil(l * i_m ** 3 / (3.0 * math.log(10.0))) + 5)
    n_t = n_t or _default_nt(i_m, mu, eps, l, digits=dps)
    # the rule's absolute error falls roughly like 10^(-m/2)
    m_de = max(m_de, 2.2 * dps)
    with mpmath.workdps(dps + 10):
        mp = mpmath.mp
        I = mpmath.mpf(i_m)
        muf = mpmath.mpf(mu)
        nu = 1 - muf
        epsf = mpmath.mpf(eps)
        ts = [2 * mpmath.pi * b / n_t for b in range(n_t)]
        fs, rhos = [], []
        for t in ts:
            if eps == 0:
                fs.append(t)
                rhos.append(mpmath.mpf(1))
            else:
                xi = mpmath.findroot(lambda z: z - epsf * mpmath.sin(z) - t, t)
                rho = 1 - epsf * mpmath.cos(xi)
                f = mpmath.atan2(mpmath.sqrt(1 - epsf ** 2) * mpmath.sin(xi), mpmath.cos(xi) - epsf)
                fs.append(f)
                rhos.append(rho)
        phase_t = [mpmath.expj(-l * t) / n_t for t in ts]
        omega = l * I ** 3

        def vl(u, trig):
            """V^[l](u, theta) for all thetas; trig holds cos/sin(theta - f_b)."""
            tau = _tau_mp(u)
            den = tau * tau + 1
            rh = den / 2
            ca = (tau * tau - 1) / den
            sa = -2 * tau / den
            pref = I / rh
            xfac = 1 / (I * I * rh)
            out = []
            for cb_sb in trig:
                acc = mpmath.mpc(0)
                for b in range(n_t):
                    cb, sb = cb_sb[b]
                    c = cb * ca - sb * sa
                    x = rhos[b] * xfac
                    acc += phase_t[b] * _bracket_mp(x, c, muf, nu)
                out.append(pref * acc)
            return out

        trig = [[(mpmath.cos(mpmath.mpf(th) - fs[b]), mpmath.sin(mpmath.mpf(th) - fs[b]))
                 for b in range(n_t)] for th in thetas]
        total = [mpmath.mpc(0)] * len(thetas)
        for kind in ("cos", "sin"):
            xs, ws = de_fourier_rule_mp(omega, m_de, kind, dps=dps)
            for x, w in zip(xs, ws):
                vp = vl(x, trig)
                vm = vl(-x, trig)
                for k in range(len(thetas)):
                    if kind == "cos":
                        total[k] += w * (vp[k] + vm[k])
                    else:
                        total[k] += 1j * w * (vp[k] - vm[k])
        return [+z for z in total]


def _tau_mp(u):
    au = abs(u)
    c = mpmath.cbrt(3 * au + mpmath.sqrt(9 * au * au + 1))
    tau = c - 1 / c
    for _ in range(2):
        tau -= (tau + tau ** 3 / 3 - 2 * au) / (1 + tau * tau)
    return tau if u >= 0 else -tau


def _h2_mp(z):
    s = mpmath.sqrt(1 + z)
    return z * z * (s + 2) / (2 * s * (s + 1) ** 2)


def _bracket_mp(x, c, mu, nu):
    z0 = mu * x * (mu * x - 2 * c)
    z1 = nu * x * (nu * x + 2 * c)
    return -mu * nu * x * x / 2 + nu * _h2_mp(z0) + mu * _h2_mp(z1)


# --------------------------------------------------------------------------
# operations on L

def melnikov_L(sigma, theta, i_m, mu, eps, **kw):
    """Melnikov potential L(sigma, theta; I, eps) by harmonic synthesis."""
    if mu == 0:
        return 0.0 if np.ndim(sigma) == 0 and np.ndim(theta) == 0 else \
            np.zeros(np.broadcast(np.asarray(sigma), np.asarray(theta)).shape)
    return compute_harmonics(i_m, mu, eps, **kw).L(sigma, theta)


@dataclass
class MelnikovTable:
    i_m: float
    mu: float
    eps: float
    sigma: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    harmonics: HarmonicSet


def melnikov_table(i_m, mu, eps, n_sigma=32, n_theta=32, **kw):
    """L sampled on a uniform (sigma, theta) grid, values[i, j] = L(sigma_i, theta_j)."""
    hs = compute_harmonics(i_m, mu, eps, **kw)
    sigma = 2.0 * np.pi * np.arange(n_sigma) / n_sigma
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    S, T = np.meshgrid(sigma, theta, indexing="ij")
    return MelnikovTable(i_m, mu, eps, sigma, theta, hs.L(S, T), hs)


def harmonics_from_samples(values, l_max, axis=0, alias_threshold=1e-3):
    """L^[l] for |l| <= l_max from samples on a uniform sigma grid.

    values has the sigma grid along `axis`.  Returns an array with the
    harmonic index (l = -l_max..l_max) along that axis.  Refuses (raises
    ConvergenceError) when the grid is shorter than 4 l_max or when the
    highest resolved harmonics carry more than alias_threshold of the
    non-constant energy.
    """
    values = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    n = values.shape[0]
    if n < 4 * l_max:
        raise DomainError(f"sigma grid of {n} points too short for l_max={l_max}")
    c = np.fft.fft(values, axis=0) / n
    energy = np.sum(np.abs(c[1:]) ** 2, axis=0)
    top = np.abs(c[n // 2]) ** 2 + (np.abs(c[n // 2 - 1]) ** 2 if n > 2 else 0)
    ratio = np.max(top / np.where(energy > 0, energy, 1.0))
    if ratio > alias_threshold:
        raise ConvergenceError(f"aliasing: top harmonic carries {ratio:.2e} of the energy")
    idx = np.arange(-l_max, l_max + 1) % n
    return np.moveaxis(c[idx], 0, axis)


def harmonics(theta, i_m, mu, eps, l_max=2, precision="double", dps=40):
    """L^[l](theta) for l = -l_max..l_max (complex array, l along axis 0).

    precision='extended' evaluates the l >= 1 harmonics with mpmath at dps
    digits (slow; intended for I up to about 5).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros((2 * l_max + 1, len(theta)), dtype=complex)
    hs = compute_harmonics(i_m, mu, eps, l_max=l_max)
    for l in range(0, l_max + 1):
        if l >= 1 and precision == "extended":
            vals = harmonic_extended(l, theta, i_m, mu, eps, dps=dps)
            h = np.array([complex(v) for v in vals])
        else:
            h = hs.harmonic(l, theta)
        out[l_max + l] = h
        out[l_max - l] = np.conj(h)
    return out


# --------------------------------------------------------------------------
# reduced potentials

@dataclass
class ReducedGradient:
    """Reduced potential of one sign with its gradient at (phi, I)."""

    value: float
    d_phi: float
    d_i: float
    noise: float


def reduced_potentials(phi, i, mu, eps, di_rel=1e-3, phase="fixed", **kw):
    """(Lplus, Lminus) with gradients at (phi, I).

    phase='fixed' evaluates L on the lines sigma = phi and sigma = phi + pi.
    phase='critical' uses instead the critical phase of sigma -> L(sigma, phi)
    reached from those lines; the phi-derivative is then the partial
    derivative in theta at the critical point.

    The phi-derivative is spectral; the I-derivative is a centred
    difference with step di_rel * I (at fixed sigma).
    """
    hs = compute_harmonics(i, mu, eps, **kw)
    di = di_rel * i
    hp = compute_harmonics(i + di, mu, eps, **kw)
    hm = compute_harmonics(i - di, mu, eps, **kw)
    out = []
    for sign in (1, -1):
        noise = max(hp.reduced_noise(), hm.reduced_noise()) / di + hs.reduced_noise()
        if phase == "fixed":
            val = hs.reduced(phi, sign)
            dphi = hs.reduced(phi, sign, d_phi=1)
            dI = (hp.reduced(phi, sign) - hm.reduced(phi, sign)) / (2.0 * di)
        elif phase == "critical":
            sig = hs.critical_sigma(phi, sign)
            val = hs.L(sig, phi)
            dphi = hs.L(sig, phi, d_theta=1)
            dI = (hp.L(sig, phi) - hm.L(sig, phi)) / (2.0 * di)
        else:
            raise DomainError(f"unknown phase rule {phase!r}")
        out.append(ReducedGradient(float(val), float(dphi), float(dI), noise))
    return tuple(out)


def circular_reduced(i, mu, sign=1, **kw):
    """Reduced potential of the circular problem (independent of phi)."""
    return compute_harmonics(i, mu, 0.0, **kw).reduced(0.0, sign)


@dataclass
class Bracket:
    value: float
    noise: float
    plus: ReducedGradient
    minus: ReducedGradient

    @property
    def below_noise(self):
        return abs(self.value) < 10.0 * self.noise


def transversality_bracket(phi, i, mu, eps, strict=False, **kw):
    """Poisson bracket {Lplus, Lminus} = dphi L+ dI L- - dI L+ dphi L-.

    The noise estimate propagates the per-derivative noise; with strict
    the call raises NoiseFloorError when the bracket is below 10x noise.
    """
    p, m = reduced_potentials(phi, i, mu, eps, **kw)
    val = p.d_phi * m.d_i - p.d_i * m.d_phi
    noise = (abs(p.d_phi) + abs(m.d_phi)) * max(p.noise, m.noise) \
        + (abs(p.d_i) + abs(m.d_i)) * max(p.noise, m.noise) + max(p.noise, m.noise) ** 2
    b = Bracket(float(val), float(noise), p, m)
    if strict and b.below_noise:
        raise NoiseFloorError("bracket below noise floor", signal=b.value, noise=b.noise)
    return b


# --------------------------------------------------------------------------
# coefficient integrals of the primaries' orbit

def coefficient_c(k, n, l, mu, eps, n_nodes=256):
    """((1-mu)^(k-1) - (-mu)^(k-1)) / (2 pi) * int_0^2pi rho^k e^{-i n f} e^{-i l t} dt.

    Evaluated in the eccentric anomaly (dt = rho dxi), where the integrand
    is a trigonometric polynomial-like smooth periodic function, with the
    trapezoid rule.  Returns a complex number.
    """
    if not (0.0 <= eps < 1.0):
        raise DomainError("eccentricity must lie in [0, 1)")
    xi = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    a2 = 0.5 * (1.0 + math.sqrt(1.0 - eps * eps))
    z = a2 * np.exp(1j * xi) - eps + eps * eps / (4.0 * a2) * np.exp(-1j * xi)
    rho = 1.0 - eps * np.cos(xi)
    t = xi - eps * np.sin(xi)
    # rho^k e^{-i n f} = rho^(k-n) conj(z)^n for n >= 0, rho^(k+n) z^(-n) otherwise
    if n >= 0:
        g = rho ** (k - n) * np.conj(z) ** n
    else:
        g = rho ** (k + n) * z ** (-n)
    integrand = g * np.exp(-1j * l * t) * rho
    mass = (1.0 - mu) ** (k - 1) - (-mu) ** (k - 1)
    return complex(mass * np.mean(integrand))


def coefficient_table(mu, eps, k_max=3, n_max=3, l_max=2):
    """Dictionary {(k, n, l): c} for 2 <= k <= k_max, |n| <= n_max, |l| <= l_max."""
    return {(k, n, l): coefficient_c(k, n, l, mu, eps)
            for k in range(2, k_max + 1)
            for n in range(-n_max, n_max + 1)
            for l in range(-l_max, l_max + 1)}


# --------------------------------------------------------------------------
# closed-form large-I laws, used for comparison

def mean_leading(i, mu):
    """Leading term mu (1-mu) pi / (2 I^3) of the theta-averaged zeroth harmonic."""
    return mu * (1.0 - mu) * math.pi / (2.0 * i ** 3)


def mean_multipole_series(i, mu, n_terms=8):
    """theta-averaged zeroth harmonic at eps = 0 from the multipole series.

    The t-average of the potential of two point masses on a circle is
    sum_n [C(2n, n)/4^n]^2 m_k a_k^(2n) / r^(2n+1); integrating r_h^-(2n+1)
    over the parabola uses int du / r_h^(2n+1) = 2^(2n) B(1/2, 2n - 1/2)... see
    _parabola_moment.
    """
    total = 0.0
    for n in range(1, n_terms + 1):
        cn = (math.comb(2 * n, n) / 4.0 ** n) ** 2
        mass = (1.0 - mu) * mu ** (2 * n) + mu * (1.0 - mu) ** (2 * n)
        total += cn * mass * i / i ** (4 * n) * _parabola_moment(2 * n + 1)
    return total


def _parabola_moment(p):
    """int_R du / r_h(u)^p with du = (1+tau^2)/2 dtau, r_h = (1+tau^2)/2."""
    # = 2^(p-1) int (1+tau^2)^(1-p) dtau = 2^(p-1) sqrt(pi) Gamma(p-3/2)/Gamma(p-1)
    return 2.0 ** (p - 1) * math.sqrt(math.pi) * math.gamma(p - 1.5) / math.gamma(p - 1)


def first_harmonic_leading(i, mu, eps=0.0):
    """Large-I modulus of L^[1] from the two leading exponentially small terms.

    mu (1-mu) |(1-2mu) sqrt(pi/(8I)) - 3 eps sqrt(2 pi I^3)| exp(-I^3/3) / 2
    for theta = 0 (the two terms carry theta-dependence exp(-i theta) and
    exp(-2 i theta) respectively).
    """
    a = (1.0 - 2.0 * mu) * math.sqrt(math.pi / (8.0 * i))
    b = -3.0 * eps * math.sqrt(2.0 * math.pi * i ** 3)
    return mu * (1.0 - mu) * abs(a + b) * math.exp(-i ** 3 / 3.0) / 2.0


def gradient_leading(phi, i, mu, eps):
    """Leading large-I gradients of the reduced potentials.

    Returns dict with keys dphi, dI (common part), dI_diff and dphi_diff
    (for Lplus - Lminus).
    """
    m = mu * (1.0 - mu)
    e = math.exp(-i ** 3 / 3.0)
    return dict(
        dphi=m * (1.0 - 2.0 * mu) * 15.0 * math.pi * eps / (8.0 * i ** 5) * math.sin(phi),
        dI=-m * 3.0 * math.pi / (2.0 * i ** 4),
        dI_diff=m * math.sqrt(math.pi * i ** 3 / 2.0) * (1.0 - 2.0 * mu) * e,
        dphi_diff=-m * eps * 6.0 * math.sqrt(2.0 * math.pi * i ** 3) * math.sin(phi) * e,
    )


# --------------------------------------------------------------------------
# tabulated reduced potentials

@dataclass
class ReducedMelnikov:
    """Reduced potentials on a window of I, spectral in phi and cubic in I.

    For each sign, Lsign(phi, I) = Re sum_j a_j(I) exp(i j phi) with the
    complex coefficients a_j held as cubic splines over i_nodes.  The
    piecewise-polynomial data (knots, coef) are exposed for compiled
    evaluation.

    Attributes
    ----------
    i_nodes : ndarray
        Interpolation nodes in I.
    j_values : ndarray of int
        Fourier indices in phi.
    knots : ndarray
        Spline breakpoints (equal to i_nodes).
    coef : ndarray, shape (2, 4, n_nodes - 1, 2 * n_j)
        Cubic pieces for sign +1 (index 0) and -1 (index 1); the last
        axis stacks real and imaginary parts of a_j.
    noise : float
        Largest quadrature-noise estimate of the tabulated values.
    """

    mu: float
    eps: float
    i_nodes: np.ndarray
    j_values: np.ndarray
    knots: np.ndarray
    coef: np.ndarray
    noise: float

    @property
    def window(self):
        return float(self.i_nodes[0]), float(self.i_nodes[-1])

    def _coeffs(self, i, sign, d_i=0):
        k = 0 if sign > 0 else 1
        idx = int(np.clip(np.searchsorted(self.knots, i) - 1, 0, len(self.knots) - 2))
        x = i - self.knots[idx]
        c = self.coef[k, :, idx, :]
        if d_i == 0:
            v = ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
        else:
            v = (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
        nj = len(self.j_values)
        return v[:nj] + 1j * v[nj:]

    def value(self, phi, i, sign):
        a = self._coeffs(i, sign)
        return float(np.real(np.sum(a * np.exp(1j * self.j_values * phi))))

    def gradient(self, phi, i, sign):
        """(d/dphi, d/dI) of the reduced potential of the given sign."""
        e = np.exp(1j * self.j_values * phi)
        a = self._coeffs(i, sign)
        da = self._coeffs(i, sign, d_i=1)
        return float(np.real(np.sum(1j * self.j_values * a * e))), float(np.real(np.sum(da * e)))

    def circular(self, i, sign):
        """phi-average of the reduced potential (the circular part when eps = 0)."""
        a = self._coeffs(i, sign)
        return float(np.real(a[self.j_values == 0][0]))

    def grid(self, n_phi=256, sign=1):
        """Values and gradient fields on a uniform phi grid times i_nodes.

        Returns (phi, values, d_phi, d_i), each field of shape (n_phi, n_nodes).
        """
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        out = np.zeros((3, n_phi, len(self.i_nodes)))
        for m, i in enumerate(self.i_nodes):
            for n, p in enumerate(phi):
                out[0, n, m] = self.value(p, i, sign)
                out[1:, n, m] = self.gradient(p, i, sign)
        return phi, out[0], out[1], out[2]


def reduced_table(mu, eps, i_lo, i_hi, n_i=64, **kw):
    """Build a ReducedMelnikov over [i_lo, i_hi] from n_i harmonic sets."""
    from scipy.interpolate import CubicSpline
    if i_hi <= i_lo:
        raise DomainError("empty I window")
    nodes = np.linspace(i_lo, i_hi, n_i)
    sets = [compute_harmonics(i, mu, eps, **kw) for i in nodes]
    n_j = max(h.coeffs.shape[1] for h in sets)
    j_vals = np.fft.fftfreq(n_j, 1.0 / n_j).astype(int)
    data = np.zeros((2, n_i, 2 * n_j))
    noise = 0.0
    for m, h in enumerate(sets):
        hj = h.j_values
        pos = np.searchsorted(np.sort(j_vals), hj)
        order = np.argsort(j_vals)
        target = order[pos]
        for k, sign in enumerate((1, -1)):
            w = np.array([1.0] + [2.0 * sign ** l for l in range(1, h.l_max + 1)])
            a = w @ h.coeffs
            data[k, m, target] = a.real
            data[k, m, n_j + target] = a.imag
        noise = max(noise, h.reduced_noise())
    coef = np.stack([CubicSpline(nodes, data[k], axis=0).c for k in range(2)])
    return ReducedMelnikov(mu, eps, nodes, j_vals, nodes.copy(), coef, noise)
