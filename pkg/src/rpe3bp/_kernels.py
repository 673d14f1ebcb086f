"""Compiled inner loops: anomalies, potential gradients, vector fields and
an adaptive Dormand-Prince 8(5,3) integrator.

Charts
------
0  cartesian  (qx, qy, vx, vy, t, E)
1  polar      (r, alpha, t, y, G, E)
2  mcgehee    (x, alpha, t, y, G, E) with r = 2/x^2

The time variable t is carried in the state; the integration variable is
the same time, so state[2] (state[4] in cartesian) equals the clock.
"""
import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

CARTESIAN = 0
POLAR = 1
MCGEHEE = 2

N_STAGES = _dop.N_STAGES
A_TAB = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B_TAB = np.ascontiguousarray(_dop.B)
C_TAB = np.ascontiguousarray(_dop.C[:N_STAGES])
E3_TAB = np.ascontiguousarray(_dop.E3)
E5_TAB = np.ascontiguousarray(_dop.E5)

STATUS_DONE = 0
STATUS_RMAX = 1
STATUS_APOCENTRE = 2
STATUS_COLLISION = -1
STATUS_UNDERFLOW = -2
STATUS_MAXSTEPS = -3

TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def kepler_xi(t, eps):
    if eps == 0.0:
        return t
    turns = math.floor(t / TWO_PI)
    m = t - TWO_PI * turns
    xi = m + eps * math.sin(m)
    for _ in range(60):
        res = xi - eps * math.sin(xi) - m
        d = 1.0 - eps * math.cos(xi)
        step = res / d
        xi -= step
        if abs(step) < 1e-16:
            break
    return xi + TWO_PI * turns


@njit(cache=True, nogil=True)
def anomalies(t, eps):
    """Return (f, rho, df/dt, drho/dt)."""
    if eps == 0.0:
        return t, 1.0, 1.0, 0.0
    xi = kepler_xi(t, eps)
    cx = math.cos(xi)
    sx = math.sin(xi)
    rho = 1.0 - eps * cx
    s = math.sqrt(1.0 - eps * eps)
    f = math.atan2(s * sx, cx - eps)
    f += TWO_PI * math.floor((xi - f) / TWO_PI + 0.5)
    fdot = s / (rho * rho)
    rhodot = eps * sx / rho
    return f, rho, fdot, rhodot


@njit(cache=True, nogil=True)
def vpol_grad(r, alpha, t, mu, eps):
    """V_pol and its partials in (r, alpha, t), plus distances to primaries.

    V_pol = (1-mu)/d0 + mu/d1 with d0, d1 the distances to the heavy and
    light primary.
    """
    f, rho, fdot, rhodot = anomalies(t, eps)
    psi = alpha - f
    c = math.cos(psi)
    s = math.sin(psi)
    nu = 1.0 - mu
    d0sq = r * r - 2.0 * mu * rho * r * c + mu * mu * rho * rho
    d1sq = r * r + 2.0 * nu * rho * r * c + nu * nu * rho * rho
    d0 = math.sqrt(d0sq)
    d1 = math.sqrt(d1sq)
    i0 = 1.0 / (d0sq * d0)
    i1 = 1.0 / (d1sq * d1)
    v = nu / d0 + mu / d1
    vr = -nu * (r - mu * rho * c) * i0 - mu * (r + nu * rho * c) * i1
    va = mu * nu * rho * r * s * (i1 - i0)
    vrho = mu * nu * ((r * c - mu * rho) * i0 - (r * c + nu * rho) * i1)
    vt = rhodot * vrho - fdot * va
    return v, vr, va, vt, d0, d1


@njit(cache=True, nogil=True)
def rhs(chart, s, mu, eps, out):
    if chart == CARTESIAN:
        qx = s[0]
        qy = s[1]
        t = s[4]
        f, rho, fdot, rhodot = anomalies(t, eps)
        cf = math.cos(f)
        sf = math.sin(f)
        q0x = mu * rho * cf
        q0y = mu * rho * sf
        q1x = -(1.0 - mu) * rho * cf
        q1y = -(1.0 - mu) * rho * sf
        dx0 = q0x - qx
        dy0 = q0y - qy
        dx1 = q1x - qx
        dy1 = q1y - qy
        r0 = math.sqrt(dx0 * dx0 + dy0 * dy0)
        r1 = math.sqrt(dx1 * dx1 + dy1 * dy1)
        w0 = (1.0 - mu) / (r0 * r0 * r0)
        w1 = mu / (r1 * r1 * r1) if mu > 0.0 else 0.0
        out[0] = s[2]
        out[1] = s[3]
        out[2] = w0 * dx0 + w1 * dx1
        out[3] = w0 * dy0 + w1 * dy1
        out[4] = 1.0
        # dV/dt = grad_{q0} V . dq0/dt + grad_{q1} V . dq1/dt
        dux = -sf * fdot * rho + cf * rhodot
        duy = cf * fdot * rho + sf * rhodot
        # grad wrt q_k of m_k/|q-q_k| is -m_k (q_k - q)/|q-q_k|^3
        out[5] = -(w0 * dx0 * mu * dux + w0 * dy0 * mu * duy) \
            + (w1 * dx1 * (1.0 - mu) * dux + w1 * dy1 * (1.0 - mu) * duy)
        return min(r0, r1)
    if chart == POLAR:
        r = s[0]
    else:
        x = s[0]
        r = 2.0 / (x * x)
    alpha = s[1]
    t = s[2]
    y = s[3]
    G = s[4]
    v, vr, va, vt, d0, d1 = vpol_grad(r, alpha, t, mu, eps)
    if chart == POLAR:
        out[0] = y
    else:
        out[0] = -x * x * x * y / 4.0
    out[1] = G / (r * r)
    out[2] = 1.0
    out[3] = G * G / (r * r * r) + vr
    out[4] = va
    out[5] = vt
    if mu == 0.0:
        return d0
    return min(d0, d1)


@njit(cache=True, nogil=True)
def _error_norm(K, h, y, y_new, rtol, atol):
    n = y.shape[0]
    e5 = 0.0
    e3 = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        a5 = 0.0
        a3 = 0.0
        for j in range(N_STAGES + 1):
            a5 += K[j, i] * E5_TAB[j]
            a3 += K[j, i] * E3_TAB[j]
        a5 /= sc
        a3 /= sc
        e5 += a5 * a5
        e3 += a3 * a3
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    denom = e5 + 0.01 * e3
    return abs(h) * e5 / math.sqrt(denom * n)


@njit(cache=True, nogil=True)
def _rk_step(chart, t, y, f0, h, mu, eps, K, ytmp, y_new):
    n = y.shape[0]
    for i in range(n):
        K[0, i] = f0[i]
    dmin = 1e300
    for st in range(1, N_STAGES):
        for i in range(n):
            acc = 0.0
            for j in range(st):
                acc += A_TAB[st, j] * K[j, i]
            ytmp[i] = y[i] + h * acc
        kk = K[st]
        d = rhs(chart, ytmp, mu, eps, kk)
        if d < dmin:
            dmin = d
    for i in range(n):
        acc = 0.0
        for j in range(N_STAGES):
            acc += B_TAB[j] * K[j, i]
        y_new[i] = y[i] + h * acc
    d = rhs(chart, y_new, mu, eps, K[N_STAGES])
    if d < dmin:
        dmin = d
    return dmin


@njit(cache=True, nogil=True)
def convert_chart(src, dst, s, out):
    """Convert between polar (1) and mcgehee (2) charts."""
    for i in range(6):
        out[i] = s[i]
    if src == dst:
        return
    if src == POLAR and dst == MCGEHEE:
        out[0] = math.sqrt(2.0 / s[0])
    elif src == MCGEHEE and dst == POLAR:
        out[0] = 2.0 / (s[0] * s[0])


@njit(cache=True, nogil=True)
def _radius(chart, s):
    if chart == CARTESIAN:
        return math.sqrt(s[0] * s[0] + s[1] * s[1])
    if chart == POLAR:
        return s[0]
    return 2.0 / (s[0] * s[0])


@njit(cache=True, nogil=True)
def _radial_velocity(chart, s):
    if chart == CARTESIAN:
        r = math.sqrt(s[0] * s[0] + s[1] * s[1])
        return (s[0] * s[2] + s[1] * s[3]) / r
    return s[3]


@njit(cache=True, nogil=True)
def _initial_step(chart, t0, y0, f0, direction, mu, eps, rtol, atol, max_step):
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + abs(y0[i]) * rtol
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + h0 * direction * f0
    f1 = np.empty(n)
    rhs(chart, y1, mu, eps, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + abs(y0[i]) * rtol
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = math.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1, max_step)


@njit(cache=True, nogil=True)
def integrate_kernel(chart0, y0, t0, t1, mu, eps, rtol, atol, max_step,
                     auto_switch, r_switch, hysteresis, r_stop, collision_floor,
                     stop_at_apocentre, t_eval, store_steps, max_steps):
    """Integrate from t0 towards t1.

    Returns (times, states, charts, status, n_accepted, n_rejected, n_fev,
    final_state, final_chart).  States are stored in polar form for the
    polar/mcgehee charts and in cartesian form otherwise.  When t_eval is
    non-empty only those times (hit exactly by step clipping) and the final
    point are stored; otherwise every accepted step is stored if
    store_steps is true.
    """
    n = 6
    direction = 1.0 if t1 >= t0 else -1.0
    chart = chart0
    y = y0.copy()
    t = t0
    K = np.empty((N_STAGES + 1, n))
    ytmp = np.empty(n)
    y_new = np.empty(n)
    f0 = np.empty(n)
    conv = np.empty(n)
    rhs(chart, y, mu, eps, f0)
    nfev = 1

    cap = 1024
    times = np.empty(cap)
    states = np.empty((cap, n))
    charts = np.empty(cap, dtype=np.int64)
    nstore = 0

    n_eval = t_eval.shape[0]
    i_eval = 0
    # store the initial point
    if n_eval == 0 or (n_eval > 0 and t_eval[0] == t0):
        times[0] = t
        if chart == MCGEHEE:
            convert_chart(MCGEHEE, POLAR, y, conv)
            states[0] = conv
        else:
            states[0] = y
        charts[0] = chart
        nstore = 1
        if n_eval > 0:
            i_eval = 1

    h_abs = _initial_step(chart, t, y, f0, direction, mu, eps, rtol, atol, max_step)
    status = STATUS_DONE
    n_acc = 0
    n_rej = 0
    r_prev_dot = _radial_velocity(chart, y)
    finished = False
    while not finished:
        if n_acc >= max_steps:
            status = STATUS_MAXSTEPS
            break
        # step target: next t_eval or t1
        t_target = t1
        if n_eval > 0 and i_eval < n_eval:
            t_target = t_eval[i_eval]
        min_step = 10.0 * (abs(t) * 2.220446049250313e-16 + 1e-300)
        h_abs = min(h_abs, max_step)
        if h_abs < min_step:
            status = STATUS_UNDERFLOW
            break
        accepted = False
        hit = False
        dmin = 1e300
        while not accepted:
            h = h_abs * direction
            t_new = t + h
            hit = False
            if direction * (t_new - t_target) >= 0.0:
                t_new = t_target
                hit = True
            h = t_new - t
            h_abs = abs(h)
            dmin = _rk_step(chart, t, y, f0, h, mu, eps, K, ytmp, y_new)
            nfev += N_STAGES
            err = _error_norm(K, h, y, y_new, rtol, atol)
            if err < 1.0:
                if err == 0.0:
                    factor = 10.0
                else:
                    factor = min(10.0, 0.9 * err ** (-1.0 / 8.0))
                accepted = True
                h_next = h_abs * factor
            else:
                factor = max(0.2, 0.9 * err ** (-1.0 / 8.0))
                h_abs *= factor
                n_rej += 1
                if h_abs < min_step:
                    break
        if not accepted:
            status = STATUS_UNDERFLOW
            break
        n_acc += 1
        t = t_new
        for i in range(n):
            y[i] = y_new[i]
            f0[i] = K[N_STAGES, i]
        h_abs = h_next
        if dmin < collision_floor:
            status = STATUS_COLLISION
            finished = True
        r_now = _radius(chart, y)
        rdot = _radial_velocity(chart, y)
        if r_stop > 0.0 and r_now >= r_stop:
            status = STATUS_RMAX
            finished = True
        if stop_at_apocentre and direction * r_prev_dot > 0.0 and direction * rdot <= 0.0:
            status = STATUS_APOCENTRE
            finished = True
        r_prev_dot = rdot
        if hit and t == t1:
            finished = True
        store = False
        if n_eval > 0:
            if hit and i_eval < n_eval and t == t_eval[i_eval]:
                store = True
                i_eval += 1
            if finished:
                store = True
        elif store_steps or finished:
            store = True
        if store:
            if nstore >= cap:
                cap2 = 2 * cap
                times2 = np.empty(cap2)
                states2 = np.empty((cap2, n))
                charts2 = np.empty(cap2, dtype=np.int64)
                times2[:cap] = times
                states2[:cap] = states
                charts2[:cap] = charts
                times = times2
                states = states2
                charts = charts2
                cap = cap2
            times[nstore] = t
            if chart == MCGEHEE:
                convert_chart(MCGEHEE, POLAR, y, conv)
                states[nstore] = conv
            else:
                states[nstore] = y
            charts[nstore] = chart
            nstore += 1
        if auto_switch and not finished:
            if chart == POLAR and y[0] > r_switch * (1.0 + hysteresis):
                convert_chart(POLAR, MCGEHEE, y, conv)
                y[:] = conv
                chart = MCGEHEE
                rhs(chart, y, mu, eps, f0)
                nfev += 1
            elif chart == MCGEHEE and 2.0 / (y[0] * y[0]) < r_switch * (1.0 - hysteresis):
                convert_chart(MCGEHEE, POLAR, y, conv)
                y[:] = conv
                chart = POLAR
                rhs(chart, y, mu, eps, f0)
                nfev += 1
    if not finished and nstore > 0 and times[nstore - 1] != t:
        if nstore >= cap:
            cap2 = cap + 1
            times2 = np.empty(cap2)
            states2 = np.empty((cap2, n))
            charts2 = np.empty(cap2, dtype=np.int64)
            times2[:cap] = times
            states2[:cap] = states
            charts2[:cap] = charts
            times = times2
            states = states2
            charts = charts2
        times[nstore] = t
        if chart == MCGEHEE:
            convert_chart(MCGEHEE, POLAR, y, conv)
            states[nstore] = conv
        else:
            states[nstore] = y
        charts[nstore] = chart
        nstore += 1
    return (times[:nstore].copy(), states[:nstore].copy(), charts[:nstore].copy(),
            status, n_acc, n_rej, nfev, y, chart)
