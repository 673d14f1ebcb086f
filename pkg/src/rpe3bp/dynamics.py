"""Equations of motion of the planar elliptic restricted problem.

The massless body feels V(q, t) = (1-mu)/|q - q0(t)| + mu/|q - q1(t)|
(attractive).  In polar coordinates with the time t promoted to an angle
and E its conjugate momentum the flow is generated by

    H = y^2/2 + G^2/(2 r^2) - V(r, alpha, t) + E,

and for eps = 0 the quantity y^2/2 + G^2/(2 r^2) - V - G (Jacobi) is
conserved.  Far from the primaries the radius is replaced by x with
r = 2/x^2, in which the escape manifold r = inf becomes x = 0.
"""
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import CollisionError, ConvergenceError, DomainError
from .primaries import PrimaryEphemeris

CHARTS = {"cartesian": K.CARTESIAN, "polar": K.POLAR, "mcgehee": K.MCGEHEE}
STATUS_NAMES = {
    K.STATUS_DONE: "done",
    K.STATUS_RMAX: "radius_reached",
    K.STATUS_APOCENTRE: "apocentre",
    K.STATUS_COLLISION: "collision",
    K.STATUS_UNDERFLOW: "step_underflow",
    K.STATUS_MAXSTEPS: "max_steps",
}


class PolarState(NamedTuple):
    r: float
    alpha: float
    t: float
    y: float
    G: float
    E: float


class McGeheeState(NamedTuple):
    x: float
    alpha: float
    t: float
    y: float
    G: float
    E: float


class CartesianState(NamedTuple):
    qx: float
    qy: float
    vx: float
    vy: float
    t: float
    E: float


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings of the adaptive integrator.

    chart selects the chart the run starts in; with auto_switch the polar
    and McGehee charts are exchanged at r_switch (with a relative
    hysteresis band).  r_stop > 0 ends the run once r >= r_stop.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_step: float = math.inf
    chart: str = "polar"
    r_switch: float = 50.0
    hysteresis: float = 0.1
    auto_switch: bool = True
    collision_floor: float = 1e-3
    r_stop: float = 0.0
    stop_at_apocentre: bool = False
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.chart not in CHARTS:
            raise DomainError(f"unknown chart {self.chart!r}")


# --------------------------------------------------------------------------
# potential and vector fields

def potential_polar(r, alpha, t, ephem):
    """V_pol with partials (V, dV/dr, dV/dalpha, dV/dt) at one point."""
    v, vr, va, vt, _, _ = K.vpol_grad(float(r), float(alpha), float(t), ephem.mu, ephem.eps)
    return v, vr, va, vt


def cartesian_rhs(q, v, t, ephem, collision_floor=0.0):
    """Acceleration of the massless body at position q and time t."""
    s = np.array([q[0], q[1], v[0], v[1], t, 0.0], dtype=float)
    out = np.empty(6)
    d = K.rhs(K.CARTESIAN, s, ephem.mu, ephem.eps, out)
    if d < collision_floor:
        raise CollisionError("position inside collision floor", state=s, time=t)
    return out[2:4].copy()


def polar_rhs(s, ephem, collision_floor=0.0):
    """Time derivative of a PolarState."""
    arr = np.asarray(s, dtype=float)
    out = np.empty(6)
    d = K.rhs(K.POLAR, arr, ephem.mu, ephem.eps, out)
    if d < collision_floor:
        raise CollisionError("position inside collision floor", state=arr, time=arr[2])
    return PolarState(*out)


def mcgehee_rhs(s, ephem):
    arr = np.asarray(s, dtype=float)
    out = np.empty(6)
    K.rhs(K.MCGEHEE, arr, ephem.mu, ephem.eps, out)
    return McGeheeState(*out)


# --------------------------------------------------------------------------
# chart changes and first integrals

def to_mcgehee(s):
    """PolarState -> McGeheeState (x = sqrt(2/r)); other components unchanged."""
    if s.r <= 0:
        raise DomainError("radius must be positive")
    return McGeheeState(math.sqrt(2.0 / s.r), s.alpha, s.t, s.y, s.G, s.E)


def from_mcgehee(m):
    if m.x <= 0:
        raise DomainError("x must be positive")
    return PolarState(2.0 / (m.x * m.x), m.alpha, m.t, m.y, m.G, m.E)


def polar_to_cartesian(s):
    ca, sa = math.cos(s.alpha), math.sin(s.alpha)
    vt = s.G / s.r
    return CartesianState(s.r * ca, s.r * sa, s.y * ca - vt * sa, s.y * sa + vt * ca, s.t, s.E)


def cartesian_to_polar(c):
    r = math.hypot(c.qx, c.qy)
    alpha = math.atan2(c.qy, c.qx)
    y = (c.qx * c.vx + c.qy * c.vy) / r
    G = c.qx * c.vy - c.qy * c.vx
    return PolarState(r, alpha, c.t, y, G, c.E)


def physical_energy(r, y, G, v):
    return 0.5 * y * y + 0.5 * G * G / (r * r) - v


def hamiltonian_pol(s, ephem):
    """Extended energy y^2/2 + G^2/(2r^2) - V_pol + E."""
    v = potential_polar(s.r, s.alpha, s.t, ephem)[0]
    return physical_energy(s.r, s.y, s.G, v) + s.E


def jacobi_constant(s, ephem):
    """Physical energy minus angular momentum; a first integral when eps = 0."""
    v = potential_polar(s.r, s.alpha, s.t, ephem)[0]
    return physical_energy(s.r, s.y, s.G, v) - s.G


def zero_energy_E(r, alpha, t, y, G, ephem):
    """The E that puts (r, alpha, t, y, G, E) on the level H_pol = 0."""
    v = potential_polar(r, alpha, t, ephem)[0]
    return -physical_energy(r, y, G, v)


def polar_state(r, alpha, t, y, G, ephem, E=None):
    """PolarState with E chosen so that H_pol = 0 unless given."""
    if E is None:
        E = zero_energy_E(r, alpha, t, y, G, ephem)
    return PolarState(float(r), float(alpha), float(t), float(y), float(G), float(E))


def _vectorised_diagnostics(states, ephem):
    r, alpha, t, y, G, E = (states[:, i] for i in range(6))
    v = np.empty(len(r))
    for k in range(len(r)):
        v[k] = K.vpol_grad(r[k], alpha[k], t[k], ephem.mu, ephem.eps)[0]
    h = 0.5 * y * y + 0.5 * G * G / (r * r) - v
    return h + E, h - G


# --------------------------------------------------------------------------
# integration

@dataclass
class Trajectory:
    """Sampled trajectory in polar form (cartesian runs are converted).

    states has columns (r, alpha, t, y, G, E); charts records the chart the
    integrator was in at each sample.
    """

    times: np.ndarray
    states: np.ndarray
    charts: np.ndarray
    status: str
    ephem: PrimaryEphemeris
    n_steps: int = 0
    n_rejected: int = 0
    n_fev: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self):
        return PolarState(*self.states[-1])

    def column(self, name):
        return self.states[:, PolarState._fields.index(name)]


def _as_native(s0, chart):
    """Return (chart_id, array) for an input state in any representation."""
    if isinstance(s0, CartesianState):
        return K.CARTESIAN, np.array(s0, dtype=float)
    if isinstance(s0, McGeheeState):
        if chart == "mcgehee":
            return K.MCGEHEE, np.array(s0, dtype=float)
        s0 = from_mcgehee(s0)
    if isinstance(s0, PolarState) or len(s0) == 6:
        s0 = PolarState(*[float(v) for v in s0])
        if chart == "cartesian":
            return K.CARTESIAN, np.array(polar_to_cartesian(s0), dtype=float)
        if chart == "mcgehee":
            return K.MCGEHEE, np.array(to_mcgehee(s0), dtype=float)
        return K.POLAR, np.array(s0, dtype=float)
    raise DomainError("unrecognised state")


def integrate(s0, t_span, ephem, cfg=None, t_eval=None, store_steps=True, raise_on_collision=False):
    """Integrate a state over t_span = (t0, t1).

    Parameters
    ----------
    s0 : PolarState, McGeheeState or CartesianState
        Initial condition.  Its time component must equal t0.
    t_span : pair of floats
        Start and end time; t1 < t0 integrates backwards.
    ephem : PrimaryEphemeris
    cfg : IntegratorConfig, optional
    t_eval : array, optional
        Output times; they are hit exactly by clipping steps.
    store_steps : bool
        Keep every accepted step when t_eval is not given.

    Returns
    -------
    Trajectory
        Samples in polar form, with diagnostics: the largest deviation of
        H_pol and (for eps = 0) of the Jacobi constant from their initial
        values.
    """
    cfg = cfg or IntegratorConfig()
    chart_id, y0 = _as_native(s0, cfg.chart)
    t0, t1 = float(t_span[0]), float(t_span[1])
    clock = y0[4] if chart_id == K.CARTESIAN else y0[2]
    if abs(clock - t0) > 1e-12 * max(1.0, abs(t0)):
        raise DomainError("state time component must equal t_span[0]")
    if t_eval is None:
        te = np.empty(0)
    else:
        te = np.asarray(t_eval, dtype=float)
        if len(te) and np.any(np.diff(te) * np.sign(t1 - t0) <= 0):
            raise DomainError("t_eval must be strictly monotone in the integration direction")
    auto = cfg.auto_switch and chart_id != K.CARTESIAN
    times, states, charts, status, nacc, nrej, nfev, _, _ = K.integrate_kernel(
        chart_id, y0, t0, t1, ephem.mu, ephem.eps, cfg.rel_tol, cfg.abs_tol,
        cfg.max_step, auto, cfg.r_switch, cfg.hysteresis, cfg.r_stop,
        cfg.collision_floor, cfg.stop_at_apocentre, te, store_steps, cfg.max_steps)
    if chart_id == K.CARTESIAN:
        states = np.array([cartesian_to_polar(CartesianState(*row)) for row in states])
        # keep alpha continuous
        states[:, 1] = np.unwrap(states[:, 1])
    traj = Trajectory(times, states, charts, STATUS_NAMES[status], ephem, nacc, nrej, nfev)
    hp, jac = _vectorised_diagnostics(states, ephem)
    traj.diagnostics["max_dH"] = float(np.max(np.abs(hp - hp[0])))
    if ephem.eps == 0.0:
        traj.diagnostics["max_dJ"] = float(np.max(np.abs(jac - jac[0])))
    traj.diagnostics["H_pol"] = hp
    traj.diagnostics["jacobi"] = jac
    if status == K.STATUS_COLLISION and raise_on_collision:
        raise CollisionError("collision floor crossed", state=states[-1], time=times[-1])
    if status in (K.STATUS_UNDERFLOW,):
        raise ConvergenceError("integrator step size underflow", estimate=traj)
    return traj


def time_reversed(s):
    """Image under the reversing symmetry (alpha, t, y) -> (-alpha, -t, -y).

    If s(tau) solves the polar equations so does time_reversed(s(-tau)),
    for every eccentricity, because V(r, -alpha, -t) = V(r, alpha, t).
    """
    return PolarState(s.r, -s.alpha, -s.t, -s.y, s.G, s.E)
