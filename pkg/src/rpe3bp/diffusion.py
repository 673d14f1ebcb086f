"""Iterated function system of the two scattering maps.

Drift chains are sequences z_{k+1} = P_{s_k}(z_k) of cylinder points with
s_k in {+, -}.  A greedy planner picks at every step the map that moves I
furthest towards the target; the controls iterate a single map, for which
I stays close to a level curve of that map's generating potential.

Map evaluations go through a compiled kernel that reads the spline data of
a ReducedMelnikov table, so chains of millions of steps are cheap.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DomainError, StripExitError
from .scattering import CylinderPoint, ScatteringModel

SCHEMA = "rpe3bp.pseudo_orbit"
SCHEMA_VERSION = 1

STATUS_REACHED = 0
STATUS_BUDGET = 1
STATUS_STRIP = 2
STATUS_NAMES = {STATUS_REACHED: "reached", STATUS_BUDGET: "budget_exhausted",
                STATUS_STRIP: "strip_exit"}


@njit(cache=True)
def _gradient(phi, i, k, knots, coef, jv):
    """(dphi, dI) of the reduced potential k (0: +, 1: -) from spline data."""
    n = knots.shape[0]
    lo = 0
    hi = n - 2
    # binary search for the piece containing i (clamped)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if knots[mid] <= i:
            lo = mid
        else:
            hi = mid - 1
    x = i - knots[lo]
    nj = jv.shape[0]
    dphi = 0.0
    di = 0.0
    for m in range(nj):
        j = jv[m]
        a0 = coef[k, 0, lo, m]
        a1 = coef[k, 1, lo, m]
        a2 = coef[k, 2, lo, m]
        a3 = coef[k, 3, lo, m]
        b0 = coef[k, 0, lo, nj + m]
        b1 = coef[k, 1, lo, nj + m]
        b2 = coef[k, 2, lo, nj + m]
        b3 = coef[k, 3, lo, nj + m]
        ar = ((a0 * x + a1) * x + a2) * x + a3
        ai = ((b0 * x + b1) * x + b2) * x + b3
        dar = (3.0 * a0 * x + 2.0 * a1) * x + a2
        dai = (3.0 * b0 * x + 2.0 * b1) * x + b2
        cj = math.cos(j * phi)
        sj = math.sin(j * phi)
        dphi += -j * (ar * sj + ai * cj)
        di += dar * cj - dai * sj
    return dphi, di


@njit(cache=True)
def _step(phi, i, k, knots, coef, jv):
    dphi, di = _gradient(phi, i, k, knots, coef, jv)
    return phi - di, i + dphi


@njit(cache=True)
def _greedy_kernel(phi0, i0, target, max_steps, lo, hi, knots, coef, jv, signs, phis, ivals):
    """Greedy chain; returns (n_steps, status, evaluations)."""
    climbing = target >= i0
    phi = phi0
    i = i0
    phis[0] = phi
    ivals[0] = i
    last = 1
    evals = 0
    for n in range(max_steps):
        if (climbing and i >= target) or ((not climbing) and i <= target):
            return n, 0, evals
        pp, ip = _step(phi, i, 0, knots, coef, jv)
        pm, im = _step(phi, i, 1, knots, coef, jv)
        evals += 2
        if ip == im:
            k = 1 - last
        elif (ip > im) == climbing:
            k = 0
        else:
            k = 1
        if k == 0:
            phi, i = pp, ip
        else:
            phi, i = pm, im
        last = k
        signs[n] = 1 if k == 0 else -1
        phis[n + 1] = phi
        ivals[n + 1] = i
        if i < lo or i > hi:
            return n + 1, 2, evals
    if (climbing and i >= target) or ((not climbing) and i <= target):
        return max_steps, 0, evals
    return max_steps, 1, evals


@njit(cache=True)
def _single_kernel(phi0, i0, k, n_steps, lo, hi, band, knots, coef, jv, keep, ivals):
    """Iterate one map; returns (steps done, max excursion, returns, status)."""
    phi = phi0
    i = i0
    worst = 0.0
    returns = 0
    outside = False
    for n in range(n_steps):
        phi, i = _step(phi, i, k, knots, coef, jv)
        d = abs(i - i0)
        if d > worst:
            worst = d
        if d >= band:
            outside = True
        elif outside:
            returns += 1
            outside = False
        if keep:
            ivals[n] = i
        if i < lo or i > hi:
            return n + 1, worst, returns, 2
    return n_steps, worst, returns, 0


@dataclass
class DriftChain:
    """Chain of cylinder points and the signs of the maps joining them.

    points has one more row than signs; columns are (phi, I).
    """

    signs: np.ndarray
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.signs)

    @property
    def start(self):
        return CylinderPoint(*(float(v) for v in self.points[0]))

    @property
    def end(self):
        return CylinderPoint(*(float(v) for v in self.points[-1]))

    @property
    def status(self):
        return self.meta.get("status")

    @property
    def succeeded(self):
        return self.meta.get("status") == "reached"

    def __eq__(self, other):
        return (isinstance(other, DriftChain) and np.array_equal(self.signs, other.signs)
                and np.array_equal(self.points, other.points) and self.meta == other.meta)


def _table_arrays(model):
    if model.mode != "melnikov":
        raise DomainError("compiled iteration needs a melnikov-mode model")
    t = model.table
    return t.knots, np.ascontiguousarray(t.coef), t.j_values.astype(np.float64)


def plan_drift(start, i_target, model, budget):
    """Greedy drift chain from start towards I = i_target.

    Parameters
    ----------
    start : CylinderPoint
    i_target : float
    model : ScatteringModel in melnikov mode (table-backed) or shooting mode
        (short chains only).
    budget : int
        Maximum number of map evaluations (two per step).

    Returns
    -------
    DriftChain with meta['status'] one of 'reached', 'budget_exhausted',
    'no_drift' (mu = 0, both maps are the identity).  Leaving the strip
    raises StripExitError carrying the chain so far.
    """
    lo, hi = model.strip
    for v in (start.i, i_target):
        if not (lo <= v <= hi):
            raise StripExitError(f"I = {v} outside the strip [{lo}, {hi}]", chain=None)
    meta = dict(mu=model.mu, eps=model.eps, mode=model.mode, i_target=float(i_target),
                budget=int(budget), strip=[float(lo), float(hi)])
    if model.mu == 0:
        meta.update(status="no_drift", evaluations=0)
        return DriftChain(np.zeros(0, dtype=np.int8), np.array([[start.phi, start.i]]), meta)
    max_steps = int(budget) // 2
    if model.mode == "shooting":
        return _plan_python(start, i_target, model, max_steps, meta)
    knots, coef, jv = _table_arrays(model)
    signs = np.zeros(max_steps, dtype=np.int8)
    phis = np.zeros(max_steps + 1)
    ivals = np.zeros(max_steps + 1)
    n, status, evals = _greedy_kernel(float(start.phi), float(start.i), float(i_target),
                                      max_steps, lo, hi, knots, coef, jv, signs, phis, ivals)
    model.evaluations += evals
    meta.update(status=STATUS_NAMES[status], evaluations=int(evals))
    chain = DriftChain(signs[:n].copy(), np.c_[phis[:n + 1], ivals[:n + 1]], meta)
    if status == STATUS_STRIP:
        raise StripExitError("chain left the strip", chain=chain)
    return chain


def _plan_python(start, i_target, model, max_steps, meta):
    climbing = i_target >= start.i
    p = start
    signs, pts = [], [tuple(p)]
    last = -1
    evals = 0
    status = "budget_exhausted"
    for _ in range(max_steps):
        if (p.i >= i_target) if climbing else (p.i <= i_target):
            status = "reached"
            break
        a = model.apply(p, 1)
        b = model.apply(p, -1)
        evals += 2
        if a.i == b.i:
            s = -last
        else:
            s = 1 if (a.i > b.i) == climbing else -1
        p = a if s == 1 else b
        last = s
        signs.append(s)
        pts.append(tuple(p))
    else:
        if (p.i >= i_target) if climbing else (p.i <= i_target):
            status = "reached"
    meta.update(status=status, evaluations=evals)
    return DriftChain(np.array(signs, dtype=np.int8), np.array(pts, dtype=float), meta)


@dataclass
class ControlResult:
    max_excursion: float
    returns: int
    steps: int
    i_values: np.ndarray = None


def single_map_control(start, sign, n_steps, model, band=1e-3, keep=False):
    """Iterate one scattering map from start.

    Reports the largest |I - I0| along the orbit and the number of times
    the orbit re-enters the band |I - I0| < band after leaving it.
    """
    if model.mode != "melnikov":
        raise DomainError("controls run on the melnikov model")
    lo, hi = model.strip
    if model.mu == 0:
        return ControlResult(0.0, 0, int(n_steps), np.full(n_steps, start.i) if keep else None)
    knots, coef, jv = _table_arrays(model)
    k = 0 if sign in (1, "+") else 1
    ivals = np.zeros(n_steps if keep else 1)
    n, worst, ret, status = _single_kernel(float(start.phi), float(start.i), k, int(n_steps),
                                           lo, hi, band, knots, coef, jv, keep, ivals)
    model.evaluations += n
    if status == STATUS_STRIP:
        raise StripExitError("single-map orbit left the strip", chain=None)
    return ControlResult(float(worst), int(ret), int(n), ivals[:n] if keep else None)


def replay(chain, model):
    """Recompute a chain from its first point and signs with the compiled kernel."""
    knots, coef, jv = _table_arrays(model)
    pts = np.empty_like(chain.points)
    pts[0] = chain.points[0]
    phi, i = pts[0]
    for n, s in enumerate(chain.signs):
        phi, i = _step(phi, i, 0 if s > 0 else 1, knots, coef, jv)
        pts[n + 1] = (phi, i)
    return pts


def drift_rate(chain):
    """Net I change per map evaluation."""
    ev = chain.meta.get("evaluations", 0)
    return (chain.points[-1, 1] - chain.points[0, 1]) / ev if ev else 0.0


def smoothed_i(chain, window):
    """Moving average of I over window consecutive steps."""
    i = chain.points[:, 1]
    if len(i) < window:
        return i.copy()
    c = np.cumsum(np.r_[0.0, i])
    return (c[window:] - c[:-window]) / window


def circulation_steps(chain):
    """Typical number of steps for phi to advance by 2 pi along the chain."""
    phi = chain.points[:, 0]
    if len(phi) < 2:
        return 0
    adv = np.mean(np.abs(np.diff(phi)))
    return int(math.ceil(2.0 * math.pi / adv)) if adv > 0 else len(phi)


# --------------------------------------------------------------------------
# pseudo-orbit files

def export_pseudo_orbit(chain, path):
    """Write the chain as JSON: a header with schema, version and metadata,
    then the ordered records [sign, phi, I] (the first record, the start,
    has sign 0)."""
    signs = np.r_[0, chain.signs.astype(int)]
    records = [[int(s), float(p), float(i)] for s, (p, i) in zip(signs, chain.points)]
    if len(chain.points) == 0:
        records = []
    doc = dict(schema=SCHEMA, version=SCHEMA_VERSION, meta=chain.meta, records=records)
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
    return path


def load_pseudo_orbit(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA:
        raise DomainError(f"{path}: not a pseudo-orbit file")
    if doc.get("version") != SCHEMA_VERSION:
        raise DomainError(f"{path}: unsupported schema version {doc.get('version')}")
    rec = doc["records"]
    if not rec:
        return DriftChain(np.zeros(0, dtype=np.int8), np.zeros((0, 2)), doc["meta"])
    arr = np.array([r[1:] for r in rec], dtype=float)
    signs = np.array([r[0] for r in rec[1:]], dtype=np.int8)
    return DriftChain(signs, arr, doc["meta"])


def empty_chain(meta=None):
    return DriftChain(np.zeros(0, dtype=np.int8), np.zeros((0, 2)), dict(meta or {}))


def model_for_window(mu, eps, i_lo, i_hi, n_i=64):
    """Table-backed ScatteringModel with the strip set to [i_lo, i_hi]."""
    return ScatteringModel.from_window(mu, eps, i_lo, i_hi, n_i)
