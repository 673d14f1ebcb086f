"""Command-line front end.

    rpe3bp <group> <action> [options]

Every option may also come from a TOML or JSON file given with --config.
Keys are option names (dashes or underscores); they may sit at top level,
under a [group] table or under a [group.action] table, the more specific
one winning.  Explicit flags win over the file.

Outputs (CSV or JSON) carry the fully merged configuration in a header so
that each file can be regenerated from its own contents.  Exit status is 0
on success, 2 for invalid input and 3 when a numerical procedure fails.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diffusion as dif
from . import dynamics as dyn
from . import melnikov as mel
from . import perturbation as pert
from . import scattering as sc
from . import svg
from .errors import CollisionError, ConvergenceError, DomainError, NoiseFloorError, StripExitError
from .primaries import PrimaryEphemeris

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
TWO_PI = 2.0 * math.pi


def worker_count():
    """Worker cap from RPE3BP_THREADS (default: CPU count)."""
    env = os.environ.get("RPE3BP_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, int(env))
        except ValueError:
            raise DomainError(f"RPE3BP_THREADS must be a positive integer, got {env!r}")
    return n


def _apply_thread_cap(n):
    if "RPE3BP_THREADS" not in os.environ:
        return
    import numba
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
        except Exception:
            pass


# --------------------------------------------------------------------------
# option tables: name -> (type, default, help)

COMMON_PHYS = dict(
    mu=(float, 0.3, "mass ratio, in (0, 1/2]"),
    eps=(float, 0.0, "eccentricity of the primaries, in [0, 1)"),
)
STRIP = dict(
    i_lo=(float, None, "lower edge of the angular-momentum strip"),
    i_hi=(float, None, "upper edge of the angular-momentum strip"),
)

COMMANDS = {
    ("primaries", "table"): dict(
        help="anomalies and positions of the primaries",
        opts=dict(**COMMON_PHYS, t0=(float, 0.0, "first time"), t1=(float, TWO_PI, "last time"),
                  n=(int, 65, "number of samples"))),
    ("orbit", "integrate"): dict(
        help="integrate the polar equations from an initial state",
        opts=dict(**COMMON_PHYS, r=(float, 10.0, "initial radius"), alpha=(float, 0.0, "initial angle"),
                  t0=(float, 0.0, "initial time"), y=(float, -0.3, "initial radial momentum"),
                  G=(float, 2.0, "initial angular momentum"), t1=(float, 100.0, "final time"),
                  n_out=(int, 101, "number of output samples"),
                  rtol=(float, 1e-12, "relative tolerance"), atol=(float, 1e-14, "absolute tolerance"),
                  chart=(str, "polar", "starting chart: polar, mcgehee or cartesian"))),
    ("potential", "profile"): dict(
        help="perturbative potential along the parabolic orbit",
        opts=dict(**COMMON_PHYS, i=(float, 3.0, "angular momentum I"), beta=(float, 0.0, "orbit angle"),
                  t=(float, 0.0, "mean anomaly at pericentre"), u_min=(float, -5.0, "first u"),
                  u_max=(float, 5.0, "last u"), n=(int, 201, "number of samples"))),
    ("melnikov", "eval"): dict(
        help="Melnikov potential at a point or on a (sigma, theta) grid",
        opts=dict(**COMMON_PHYS, i=(float, 3.0, "angular momentum I"),
                  sigma=(float, None, "pericentre phase (point mode)"),
                  theta=(float, None, "orbit phase (point mode)"),
                  n_sigma=(int, 32, "grid size in sigma"), n_theta=(int, 32, "grid size in theta"))),
    ("melnikov", "harmonics"): dict(
        help="sigma-harmonics L^[l](theta)",
        opts=dict(**COMMON_PHYS, i=(float, 3.0, "angular momentum I"), lmax=(int, 2, "highest harmonic"),
                  theta=(float, 0.0, "orbit phase"), n_theta=(int, None, "uniform theta grid instead"),
                  precision=(str, "double", "double or extended"),
                  dps=(int, 40, "decimal digits for extended precision"))),
    ("melnikov", "reduced"): dict(
        help="reduced potentials and their gradients along phi",
        opts=dict(**COMMON_PHYS, i=(float, 3.0, "angular momentum I"), n_phi=(int, 64, "phi samples"),
                  phase=(str, "fixed", "fixed or critical"),
                  precision=(str, "double", "double only for this action"))),
    ("melnikov", "bracket"): dict(
        help="Poisson bracket of the reduced potentials",
        opts=dict(**COMMON_PHYS, i=(float, 3.0, "angular momentum I"), phi=(float, math.pi / 4, "phase"),
                  phase=(str, "fixed", "fixed or critical"),
                  precision=(str, "double", "double only for this action"))),
    ("scatter", "model"): dict(
        help="Melnikov-model scattering maps at a point",
        opts=dict(**COMMON_PHYS, **STRIP, i=(float, 3.0, "angular momentum I"), phi=(float, 0.0, "phase"),
                  sign=(str, "both", "+, - or both"), phase=(str, "fixed", "fixed or critical"))),
    ("scatter", "shoot"): dict(
        help="scattering map by shooting heteroclinic orbits",
        opts=dict(**COMMON_PHYS, i=(float, 2.5, "angular momentum I"), phi=(float, 0.0, "phase"),
                  sign=(str, "+", "+ or -"), tol=(float, 1e-11, "Newton tolerance"),
                  u_seed=(float, -20.0, "seed position on the parabola"),
                  r_out=(float, 1e4, "radius where tails are fitted"))),
    ("scatter", "sweep"): dict(
        help="Delta I over a phi grid, model and/or shooting",
        opts=dict(**COMMON_PHYS, **STRIP, i=(float, 2.5, "angular momentum I"), n_phi=(int, 16, "phi samples"),
                  sign=(str, "+", "+ or -"), mode=(str, "melnikov", "melnikov, shooting or both"))),
    ("drift", "plan"): dict(
        help="greedy alternating chain towards a target I",
        opts=dict(**COMMON_PHYS, **STRIP, i0=(float, 3.0, "starting I"), phi0=(float, 0.0, "starting phase"),
                  target=(float, 3.05, "target I"), budget=(int, 10 ** 7, "map evaluations allowed"),
                  n_i=(int, 64, "I nodes of the model table"))),
    ("drift", "control"): dict(
        help="iterate a single scattering map",
        opts=dict(**COMMON_PHYS, **STRIP, i0=(float, 3.0, "starting I"), phi0=(float, 0.0, "starting phase"),
                  sign=(str, "+", "+ or -"), steps=(int, 10 ** 5, "iterations"),
                  band=(float, 1e-3, "return band around I0"), keep=(bool, False, "emit the I orbit"),
                  n_i=(int, 64, "I nodes of the model table"))),
    ("drift", "export"): dict(
        help="convert a chain file to CSV/JSON and plot I against step",
        opts=dict(input=(str, None, "chain file written by drift plan"))),
    ("verify", "quick"): dict(help="conservation and closed-form checks", opts={}),
    ("verify", "full"): dict(help="the complete acceptance battery", opts={}),
}

MODULE_HELP = dict(primaries="primaries' orbit", orbit="trajectory integration",
                   potential="perturbative potential", melnikov="Melnikov potential",
                   scatter="scattering maps", drift="drift chains", verify="acceptance battery")


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    p = argparse.ArgumentParser(prog="rpe3bp", description="Parabolic scattering and drift in the "
                                "restricted planar elliptic three-body problem.")
    groups = p.add_subparsers(dest="group", required=True, metavar="group")
    subs = {}
    for (g, a), spec in COMMANDS.items():
        if g not in subs:
            gp = groups.add_parser(g, help=MODULE_HELP[g])
            subs[g] = gp.add_subparsers(dest="action", required=True, metavar="action")
        ap = subs[g].add_parser(a, help=spec["help"])
        for name, (typ, default, hlp) in spec["opts"].items():
            dflt = f" (default {default})" if default is not None else ""
            if typ is bool:
                ap.add_argument(_flag(name), dest=name, action="store_const", const=True,
                                default=None, help=hlp)
            else:
                ap.add_argument(_flag(name), dest=name, type=typ, default=None, help=hlp + dflt)
        ap.add_argument("--config", help="TOML or JSON file with option values")
        ap.add_argument("--out", help="output file (default: standard output)")
        ap.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
        ap.add_argument("--svg", help="also write a plot to this SVG file")
    return p


# --------------------------------------------------------------------------
# configuration

def load_config(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.lower().endswith(".json"):
        return json.loads(raw)
    try:
        return tomllib.loads(raw.decode())
    except tomllib.TOMLDecodeError:
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            raise DomainError(f"{path}: neither TOML nor JSON")


def _norm(d):
    return {str(k).replace("-", "_"): v for k, v in d.items()}


def key_is_chain(group, action):
    return (group, action) == ("drift", "plan")


def merge_config(group, action, args):
    """Defaults < config file < explicit flags.  Returns the merged dict."""
    opts = COMMANDS[(group, action)]["opts"]
    cfg = {k: v[1] for k, v in opts.items()}
    cfg["format"] = "json" if group == "verify" or key_is_chain(group, action) else "csv"
    if args.out and args.out.lower().endswith((".json", ".csv")):
        cfg["format"] = args.out.lower().rsplit(".", 1)[1]
    if args.config:
        doc = load_config(args.config)
        layers = [{k: v for k, v in doc.items() if not isinstance(v, dict)}]
        gsec = doc.get(group, {})
        if isinstance(gsec, dict):
            layers.append({k: v for k, v in gsec.items() if not isinstance(v, dict)})
            if isinstance(gsec.get(action), dict):
                layers.append(gsec[action])
        for layer in layers:
            for k, v in _norm(layer).items():
                if k in opts:
                    typ = opts[k][0]
                    cfg[k] = v if v is None or typ is bool else typ(v)
                elif k == "format":
                    cfg[k] = v
                else:
                    raise DomainError(f"unknown option {k!r} in {args.config}")
    for k in list(opts) + ["format"]:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["format"] not in ("csv", "json"):
        raise DomainError("format must be csv or json")
    return cfg


# --------------------------------------------------------------------------
# validation

def check_mu(mu):
    if not (0.0 < mu <= 0.5):
        raise DomainError(f"mu = {mu} is outside the valid range: the mass ratio must lie in (0, 1/2]")


def check_eps(eps):
    if not (0.0 <= eps < 1.0):
        raise DomainError(f"eps = {eps} is outside the valid range [0, 1)")


def check_i(i, name="I"):
    if not (i >= pert.I_FLOOR):
        raise DomainError(f"{name} = {i} is below the floor {pert.I_FLOOR}")


def check_positive(v, name):
    if v is None or not (v > 0):
        raise DomainError(f"{name} must be positive")


def parse_sign(s):
    if str(s) in ("+", "1", "+1", "plus"):
        return 1
    if str(s) in ("-", "-1", "minus"):
        return -1
    raise DomainError(f"sign must be + or -, got {s!r}")


def _validate_common(c):
    if "mu" in c:
        check_mu(c["mu"])
    if "eps" in c:
        check_eps(c["eps"])
    for k in ("i", "i0", "target"):
        if k in c and c[k] is not None:
            check_i(c[k], k)
    for k in ("n", "n_out", "n_sigma", "n_theta", "n_phi", "n_i", "budget", "steps", "dps"):
        if k in c and c[k] is not None and c[k] < 1:
            raise DomainError(f"{k} must be at least 1")
    if c.get("precision") not in (None, "double", "extended"):
        raise DomainError("precision must be double or extended")
    if c.get("phase") not in (None, "fixed", "critical"):
        raise DomainError("phase must be fixed or critical")


def _strip(c, pad_lo=0.5, pad_hi=1.0, anchors=()):
    """Explicit strip, else the default one, widened to contain the anchors."""
    if c.get("i_lo") is not None or c.get("i_hi") is not None:
        lo = c.get("i_lo") if c.get("i_lo") is not None else pert.I_FLOOR
        hi = c.get("i_hi") if c.get("i_hi") is not None else math.inf
        check_i(lo, "i_lo")
        if not hi > lo:
            raise DomainError("i_hi must exceed i_lo")
        return lo, hi
    lo, hi = sc.default_strip(c["eps"])
    if anchors and not (lo <= min(anchors) and max(anchors) <= hi and math.isfinite(hi)):
        return max(pert.I_FLOOR, min(anchors) - pad_lo), max(anchors) + pad_hi
    return lo, hi


# --------------------------------------------------------------------------
# results

class Table:
    def __init__(self, columns, rows, extra=None, plot=None):
        self.columns = list(columns)
        self.rows = rows
        self.extra = extra or {}
        self.plot = plot


class Record:
    def __init__(self, data, plot=None, text=None):
        self.data = data
        self.plot = plot
        self.text = text


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "_asdict"):
        return jsonable(x._asdict())
    if hasattr(x, "__dataclass_fields__"):
        return jsonable({k: getattr(x, k) for k in x.__dataclass_fields__})
    return x


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render(result, cfg, command):
    header = dict(command=" ".join(command), config={k: jsonable(v) for k, v in sorted(cfg.items())})
    if isinstance(result, Table):
        if cfg["format"] == "json":
            doc = dict(header, columns=result.columns, rows=jsonable(result.rows))
            if result.extra:
                doc["summary"] = jsonable(result.extra)
            return json.dumps(doc, indent=1) + "\n"
        buf = io.StringIO()
        buf.write(f"# rpe3bp {header['command']}\n")
        buf.write("# config: " + json.dumps(header["config"], sort_keys=True) + "\n")
        if result.extra:
            buf.write("# summary: " + json.dumps(jsonable(result.extra), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(result.columns)
        for row in result.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()
    data = jsonable(result.data)
    if cfg["format"] == "json":
        return json.dumps(dict(header, result=data), indent=1) + "\n"
    flat = _flatten(data)
    buf = io.StringIO()
    buf.write(f"# rpe3bp {header['command']}\n")
    buf.write("# config: " + json.dumps(header["config"], sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in flat:
        w.writerow([k, _cell(v)])
    return buf.getvalue()


def _flatten(d, prefix=""):
    out = []
    if isinstance(d, dict):
        for k, v in d.items():
            out += _flatten(v, f"{prefix}{k}.")
    elif isinstance(d, list) and d and any(isinstance(v, (dict, list)) for v in d):
        for n, v in enumerate(d):
            out += _flatten(v, f"{prefix}{n}.")
    elif isinstance(d, list):
        out.append((prefix[:-1], " ".join(_cell(v) for v in d)))
    else:
        out.append((prefix[:-1], d))
    return out


# --------------------------------------------------------------------------
# actions

def do_primaries_table(c):
    check_positive(c["n"], "n")
    eph = PrimaryEphemeris(c["mu"], c["eps"])
    t = np.linspace(c["t0"], c["t1"], c["n"])
    tab = eph.table(t)
    cols = ["t", "xi", "f", "rho", "q0x", "q0y", "q1x", "q1y"]
    return Table(cols, tab.tolist(),
                 plot=("line", t, {"f": tab[:, 2], "rho": tab[:, 3]}, "primaries", "t", ""))


def do_orbit_integrate(c):
    eph = PrimaryEphemeris(c["mu"], c["eps"])
    check_positive(c["r"], "r")
    if c["chart"] not in ("polar", "mcgehee", "cartesian"):
        raise DomainError("chart must be polar, mcgehee or cartesian")
    s0 = dyn.polar_state(c["r"], c["alpha"], c["t0"], c["y"], c["G"], eph)
    cfg = dyn.IntegratorConfig(rel_tol=c["rtol"], abs_tol=c["atol"], chart=c["chart"])
    te = np.linspace(c["t0"], c["t1"], c["n_out"])
    if c["n_out"] < 2 or c["t1"] == c["t0"]:
        raise DomainError("need t1 != t0 and at least two output samples")
    tr = dyn.integrate(s0, (c["t0"], c["t1"]), eph, cfg, t_eval=te, raise_on_collision=True)
    hp, jac = tr.diagnostics["H_pol"], tr.diagnostics["jacobi"]
    # the state's own time column duplicates t
    rows = np.c_[tr.times, tr.states[:, [0, 1, 3, 4, 5]], hp, jac]
    cols = ["t", "r", "alpha", "y", "G", "E", "H_pol", "J"]
    extra = dict(status=tr.status, steps=tr.n_steps, max_dH=tr.diagnostics["max_dH"])
    return Table(cols, rows.tolist(), extra, plot=("line", tr.times, {"r": tr.states[:, 0]}, "orbit", "t", "r"))


def do_potential_profile(c):
    u = np.linspace(c["u_min"], c["u_max"], c["n"])
    v = np.atleast_1d(pert.perturbative_potential(u, c["beta"], c["t"], c["i"], c["eps"], c["mu"]))
    vc = np.atleast_1d(pert.perturbative_potential(u, c["beta"], c["t"], c["i"], 0.0, c["mu"]))
    rows = np.c_[u, v, vc, v - vc].tolist()
    return Table(["u", "V", "V_circ", "V_minus_V_circ"], rows,
                 plot=("line", u, {"V": v, "V_circ": vc}, "potential", "u", "V"))


def do_melnikov_eval(c):
    if (c["sigma"] is None) != (c["theta"] is None):
        raise DomainError("give both --sigma and --theta, or neither for a grid")
    if c["sigma"] is not None:
        val = mel.melnikov_L(c["sigma"], c["theta"], c["i"], c["mu"], c["eps"])
        return Table(["sigma", "theta", "L"], [[c["sigma"], c["theta"], float(val)]])
    tab = mel.melnikov_table(c["i"], c["mu"], c["eps"], c["n_sigma"], c["n_theta"])
    rows = [[s, t, tab.values[a, b]] for a, s in enumerate(tab.sigma) for b, t in enumerate(tab.theta)]
    return Table(["sigma", "theta", "L"], rows,
                 plot=("heat", tab.sigma, tab.theta, tab.values, "L(sigma, theta)", "sigma", "theta"))


def do_melnikov_harmonics(c):
    lmax = c["lmax"]
    if lmax < 0:
        raise DomainError("lmax must be non-negative")
    theta = (TWO_PI * np.arange(c["n_theta"]) / c["n_theta"] if c["n_theta"]
             else np.array([c["theta"]]))
    h = mel.harmonics(theta, c["i"], c["mu"], c["eps"], l_max=lmax, precision=c["precision"],
                      dps=c["dps"])
    cols = ["theta"] + [f"abs_L{l}" for l in range(lmax + 1)] \
        + [f"{p}_L{l}" for l in range(lmax + 1) for p in ("re", "im")]
    rows = []
    for k, th in enumerate(theta):
        hk = h[lmax:, k]
        rows.append([th] + [abs(v) for v in hk] + [x for v in hk for x in (v.real, v.imag)])
    series = {f"|L{l}|": np.abs(h[lmax + l]) for l in range(lmax + 1)}
    return Table(cols, rows, plot=("line", theta, series, "harmonics", "theta", "|L^[l]|"))


def _double_only(c):
    if c.get("precision") == "extended":
        raise DomainError("extended precision is only offered by melnikov harmonics")


def do_melnikov_reduced(c):
    _double_only(c)
    phi = TWO_PI * np.arange(c["n_phi"]) / c["n_phi"]
    rows = []
    for p in phi:
        a, b = mel.reduced_potentials(p, c["i"], c["mu"], c["eps"], phase=c["phase"])
        rows.append([p, a.value, b.value, a.d_phi, a.d_i, b.d_phi, b.d_i])
    arr = np.array(rows)
    cols = ["phi", "L_plus", "L_minus", "dphi_plus", "dI_plus", "dphi_minus", "dI_minus"]
    return Table(cols, rows, plot=("line", phi, {"L+": arr[:, 1], "L-": arr[:, 2]},
                                   "reduced potentials", "phi", ""))


def do_melnikov_bracket(c):
    _double_only(c)
    b = mel.transversality_bracket(c["phi"], c["i"], c["mu"], c["eps"], phase=c["phase"])
    lead = 2.0 * (b.plus.d_phi - b.minus.d_phi) * b.plus.d_i
    return Record(dict(bracket=b.value, noise=b.noise, below_noise=b.below_noise,
                       leading_form=lead, plus=b.plus, minus=b.minus))


def _signs(s):
    return (1, -1) if s == "both" else (parse_sign(s),)


def do_scatter_model(c):
    p = sc.CylinderPoint(c["phi"], c["i"])
    strip = _strip(c, anchors=(c["i"],))
    rows = []
    for s in _signs(c["sign"]):
        q = sc.scattering_melnikov(p, s, c["mu"], c["eps"], strip=strip, phase=c["phase"])
        rows.append(["+" if s > 0 else "-", p.phi, p.i, q.phi, q.i, q.i - p.i])
    return Table(["sign", "phi_in", "I_in", "phi_out", "I_out", "delta_I"], rows,
                 extra=dict(strip=list(strip)))


def _shoot_cfg(c):
    return sc.ShootingConfig(u_seed=c["u_seed"], r_out=c["r_out"], tol=c["tol"])


def do_scatter_shoot(c):
    s = parse_sign(c["sign"])
    p = sc.CylinderPoint(c["phi"], c["i"])
    r = sc.scattering_shoot(p, s, c["mu"], c["eps"], _shoot_cfg(c))
    return Record(dict(inputs=dict(phi=p.phi, I=p.i, sign=c["sign"]),
                       outputs=dict(phi=r.point.phi, I=r.point.i),
                       incoming=r.incoming, outgoing=r.outgoing, diagnostics=r.diagnostics))


def do_scatter_sweep(c):
    if c["mode"] not in ("melnikov", "shooting", "both"):
        raise DomainError("mode must be melnikov, shooting or both")
    s = parse_sign(c["sign"])
    phis = TWO_PI * np.arange(c["n_phi"]) / c["n_phi"]
    strip = _strip(c, anchors=(c["i"],))
    cols, series = ["phi"], {}
    data = [list(phis)]
    if c["mode"] in ("melnikov", "both"):
        dm = [sc.scattering_melnikov(sc.CylinderPoint(p, c["i"]), s, c["mu"], c["eps"],
                                     strip=strip).i - c["i"] for p in phis]
        cols.append("delta_I_model")
        data.append(dm)
        series["model"] = dm
    if c["mode"] in ("shooting", "both"):
        cfg = sc.ShootingConfig()

        def one(p):
            return sc.scattering_shoot(sc.CylinderPoint(p, c["i"]), s, c["mu"], c["eps"],
                                       cfg).diagnostics["delta_g"]

        with ThreadPoolExecutor(max_workers=worker_count()) as ex:
            ds = list(ex.map(one, phis))
        cols.append("delta_G_shooting")
        data.append(ds)
        series["shooting"] = ds
    rows = [list(r) for r in zip(*data)]
    return Table(cols, rows, plot=("line", phis, series, "scattering sweep", "phi", "delta I"))


def _model(c, anchors):
    lo, hi = _strip(c, anchors=anchors)
    if not math.isfinite(hi):
        hi = max(anchors) + 1.0
    return dif.model_for_window(c["mu"], c["eps"], lo, hi, c["n_i"])


def do_drift_plan(c):
    start = sc.CylinderPoint(c["phi0"], c["i0"])
    model = _model(c, (c["i0"], c["target"]))
    try:
        chain = dif.plan_drift(start, c["target"], model, c["budget"])
    except StripExitError as exc:
        if exc.chain is not None:
            exc.chain.meta["status"] = "strip_exit"
        raise
    summary = (f"status={chain.status} steps={len(chain)} evaluations={chain.meta['evaluations']} "
               f"I: {chain.start.i:.6f} -> {chain.end.i:.6f} (target {c['target']})")
    return Record(dict(chain=chain), text=summary)


def _chain_doc(chain):
    signs = np.r_[0, chain.signs.astype(int)]
    records = [[int(s), float(p), float(i)] for s, (p, i) in zip(signs, chain.points)]
    return dict(schema=dif.SCHEMA, version=dif.SCHEMA_VERSION, meta=chain.meta, records=records)


def do_drift_control(c):
    start = sc.CylinderPoint(c["phi0"], c["i0"])
    model = _model(c, (c["i0"],))
    res = dif.single_map_control(start, parse_sign(c["sign"]), c["steps"], model, band=c["band"],
                                 keep=bool(c["keep"]))
    summary = dict(max_excursion=res.max_excursion, returns=res.returns, steps=res.steps,
                   returned=res.returns >= 1)
    if c["keep"]:
        iv = res.i_values
        return Table(["step", "I"], [[n + 1, v] for n, v in enumerate(iv)], extra=summary,
                     plot=("line", np.arange(1, len(iv) + 1), {"I": iv}, "single map", "step", "I"))
    return Record(summary)


def do_drift_export(c):
    if not c["input"]:
        raise DomainError("--input is required")
    chain = dif.load_pseudo_orbit(c["input"])
    signs = np.r_[0, chain.signs.astype(int)]
    rows = [[n, int(s), p, i] for n, (s, (p, i)) in enumerate(zip(signs, chain.points))]
    steps = np.arange(len(chain.points))
    return Table(["step", "sign", "phi", "I"], rows, extra=dict(meta=chain.meta),
                 plot=("line", steps, {"I": chain.points[:, 1]}, "drift chain", "step", "I"))


def do_verify(c, level):
    from . import verify
    rep = verify.run_suite(level, progress=lambda r: print(
        f"[{'PASS' if r['passed'] else 'FAIL'}] {r['id']}: {r['name']} ({r['seconds']} s)",
        file=sys.stderr))
    return Record(rep)


ACTIONS = {
    ("primaries", "table"): do_primaries_table,
    ("orbit", "integrate"): do_orbit_integrate,
    ("potential", "profile"): do_potential_profile,
    ("melnikov", "eval"): do_melnikov_eval,
    ("melnikov", "harmonics"): do_melnikov_harmonics,
    ("melnikov", "reduced"): do_melnikov_reduced,
    ("melnikov", "bracket"): do_melnikov_bracket,
    ("scatter", "model"): do_scatter_model,
    ("scatter", "shoot"): do_scatter_shoot,
    ("scatter", "sweep"): do_scatter_sweep,
    ("drift", "plan"): do_drift_plan,
    ("drift", "control"): do_drift_control,
    ("drift", "export"): do_drift_export,
    ("verify", "quick"): lambda c: do_verify(c, "quick"),
    ("verify", "full"): lambda c: do_verify(c, "full"),
}


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _plot(result, path):
    spec = result.plot
    if spec is None:
        raise DomainError("this action has no plot")
    if spec[0] == "line":
        _, x, series, title, xl, yl = spec
        svg.line_plot(path, x, series, title, xl, yl)
    else:
        _, x, y, z, title, xl, yl = spec
        svg.heatmap(path, x, y, z, title, xl, yl)


def run(argv=None):
    """Run one command; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code not in (None, 0) else 0
    key = (args.group, args.action)
    command = [args.group, args.action]
    try:
        n = worker_count()
        _apply_thread_cap(n)
        cfg = merge_config(args.group, args.action, args)
        _validate_common(cfg)
        result = ACTIONS[key](cfg)
        if key == ("drift", "plan"):
            chain = result.data["chain"]
            doc = dict(command=" ".join(command),
                       config={k: jsonable(v) for k, v in sorted(cfg.items())}, **_chain_doc(chain))
            if cfg["format"] == "json":
                text = json.dumps(jsonable(doc), separators=(",", ":")) + "\n"
            else:
                signs = np.r_[0, chain.signs.astype(int)]
                rows = [[n_, int(s), p, i] for n_, (s, (p, i)) in enumerate(zip(signs, chain.points))]
                text = render(Table(["step", "sign", "phi", "I"], rows, extra=chain.meta), cfg, command)
            _emit(text, args.out)
            print(result.text, file=sys.stdout if args.out else sys.stderr)
            if args.svg:
                svg.line_plot(args.svg, np.arange(len(chain.points)), {"I": chain.points[:, 1]},
                              "drift chain", "step", "I")
            return EXIT_OK
        _emit(render(result, cfg, command), args.out)
        if args.svg:
            _plot(result, args.svg)
        return EXIT_OK
    except (DomainError, ValueError) as exc:
        print(f"rpe3bp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, NoiseFloorError, CollisionError, StripExitError) as exc:
        print(f"rpe3bp: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"rpe3bp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
