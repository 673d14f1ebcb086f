"""Small self-contained SVG writers for line plots and heatmaps."""
import math
from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 420
PAD_L, PAD_R, PAD_T, PAD_B = 70, 20, 30, 50
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo, hi, n=5):
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step) + 1)]


def _range(v):
    v = np.asarray(v, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        d = abs(lo) * 0.05 or 1.0
        return lo - d, hi + d
    return lo, hi


def _frame(title, xlabel, ylabel, xr, yr):
    pw, ph = W - PAD_L - PAD_R, H - PAD_T - PAD_B
    sx = lambda x: PAD_L + (x - xr[0]) / (xr[1] - xr[0]) * pw
    sy = lambda y: PAD_T + ph - (y - yr[0]) / (yr[1] - yr[0]) * ph
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{PAD_L + pw / 2}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="15" y="{PAD_T + ph / 2}" text-anchor="middle" '
           f'transform="rotate(-90 15 {PAD_T + ph / 2})">{escape(ylabel)}</text>']
    for t in _ticks(*xr):
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{PAD_T + ph}" x2="{x:.2f}" y2="{PAD_T + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{PAD_T + ph + 16}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(*yr):
        y = sy(t)
        out.append(f'<line x1="{PAD_L - 4}" y1="{y:.2f}" x2="{PAD_L}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{PAD_L - 6}" y="{y + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    return out, sx, sy


def line_plot(path, x, series, title="", xlabel="", ylabel=""):
    """Write an SVG with one polyline per entry of series (name -> y values)."""
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    xr = _range(x)
    yr = _range(np.concatenate([v for v in ys.values()]) if ys else [0.0])
    out, sx, sy = _frame(title, xlabel, ylabel, xr, yr)
    for n, (name, y) in enumerate(ys.items()):
        col = COLOURS[n % len(COLOURS)]
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.2"/>')
        ly = PAD_T + 14 + 14 * n
        out.append(f'<line x1="{W - PAD_R - 90}" y1="{ly - 4}" x2="{W - PAD_R - 70}" y2="{ly - 4}" '
                   f'stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{W - PAD_R - 66}" y="{ly}">{escape(str(name))}</text>')
    out.append("</svg>")
    _write(path, out)


def _colour(v):
    # blue - white - red diverging map on v in [0, 1]
    v = min(max(v, 0.0), 1.0)
    if v < 0.5:
        a = v / 0.5
        r, g, b = 59 + a * 196, 76 + a * 179, 192 + a * 63
    else:
        a = (v - 0.5) / 0.5
        r, g, b = 255 - a * 75, 255 - a * 251, 255 - a * 217
    return f"#{int(r):02x}{int(g):02x}{int(b):02x}"


def heatmap(path, x, y, z, title="", xlabel="", ylabel=""):
    """Write an SVG heatmap of z[i, j] at (x[i], y[j]) on uniform grids."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    dx = x[1] - x[0] if len(x) > 1 else 1.0
    dy = y[1] - y[0] if len(y) > 1 else 1.0
    xr = (x[0] - dx / 2, x[-1] + dx / 2)
    yr = (y[0] - dy / 2, y[-1] + dy / 2)
    out, sx, sy = _frame(title, xlabel, ylabel, xr, yr)
    zlo, zhi = _range(z)
    m = max(abs(zlo), abs(zhi))
    for i in range(len(x)):
        for j in range(len(y)):
            x0, x1 = sx(x[i] - dx / 2), sx(x[i] + dx / 2)
            y0, y1 = sy(y[j] + dy / 2), sy(y[j] - dy / 2)
            c = _colour(0.5 + 0.5 * z[i, j] / m if m > 0 else 0.5)
            out.append(f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0 + 0.3:.2f}" '
                       f'height="{y1 - y0 + 0.3:.2f}" fill="{c}"/>')
    out.insert(-1, f'<text x="{W - PAD_R}" y="{PAD_T - 6}" text-anchor="end">'
                   f'range [{zlo:.3g}, {zhi:.3g}]</text>')
    out.append("</svg>")
    _write(path, out)


def _write(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
