"""Hand-rolled SVG emission for report summaries.

Self-contained files, path/text primitives only.  Three kinds: "scaling"
(volume ratio curves with the 7/6 reference line), "decay" (log-log
boundary-hit probabilities with the fitted slope annotated), and "phase"
(a d x r heat grid of mean return counts).
"""

from __future__ import annotations

import math

from .errors import UsageError

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


class _Canvas:
    def __init__(self, title):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        ]

    def line(self, x1, y1, x2, y2, color="#444", width=1, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
            f'stroke="{color}" stroke-width="{width}"{d}/>'
        )

    def polyline(self, pts, color):
        coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )

    def circle(self, x, y, color):
        self.parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.5" fill="{color}"/>')

    def rect(self, x, y, w, h, fill, stroke="none"):
        self.parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" height="{h:.1f}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def text(self, x, y, s, anchor="start", color="#000"):
        self.parts.append(
            f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" fill="{color}">{s}</text>'
        )

    def render(self):
        return "\n".join(self.parts) + "\n</svg>\n"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    t = math.ceil(lo / step) * step
    out = []
    while t <= hi + 1e-12:
        out.append(round(t, 12))
        t += step
    return out


class _Axes:
    def __init__(self, canvas, xlo, xhi, ylo, yhi, xlabel, ylabel, logx=False, logy=False):
        self.c = canvas
        self.logx, self.logy = logx, logy
        tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
        ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
        self.tx, self.ty = tx, ty
        self.xlo, self.xhi = tx(xlo), tx(xhi)
        self.ylo, self.yhi = ty(ylo), ty(yhi)
        if self.xhi <= self.xlo:
            self.xhi = self.xlo + 1
        if self.yhi <= self.ylo:
            self.yhi = self.ylo + 1
        canvas.line(_ML, _H - _MB, _W - _MR, _H - _MB)
        canvas.line(_ML, _MT, _ML, _H - _MB)
        for v in _ticks(self.xlo, self.xhi):
            x = self.px(None, raw=v)
            canvas.line(x, _H - _MB, x, _H - _MB + 4)
            label = f"{10 ** v:g}" if logx else f"{v:g}"
            canvas.text(x, _H - _MB + 16, label, anchor="middle")
        for v in _ticks(self.ylo, self.yhi):
            y = self.py(None, raw=v)
            canvas.line(_ML - 4, y, _ML, y)
            label = f"{10 ** v:.2g}" if logy else f"{v:g}"
            canvas.text(_ML - 6, y + 3, label, anchor="end")
        canvas.text((_ML + _W - _MR) / 2, _H - 8, xlabel, anchor="middle")
        canvas.text(14, _MT - 8, ylabel)

    def px(self, v, raw=None):
        t = raw if raw is not None else self.tx(v)
        return _ML + (t - self.xlo) / (self.xhi - self.xlo) * (_W - _ML - _MR)

    def py(self, v, raw=None):
        t = raw if raw is not None else self.ty(v)
        return _H - _MB - (t - self.ylo) / (self.yhi - self.ylo) * (_H - _MT - _MB)


def plot_scaling(rows, out_path):
    """Volume ratios against r, with the 7/6 and 4/3 reference lines."""
    rows = [r for r in rows if r.get("r", 0) > 0]
    if not rows:
        raise UsageError("no plottable rows (need r > 0 volume rows)")
    rs = [row["r"] for row in rows]
    y1 = [row["ratio_mean"] for row in rows]
    y2 = [row["ratio_second"] for row in rows]
    ylo = min(y1 + y2 + [1.0]) * 0.95
    yhi = max(y1 + y2 + [7 / 6, 4 / 3]) * 1.05
    c = _Canvas("ball volume scaling")
    ax = _Axes(c, min(rs), max(rs), ylo, yhi, "r", "ratio")
    for ref, label in ((7 / 6, "7/6 reference"), (4 / 3, "4/3 reference"), (1.0, "1")):
        y = ax.py(ref)
        c.line(_ML, y, _W - _MR, y, color="#999", dash="4,3")
        c.text(_W - _MR - 2, y - 3, label, anchor="end", color="#777")
    for series, color, label in (
        (y1, _PALETTE[0], "mean/(r+1)^2"),
        (y2, _PALETTE[1], "mean sq/r^4"),
    ):
        pts = [(ax.px(x), ax.py(v)) for x, v in zip(rs, series)]
        c.polyline(pts, color)
        for x, y in pts:
            c.circle(x, y, color)
        c.text(_ML + 8, _MT + 14 + 14 * (color == _PALETTE[1]), label, color=color)
    with open(out_path, "w") as f:
        f.write(c.render())


def plot_decay(rows, out_path):
    """Log-log boundary-hit decay with the least-squares slope annotated."""
    rows = [r for r in rows if r.get("p_hit", 0) > 0]
    if not rows:
        raise UsageError("no plottable rows (need positive hit probabilities)")
    rs = [row["r"] for row in rows]
    ps = [row["p_hit"] for row in rows]
    slope = rows[0].get("fit_slope")
    if slope is None or slope != slope:
        xs = [math.log(r) for r in rs]
        ys = [math.log(p) for p in ps]
        n = len(xs)
        xb, yb = sum(xs) / n, sum(ys) / n
        slope = sum((x - xb) * (y - yb) for x, y in zip(xs, ys)) / sum(
            (x - xb) ** 2 for x in xs
        )
    c = _Canvas("boundary-hit probability decay")
    ax = _Axes(c, min(rs), max(rs), min(ps), max(ps), "r", "P(hit)", logx=True, logy=True)
    pts = [(ax.px(r), ax.py(p)) for r, p in zip(rs, ps)]
    c.polyline(pts, _PALETTE[0])
    for x, y in pts:
        c.circle(x, y, _PALETTE[0])
    c.text(_ML + 8, _MT + 14, f"slope = {slope:.3f}", color=_PALETTE[1])
    with open(out_path, "w") as f:
        f.write(c.render())


def plot_phase(rows, out_path):
    """Heat grid of mean return counts over (d, r)."""
    if not rows:
        raise UsageError("no plottable rows")
    ds = sorted({row["d"] for row in rows})
    rs = sorted({row["r"] for row in rows})
    vals = {(row["d"], row["r"]): row["mean_returns"] for row in rows}
    if not vals:
        raise UsageError("rows lack mean_returns")
    lo = min(vals.values())
    hi = max(vals.values())
    c = _Canvas("mean origin visits by (d, r)")
    cw = (_W - _ML - _MR) / len(rs)
    ch = (_H - _MT - _MB) / len(ds)
    for di, d in enumerate(ds):
        for ri, r in enumerate(rs):
            v = vals.get((d, r))
            if v is None:
                continue
            # log shading: visit counts span orders of magnitude
            f = 0.0 if hi <= lo else (math.log1p(v - lo)) / (math.log1p(hi - lo))
            shade = int(245 - 195 * f)
            x = _ML + ri * cw
            y = _MT + di * ch
            c.rect(x, y, cw, ch, f"rgb({shade},{shade},255)", stroke="#ccc")
            c.text(x + cw / 2, y + ch / 2 + 4, f"{v:.3g}", anchor="middle")
    for di, d in enumerate(ds):
        c.text(_ML - 8, _MT + di * ch + ch / 2 + 4, f"d={d}", anchor="end")
    for ri, r in enumerate(rs):
        c.text(_ML + ri * cw + cw / 2, _H - _MB + 16, f"r={r}", anchor="middle")
    with open(out_path, "w") as f:
        f.write(c.render())


PLOT_KINDS = {"scaling": plot_scaling, "decay": plot_decay, "phase": plot_phase}
