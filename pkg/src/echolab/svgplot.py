"""Deterministic SVG emission for echo curves (log F versus t).

Hand-rolled on purpose: the plot contract asks for byte-identical output
for identical inputs, which rules out plotting libraries that embed
hashes, dates or version strings.  Data series render as markers, model
curves as polylines; the y axis is log-decade F, the x axis linear t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptySeriesError

PALETTE = ("#1f6fb2", "#d2542c", "#2e8b57", "#8c4fa8", "#b8860b", "#476074")
WIDTH, HEIGHT = 640, 460
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 18, 46


@dataclass
class PlotSeries:
    label: str
    t: list
    F: list
    kind: str = "points"      # 'points' | 'line'
    color: str | None = None

    def finite(self):
        return [(x, y) for x, y in zip(self.t, self.F)
                if y is not None and y > 0 and math.isfinite(x) and math.isfinite(y)]


@dataclass
class PlotStyle:
    title: str = ""
    x_label: str = "t"
    y_label: str = "F"
    y_min: float | None = None


def series_from_table(table, kind="points", source=None):
    """One PlotSeries per (mode, n) series of an echo table."""
    out = []
    for mode, n in table.modes_and_rounds():
        t, F = table.series(mode=mode, n=n, source=source)
        out.append(PlotSeries(label=f"{mode} n={n}", t=list(t), F=list(F),
                              kind=kind))
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def render_plot_svg(series_list, style: PlotStyle | None = None,
                    path=None) -> str:
    """Render series to an SVG string; optionally write it to `path`."""
    style = style or PlotStyle()
    series_list = [s for s in series_list]
    points = [pt for s in series_list for pt in s.finite()]
    if not series_list or not points:
        raise EmptySeriesError("nothing to plot: no series with positive F")

    ts = [pt[0] for pt in points]
    fs = [pt[1] for pt in points]
    x_lo, x_hi = min(ts), max(ts)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    y_lo = style.y_min if style.y_min is not None else min(fs)
    y_lo = min(y_lo, 0.5)
    y_hi = max(max(fs), 1.0)
    ly_lo = math.floor(math.log10(y_lo) * 2.0) / 2.0
    ly_hi = math.ceil(math.log10(y_hi))

    inner_w = WIDTH - MARGIN_L - MARGIN_R
    inner_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(t):
        return MARGIN_L + inner_w * (t - x_lo) / (x_hi - x_lo)

    def sy(F):
        ly = math.log10(F)
        return MARGIN_T + inner_h * (ly_hi - ly) / (ly_hi - ly_lo)

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
               f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{inner_w}" '
               f'height="{inner_h}" fill="none" stroke="black" stroke-width="1"/>')

    # y decades
    dec = int(math.floor(ly_lo))
    while dec <= ly_hi:
        if ly_lo <= dec <= ly_hi:
            y = sy(10.0 ** dec)
            out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(y)}" x2="{WIDTH - MARGIN_R}" '
                       f'y2="{_fmt(y)}" stroke="#cccccc" stroke-width="0.6"/>')
            out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(y + 4)}" font-size="12" '
                       f'text-anchor="end" font-family="sans-serif">1e{dec}</text>')
        dec += 1
    # x ticks: 6 evenly spaced
    for k in range(7):
        t = x_lo + (x_hi - x_lo) * k / 6.0
        x = sx(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{HEIGHT - MARGIN_B}" x2="{_fmt(x)}" '
                   f'y2="{HEIGHT - MARGIN_B + 5}" stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(x)}" y="{HEIGHT - MARGIN_B + 20}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif">{_fmt(round(t, 3))}</text>')

    out.append(f'<text x="{MARGIN_L + inner_w / 2}" y="{HEIGHT - 8}" font-size="13" '
               f'text-anchor="middle" font-family="sans-serif">{style.x_label}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + inner_h / 2}" font-size="13" '
               f'text-anchor="middle" font-family="sans-serif" '
               f'transform="rotate(-90 16 {MARGIN_T + inner_h / 2})">{style.y_label}</text>')
    if style.title:
        out.append(f'<text x="{MARGIN_L + inner_w / 2}" y="14" font-size="13" '
                   f'text-anchor="middle" font-family="sans-serif">{style.title}</text>')

    for idx, s in enumerate(series_list):
        color = s.color or PALETTE[idx % len(PALETTE)]
        pts = s.finite()
        if not pts:
            continue
        if s.kind == "line":
            coords = " ".join(f"{_fmt(sx(t))},{_fmt(sy(F))}" for t, F in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"/>')
        else:
            for t, F in pts:
                out.append(f'<circle cx="{_fmt(sx(t))}" cy="{_fmt(sy(F))}" r="3" '
                           f'fill="{color}" fill-opacity="0.85"/>')
        ly = MARGIN_T + 16 + 16 * idx
        out.append(f'<line x1="{WIDTH - MARGIN_R - 150}" y1="{ly - 4}" '
                   f'x2="{WIDTH - MARGIN_R - 128}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="3"/>')
        out.append(f'<text x="{WIDTH - MARGIN_R - 122}" y="{ly}" font-size="12" '
                   f'font-family="sans-serif">{s.label}</text>')

    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
