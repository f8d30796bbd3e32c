"""Minimal SVG line chart (log-scale y axis) for bound curves."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .curve import BoundCurve

PALETTE = ("#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78")
WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 190, 30, 50


def curve_to_svg(curve: BoundCurve, title: str | None = None) -> str:
    series = [("actual", curve.actual)]
    for name in curve.columns:
        col = curve.column(name)
        if any(v is not None and v > 0 for v in col):
            series.append((name, col))
    positive = [v for _, col in series for v in col if v is not None and v > 0 and math.isfinite(v)]
    ns = curve.ns
    if not positive or not ns:
        lo, hi = 1e-16, 1.0
    else:
        lo, hi = min(positive), max(positive)
    ylo, yhi = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if yhi == ylo:
        yhi += 1
    xlo, xhi = (min(ns), max(ns)) if ns else (0, 1)
    if xhi == xlo:
        xhi += 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(n):
        return LEFT + (n - xlo) / (xhi - xlo) * pw

    def py(v):
        return TOP + (yhi - math.log10(v)) / (yhi - ylo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    step = max(1, (yhi - ylo) // 8)
    for e in range(ylo, yhi + 1, step):
        y = py(10.0 ** e)
        out.append(f'<line x1="{LEFT}" y1="{y:.1f}" x2="{LEFT + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
    for k in range(6):
        n = xlo + (xhi - xlo) * k / 5
        out.append(f'<text x="{px(n):.1f}" y="{TOP + ph + 16}" text-anchor="middle">{n:.0f}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">n</text>')
    heading = title or f"{curve.instance_id} ({curve.norm})"
    out.append(f'<text x="{LEFT}" y="{TOP - 10}">{escape(heading)}</text>')
    for i, (name, col) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [f"{px(n):.1f},{py(v):.1f}" for n, v in zip(ns, col)
               if v is not None and v > 0 and math.isfinite(v)]
        if len(pts) > 1:
            width = 2.2 if name == "actual" else 1.3
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{" ".join(pts)}"/>')
        ly = TOP + 14 * (i + 1)
        out.append(f'<line x1="{LEFT + pw + 12}" y1="{ly - 4}" x2="{LEFT + pw + 32}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 38}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, curve: BoundCurve, title: str | None = None) -> None:
    Path(path).write_text(curve_to_svg(curve, title))
