"""Minimal deterministic SVG line charts (CSV stays the authoritative output)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: dict[str, tuple[list[float], list[float]]] = field(default_factory=dict)
    log_y: bool = False


def _finite(xs, ys, log_y):
    pts = []
    for x, y in zip(xs, ys):
        if math.isfinite(x) and math.isfinite(y) and (y > 0 or not log_y):
            pts.append((x, math.log10(y) if log_y else y))
    return pts


def _panel(p: Panel, ox: float, w: float, h: float) -> list[str]:
    m = 50.0
    out = [f'<g transform="translate({ox:.1f},0)">']
    out.append(f'<text x="{w / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(p.title)}</text>')
    pts_all = [pt for xs, ys in p.series.values() for pt in _finite(xs, ys, p.log_y)]
    out.append(f'<rect x="{m}" y="{m - 20}" width="{w - 1.5 * m:.1f}" height="{h - 2 * m + 20:.1f}" fill="none" stroke="#444"/>')
    out.append(f'<text x="{w / 2:.1f}" y="{h - 10:.1f}" text-anchor="middle" font-size="12">{escape(p.xlabel)}</text>')
    ylabel = ("log10 " if p.log_y else "") + p.ylabel
    out.append(f'<text x="12" y="{h / 2:.1f}" text-anchor="middle" font-size="12" transform="rotate(-90 12 {h / 2:.1f})">{escape(ylabel)}</text>')
    if pts_all:
        x0, x1 = min(x for x, _ in pts_all), max(x for x, _ in pts_all)
        y0, y1 = min(y for _, y in pts_all), max(y for _, y in pts_all)
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0

        def sx(x):
            return m + (x - x0) / (x1 - x0) * (w - 1.5 * m)

        def sy(y):
            return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

        for label, v in ((f"{y0:.3g}", y0), (f"{y1:.3g}", y1)):
            out.append(f'<text x="{m - 4}" y="{sy(v) + 4:.1f}" text-anchor="end" font-size="10">{label}</text>')
        for label, v in ((f"{x0:.3g}", x0), (f"{x1:.3g}", x1)):
            out.append(f'<text x="{sx(v):.1f}" y="{h - m + 14:.1f}" text-anchor="middle" font-size="10">{label}</text>')
        for k, (name, (xs, ys)) in enumerate(p.series.items()):
            color = _COLORS[k % len(_COLORS)]
            pts = _finite(xs, ys, p.log_y)
            if pts:
                path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
                out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{path}"/>')
            out.append(f'<text x="{m + 6}" y="{m - 4 + 14 * k:.1f}" font-size="11" fill="{color}">{escape(name)}</text>')
    out.append("</g>")
    return out


def line_chart(panels: list[Panel], width: float = 420.0, height: float = 320.0) -> str:
    total = width * len(panels)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total:.0f}" height="{height:.0f}" viewBox="0 0 {total:.0f} {height:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for i, p in enumerate(panels):
        parts.extend(_panel(p, i * width, width, height))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
