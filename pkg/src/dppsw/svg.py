"""Minimal hand-written SVG line charts (axes, polylines, labels)."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def line_chart(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], title: str = "",
               xlabel: str = "x", ylabel: str = "y", width: int = 640, height: int = 400,
               markers: bool = False) -> str:
    """Render ``(label, xs, ys)`` series as one SVG document string.

    Coordinates are written with fixed precision so the output is
    byte-stable for identical input.
    """
    if not series:
        raise ValueError("at least one series is required")
    xs_all = np.concatenate([np.asarray(s[1], float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], float) for s in series])
    finite = np.isfinite(xs_all) & np.isfinite(ys_all)
    if not np.any(finite):
        raise ValueError("no finite data to plot")
    x0, x1 = float(xs_all[finite].min()), float(xs_all[finite].max())
    y0, y1 = float(min(0.0, ys_all[finite].min())), float(ys_all[finite].max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>')
    out.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>')
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{px(v):.2f}" y1="{mt + ph}" x2="{px(v):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{mt + ph + 18}" text-anchor="middle">{v:.3g}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 5}" y1="{py(v):.2f}" x2="{ml}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{py(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = [(px(x), py(y)) for x, y in zip(np.asarray(xs, float), np.asarray(ys, float))
               if np.isfinite(x) and np.isfinite(y)]
        path = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        if markers:
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{color}"/>' for a, b in pts)
        out.append(f'<text x="{ml + pw - 5}" y="{mt + 15 + 15 * i}" text-anchor="end" fill="{color}">'
                   f'{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
