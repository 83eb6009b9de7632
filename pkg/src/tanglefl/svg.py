"""Minimal dependency-free SVG line charts."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")

_W, _H = 360, 240
_PAD_L, _PAD_R, _PAD_T, _PAD_B = 52, 12, 28, 32


def _ticks(lo, hi, n=4):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / n for i in range(n + 1)]


def _panel(title, series, ox, oy):
    xs = [x for xv, _ in series.values() for x in xv]
    ys = [y for _, yv in series.values() for y in yv if math.isfinite(y)]
    if not xs or not ys:
        return [f'<text x="{ox + 10}" y="{oy + 20}">{escape(title)}: no data</text>']
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    if x1 == x0:
        x1 = x0 + 1
    pw, ph = _W - _PAD_L - _PAD_R, _H - _PAD_T - _PAD_B

    def px(x):
        return ox + _PAD_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return oy + _PAD_T + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<text x="{ox + _W / 2:.1f}" y="{oy + 16}" text-anchor="middle" font-weight="bold">{escape(title)}</text>',
        f'<rect x="{ox + _PAD_L}" y="{oy + _PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
    ]
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ox + _PAD_L - 4}" y="{py(t) + 4:.1f}" text-anchor="end" font-size="10">{t:.3g}</text>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{oy + _H - _PAD_B + 14}" text-anchor="middle" font-size="10">{t:.0f}</text>')
    for i, (name, (xv, yv)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xv, yv) if math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = oy + _PAD_T + 12 + 12 * i
        out.append(f'<text x="{ox + _PAD_L + 6}" y="{ly}" font-size="10" fill="{color}">{escape(name)}</text>')
    return out


def line_panels(panels, path, columns: int = 2, xlabel: str = "round") -> None:
    """Write a grid of line charts.

    Args:
        panels: Sequence of ``(title, {series_name: (xs, ys)})``.
        path: Output file.
        columns: Panels per row.
        xlabel: Caption under the grid.
    """
    rows = math.ceil(len(panels) / columns)
    width, height = columns * _W, rows * _H + 20
    body = []
    for i, (title, series) in enumerate(panels):
        body += _panel(title, series, (i % columns) * _W, (i // columns) * _H)
    body.append(f'<text x="{width / 2:.0f}" y="{height - 4}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>')
    svg = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">\n<rect width="100%" height="100%" fill="white"/>\n'
           + "\n".join(body) + "\n</svg>\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
