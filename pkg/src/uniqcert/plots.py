"""Dependency-free SVG emission for decay curves and Jacobian heat maps.

The plots are companions to the CSV files the pipeline writes; tests
assert on the CSVs, the SVGs exist for eyeballs.  Everything here is
plain string assembly, deliberately: a plotting dependency would dwarf
the rest of the package for two chart types.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import IoError
from .jacobian import JacobianMap

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 30, 45


def _write(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def decay_plot(orders, sigma_min, path, title="smallest singular value vs accuracy order"):
    """Log-y line plot of a singular value series."""
    w, h = 520, 360
    pw, ph = w - _MARGIN_L - _MARGIN_R, h - _MARGIN_T - _MARGIN_B
    svals = [max(float(s), 1e-300) for s in sigma_min]
    ys = [math.log10(s) for s in svals]
    y_lo, y_hi = min(ys), max(ys)
    if y_hi - y_lo < 1e-9:
        y_lo, y_hi = y_lo - 1, y_hi + 1
    x_lo, x_hi = min(orders), max(orders)
    if x_hi == x_lo:
        x_hi = x_lo + 1

    def px(o):
        return _MARGIN_L + pw * (o - x_lo) / (x_hi - x_lo)

    def py(y):
        return _MARGIN_T + ph * (y_hi - y) / (y_hi - y_lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.0f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#444"/>',
    ]
    for ty in _ticks(y_lo, y_hi):
        yy = py(ty)
        parts.append(f'<line x1="{_MARGIN_L}" y1="{yy:.1f}" x2="{_MARGIN_L + pw}" y2="{yy:.1f}" '
                     'stroke="#ddd"/>')
        parts.append(f'<text x="{_MARGIN_L - 6}" y="{yy + 4:.1f}" text-anchor="end">1e{ty:.1f}</text>')
    for o in orders:
        xx = px(o)
        parts.append(f'<text x="{xx:.1f}" y="{h - _MARGIN_B + 16}" text-anchor="middle">{o}</text>')
    pts = " ".join(f"{px(o):.1f},{py(y):.1f}" for o, y in zip(orders, ys))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    for o, y in zip(orders, ys):
        parts.append(f'<circle cx="{px(o):.1f}" cy="{py(y):.1f}" r="3.5" fill="#1f77b4"/>')
    parts.append(f'<text x="{w / 2:.0f}" y="{h - 8}" text-anchor="middle">difference accuracy order</text>')
    parts.append('</svg>')
    _write(path, "\n".join(parts) + "\n")


def _viridis(frac: float) -> str:
    # coarse 5-anchor approximation of a perceptual colormap
    anchors = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)]
    f = min(max(frac, 0.0), 1.0) * (len(anchors) - 1)
    i = min(int(f), len(anchors) - 2)
    t = f - i
    rgb = tuple(round(a + t * (b - a)) for a, b in zip(anchors[i], anchors[i + 1]))
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def _downsample(grid: np.ndarray, limit: int = 150) -> np.ndarray:
    steps = tuple(max(1, -(-n // limit)) for n in grid.shape)
    return grid[tuple(slice(None, None, s) for s in steps)]


def _heat_panel(parts, grid, x0, y0, size, title, lo, hi):
    g = _downsample(grid)
    rows, cols = g.shape
    cw, ch = size / cols, size / rows
    parts.append(f'<text x="{x0 + size / 2:.0f}" y="{y0 - 8:.0f}" text-anchor="middle">{title}</text>')
    span = hi - lo if hi > lo else 1.0
    for i in range(rows):
        for j in range(cols):
            frac = (g[i, j] - lo) / span
            parts.append(
                f'<rect x="{x0 + j * cw:.2f}" y="{y0 + (rows - 1 - i) * ch:.2f}" '
                f'width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" fill="{_viridis(frac)}"/>'
            )
    parts.append(f'<rect x="{x0}" y="{y0}" width="{size}" height="{size}" fill="none" stroke="#444"/>')


def heatmap_plot(jmap: JacobianMap, path):
    """Two log10 sigma_min panels (low and high accuracy) plus a shared legend."""
    if not jmap.grid_shape or len(jmap.grid_shape) != 2:
        raise IoError("heat map rendering needs a 2-d lattice of selected points")
    lo_grid = np.log10(np.maximum(jmap.sigma_min_low, 1e-300)).reshape(jmap.grid_shape)
    hi_grid = np.log10(np.maximum(jmap.sigma_min_high, 1e-300)).reshape(jmap.grid_shape)
    vmin = float(min(lo_grid.min(), hi_grid.min()))
    vmax = float(max(lo_grid.max(), hi_grid.max()))
    size, gap = 280, 60
    w = 2 * size + 3 * gap
    h = size + 110
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.0f}" y="16" text-anchor="middle" font-size="13">'
        'log10 smallest singular value of the feature Jacobian</text>',
    ]
    _heat_panel(parts, lo_grid, gap, 44, size, f"accuracy {jmap.d1}", vmin, vmax)
    _heat_panel(parts, hi_grid, size + 2 * gap, 44, size, f"accuracy {jmap.d2}", vmin, vmax)
    # legend strip
    ly = 44 + size + 24
    lw = w - 2 * gap
    for i in range(100):
        parts.append(
            f'<rect x="{gap + lw * i / 100:.1f}" y="{ly}" width="{lw / 100 + 0.5:.1f}" '
            f'height="14" fill="{_viridis(i / 99)}"/>'
        )
    parts.append(f'<rect x="{gap}" y="{ly}" width="{lw}" height="14" fill="none" stroke="#444"/>')
    parts.append(f'<text x="{gap}" y="{ly + 28}">1e{vmin:.1f}</text>')
    parts.append(f'<text x="{gap + lw}" y="{ly + 28}" text-anchor="end">1e{vmax:.1f}</text>')
    parts.append('</svg>')
    _write(path, "\n".join(parts) + "\n")
