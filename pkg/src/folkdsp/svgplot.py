"""Dependency-free SVG scatter and curve plots.

Output is plain text with fixed-precision coordinates, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

WIDTH = 800
HEIGHT = 600
MARGIN = 70

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


def _scale(values: np.ndarray, lo: float, hi: float):
    vmin, vmax = float(values.min()), float(values.max())
    if vmax - vmin <= 0:
        vmin -= 0.5
        vmax += 0.5
    pad = 0.05 * (vmax - vmin)
    vmin -= pad
    vmax += pad

    def to_screen(v):
        return lo + (np.asarray(v, dtype=np.float64) - vmin) / (vmax - vmin) * (hi - lo)

    return to_screen


def _header(caption: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{caption}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="30" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{caption}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#888"/>',
    ]


def scatter_svg(points, groups, caption: str, centroids=None) -> str:
    """Scatter with one color per group and optional X-marked centroids."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    groups = list(groups)
    order = sorted(set(groups), key=str)
    color_of = {g: PALETTE[i % len(PALETTE)] for i, g in enumerate(order)}
    sx = _scale(points[:, 0], MARGIN, WIDTH - MARGIN)
    sy = _scale(points[:, 1], HEIGHT - MARGIN, MARGIN)  # flip: larger y plots higher

    parts = _header(caption)
    for (x, y), g in zip(points, groups):
        parts.append(
            f'<circle cx="{float(sx(x)):.2f}" cy="{float(sy(y)):.2f}" r="4" '
            f'fill="{color_of[g]}" fill-opacity="0.75"/>'
        )
    if centroids is not None:
        for cx, cy in np.atleast_2d(np.asarray(centroids, dtype=np.float64)):
            px, py = float(sx(cx)), float(sy(cy))
            parts.append(
                f'<path d="M {px - 7:.2f} {py - 7:.2f} L {px + 7:.2f} {py + 7:.2f} '
                f'M {px - 7:.2f} {py + 7:.2f} L {px + 7:.2f} {py - 7:.2f}" '
                f'stroke="black" stroke-width="3"/>'
            )
    for i, g in enumerate(order):
        y = MARGIN + 18 * (i + 1)
        parts.append(f'<circle cx="{WIDTH - MARGIN + 14}" cy="{y}" r="5" fill="{color_of[g]}"/>')
        parts.append(
            f'<text x="{WIDTH - MARGIN + 24}" y="{y + 4}" font-family="sans-serif" '
            f'font-size="11">{g}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def curve_svg(xs, series: dict, caption: str, x_label: str = "") -> str:
    """Line chart; each series is min-max normalized with its range in the legend."""
    xs = np.asarray(xs, dtype=np.float64)
    sx = _scale(xs, MARGIN, WIDTH - MARGIN)
    parts = _header(caption)
    for i, (name, values) in enumerate(series.items()):
        values = np.asarray(values, dtype=np.float64)
        sy = _scale(values, HEIGHT - MARGIN, MARGIN)
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{float(sx(x)):.2f},{float(sy(v)):.2f}" for x, v in zip(xs, values))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{MARGIN}" y="{HEIGHT - 18 - 16 * i}" font-family="sans-serif" '
            f'font-size="12" fill="{color}">{name} '
            f"(min {values.min():.6g}, max {values.max():.6g})</text>"
        )
    if x_label:
        parts.append(
            f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - MARGIN + 34}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{x_label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
