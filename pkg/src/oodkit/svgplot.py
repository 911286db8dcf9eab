"""Minimal hand-rolled SVG scatter plots with covariance ellipses.

The renderer keeps an equal-aspect data-to-pixel mapping so rotated ellipses
stay geometrically faithful, and stamps the exact ellipse parameters into
data-* attributes so downstream checks can recover them without parsing
screen coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .gaussian import Ellipse

PALETTE = {
    "train": "#1f77b4",
    "id": "#2ca02c",
    "ood": "#d62728",
}
TAG_COLORS = ("#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")


@dataclass(frozen=True)
class Series:
    name: str
    points: np.ndarray  # (n, 2)
    color: str


@dataclass(frozen=True)
class _Transform:
    scale: float
    x0: float
    y0: float
    height: float

    def apply(self, xy) -> tuple[float, float]:
        px = self.x0 + (xy[0]) * self.scale
        py = self.height - (self.y0 + (xy[1]) * self.scale)
        return px, py


def _fit_transform(series: list[Series], ellipses: list[Ellipse],
                   width: int, height: int, margin: int) -> _Transform:
    xs, ys = [], []
    for s in series:
        if len(s.points):
            xs.extend([s.points[:, 0].min(), s.points[:, 0].max()])
            ys.extend([s.points[:, 1].min(), s.points[:, 1].max()])
    for e in ellipses:
        a, b = e.semi_axes
        hw = math.hypot(a * math.cos(e.angle), b * math.sin(e.angle))
        hh = math.hypot(a * math.sin(e.angle), b * math.cos(e.angle))
        xs.extend([e.center[0] - hw, e.center[0] + hw])
        ys.extend([e.center[1] - hh, e.center[1] + hh])
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    span_x = max(xmax - xmin, 1e-12)
    span_y = max(ymax - ymin, 1e-12)
    avail_w = width - 2 * margin
    avail_h = height - 2 * margin
    scale = min(avail_w / span_x, avail_h / span_y)
    x0 = margin + (avail_w - scale * span_x) / 2 - scale * xmin
    y0 = margin + (avail_h - scale * span_y) / 2 - scale * ymin
    return _Transform(scale, x0, y0, float(height))


def _g17(value: float) -> str:
    return format(float(value), ".17g")


def render_scatter(
    series: list[Series],
    ellipses: list[Ellipse],
    *,
    title: Optional[str] = None,
    timestamp: Optional[str] = None,
    width: int = 640,
    height: int = 640,
    margin: int = 60,
    point_radius: float = 3.0,
) -> str:
    """Render point series and covariance ellipses into an SVG document."""
    t = _fit_transform(series, ellipses, width, height, margin)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    if timestamp is not None:
        parts.append(f"<!-- generated {escape(timestamp)} -->")
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{escape(title)}</text>'
        )
    for s in series:
        parts.append(f'<g fill={quoteattr(s.color)} fill-opacity="0.75">')
        for xy in s.points:
            px, py = t.apply(xy)
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{point_radius:g}"/>')
        parts.append("</g>")
    for e in ellipses:
        px, py = t.apply(e.center)
        rx = e.semi_axes[0] * t.scale
        ry = e.semi_axes[1] * t.scale
        deg = -math.degrees(e.angle)  # screen y axis points down
        parts.append(
            f'<ellipse cx="{px:.2f}" cy="{py:.2f}" rx="{rx:.2f}" ry="{ry:.2f}" '
            f'transform="rotate({deg:.4f} {px:.2f} {py:.2f})" '
            'fill="none" stroke="black" stroke-width="1.5" '
            f'data-n-std={quoteattr(_g17(e.n_std))} '
            f'data-center-x={quoteattr(_g17(e.center[0]))} '
            f'data-center-y={quoteattr(_g17(e.center[1]))} '
            f'data-semi-axis-a={quoteattr(_g17(e.semi_axes[0]))} '
            f'data-semi-axis-b={quoteattr(_g17(e.semi_axes[1]))} '
            f'data-angle-rad={quoteattr(_g17(e.angle))}/>'
        )
    # legend, top-right
    for i, s in enumerate(series):
        y = margin / 2 + 18 * i
        parts.append(
            f'<rect x="{width - margin - 110}" y="{y - 9}" width="10" height="10" '
            f'fill={quoteattr(s.color)}/>'
        )
        parts.append(
            f'<text x="{width - margin - 95}" y="{y}" font-family="sans-serif" '
            f'font-size="12">{escape(s.name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
