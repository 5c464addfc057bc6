"""Deterministic SVG scatter plots of embedding coordinates.

Output is plain text with fixed number formatting and sorted iteration
order, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .exceptions import InputError

# Cycled by sorted group index; repeats past 12 groups.
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
    "#aec7e8",
    "#ffbb78",
)

WIDTH = 720
HEIGHT = 720
MARGIN_LEFT = 64
MARGIN_RIGHT = 24
MARGIN_TOP = 24
MARGIN_BOTTOM = 56


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Frame:
    """Affine map from data coordinates to the pixel plot area."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        self.x_lo, self.x_hi = self._bounds(xs)
        self.y_lo, self.y_hi = self._bounds(ys)
        self.px_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        self.px_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    @staticmethod
    def _bounds(values: np.ndarray) -> tuple[float, float]:
        # Zero-extent axes (single point, or no points at all) get a unit
        # band around the value so the map below stays well defined.
        if len(values) == 0:
            return -1.0, 1.0
        lo = float(values.min())
        hi = float(values.max())
        if hi == lo:
            return lo - 1.0, hi + 1.0
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        px = MARGIN_LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * self.px_w
        # SVG y runs downward; data y runs upward.
        py = MARGIN_TOP + (self.y_hi - y) / (self.y_hi - self.y_lo) * self.px_h
        return px, py


def scatter_svg(
    point_groups: Mapping[str, np.ndarray],
    x_label: str = "PC1",
    y_label: str = "PC2",
    point_radius: float = 3.0,
    centroid_radius: float = 11.0,
) -> str:
    """Scatter of 2-D points colored per group, with each group's centroid
    drawn as a labeled white circle on top.

    ``point_groups`` maps group label to an (m, 2) coordinate array; groups
    are drawn in sorted label order and colors cycle through ``PALETTE``.
    """
    groups = sorted(point_groups)
    arrays = {}
    for g in groups:
        a = np.asarray(point_groups[g], dtype=np.float64)
        a = np.atleast_2d(a)
        if a.ndim != 2 or a.shape[1] != 2:
            raise InputError(f"group {g!r}: expected (m, 2) coordinates, got {a.shape}")
        arrays[g] = a
    if arrays:
        stacked = np.concatenate(list(arrays.values()), axis=0)
        frame = _Frame(stacked[:, 0], stacked[:, 1])
    else:
        frame = _Frame(np.empty(0), np.empty(0))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        '<g font-family="sans-serif" font-size="12" fill="#222222">',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{frame.px_w}" '
        f'height="{frame.px_h}" fill="none" stroke="#444444"/>',
    ]

    # Extreme tick labels on each axis.
    x_axis_y = HEIGHT - MARGIN_BOTTOM + 16
    parts.append(
        f'<text x="{MARGIN_LEFT}" y="{x_axis_y}" text-anchor="middle">'
        f"{_xml_escape(format(frame.x_lo, '.3g'))}</text>"
    )
    parts.append(
        f'<text x="{WIDTH - MARGIN_RIGHT}" y="{x_axis_y}" text-anchor="middle">'
        f"{_xml_escape(format(frame.x_hi, '.3g'))}</text>"
    )
    parts.append(
        f'<text x="{MARGIN_LEFT - 6}" y="{HEIGHT - MARGIN_BOTTOM}" '
        f'text-anchor="end">{_xml_escape(format(frame.y_lo, ".3g"))}</text>'
    )
    parts.append(
        f'<text x="{MARGIN_LEFT - 6}" y="{MARGIN_TOP + 10}" text-anchor="end">'
        f"{_xml_escape(format(frame.y_hi, '.3g'))}</text>"
    )

    # Axis titles.
    parts.append(
        f'<text x="{MARGIN_LEFT + frame.px_w / 2:.1f}" y="{HEIGHT - 14}" '
        f'text-anchor="middle" font-size="14">{_xml_escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="18" y="{MARGIN_TOP + frame.px_h / 2:.1f}" text-anchor="middle" '
        f'font-size="14" transform="rotate(-90 18 {MARGIN_TOP + frame.px_h / 2:.1f})">'
        f"{_xml_escape(y_label)}</text>"
    )

    for gi, g in enumerate(groups):
        color = PALETTE[gi % len(PALETTE)]
        for row in arrays[g]:
            px, py = frame.to_px(float(row[0]), float(row[1]))
            parts.append(
                f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="{point_radius:g}" '
                f'fill="{color}" fill-opacity="0.7"/>'
            )

    # Centroids last so they sit on top of the point cloud.
    for gi, g in enumerate(groups):
        a = arrays[g]
        if len(a) == 0:
            continue
        color = PALETTE[gi % len(PALETTE)]
        cx, cy = frame.to_px(float(a[:, 0].mean()), float(a[:, 1].mean()))
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{centroid_radius:g}" '
            f'fill="#ffffff" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" '
            f'dominant-baseline="central" font-size="10">{_xml_escape(str(g))}</text>'
        )

    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
