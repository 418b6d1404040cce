"""Minimal self-contained SVG scatter plots (no plotting dependency, no timestamps)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import as_matrix

PALETTE = (
    "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
    "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0",
)

PANEL_SIZE = 300
MARGIN = 24


@dataclass
class Panel:
    """One scatter panel: groups of 2-D points, each group with one color."""

    title: str
    groups: list = field(default_factory=list)  # (points [K x 2], color)

    def add(self, points, color: str):
        self.groups.append((as_matrix(points, name="points"), color))
        return self


def project_2d(points) -> np.ndarray:
    """Orthographic projection for plotting: 3-D gets an oblique third axis."""
    P = as_matrix(points, name="points")
    if P.shape[1] == 2:
        return P
    if P.shape[1] == 3:
        return np.column_stack([
            P[:, 0] + 0.35 * P[:, 2],
            P[:, 1] + 0.35 * P[:, 2],
        ])
    return P[:, :2]


def color_for(label: int) -> str:
    return PALETTE[int(label) % len(PALETTE)]


def _bounds(panels):
    pts = [g[0] for panel in panels for g in panel.groups if g[0].size]
    if not pts:
        return -1.0, 1.0, -1.0, 1.0
    allp = np.vstack(pts)
    lo = allp.min(axis=0)
    hi = allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * span
    return lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1]


def scatter_svg(path, panels: list[Panel], radius: float = 2.0) -> None:
    """Write side-by-side scatter panels sharing one coordinate frame."""
    x0, x1, y0, y1 = _bounds(panels)
    inner = PANEL_SIZE - 2 * MARGIN
    width = PANEL_SIZE * len(panels)
    height = PANEL_SIZE + 18

    def sx(x, panel_idx):
        return panel_idx * PANEL_SIZE + MARGIN + inner * (x - x0) / (x1 - x0)

    def sy(y):
        return 18 + MARGIN + inner * (1.0 - (y - y0) / (y1 - y0))

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        cx = i * PANEL_SIZE + PANEL_SIZE / 2
        lines.append(
            f'<text x="{cx:.1f}" y="14" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{panel.title}</text>'
        )
        lines.append(
            f'<rect x="{i * PANEL_SIZE + MARGIN}" y="{18 + MARGIN}" '
            f'width="{inner}" height="{inner}" fill="none" stroke="#ccc"/>'
        )
        for points, color in panel.groups:
            for x, y in points:
                lines.append(
                    f'<circle cx="{sx(x, i):.2f}" cy="{sy(y):.2f}" r="{radius}" '
                    f'fill="{color}" fill-opacity="0.55"/>'
                )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
