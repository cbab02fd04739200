"""Minimal deterministic SVG line charts.

Byte-stable output for fixed input: coordinates are always formatted with
two decimals, colors come from a fixed palette, and nothing depends on
runtime state — which makes rendered files directly comparable in
golden-file tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

_PLOT_LEFT = 38.0
_PLOT_RIGHT = 10.0
_PLOT_TOP = 24.0
_PLOT_BOTTOM = 20.0


@dataclass(frozen=True)
class Series:
    label: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    color: str

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise ValueError(f"series {self.label!r}: {len(self.xs)} xs but {len(self.ys)} ys")
        if not self.xs:
            raise ValueError(f"series {self.label!r} has no points")


@dataclass(frozen=True)
class Panel:
    title: str
    series: tuple[Series, ...]

    def __post_init__(self):
        if not self.series:
            raise ValueError(f"panel {self.title!r} has no series")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _limits(values: Sequence[float]) -> tuple[float, float]:
    low, high = min(values), max(values)
    if low == high:  # flat series: pad so the line sits mid-panel
        pad = max(abs(low) * 0.1, 0.5)
        return low - pad, high + pad
    return low, high


def _panel_svg(panel: Panel, origin_x: float, origin_y: float, width: float, height: float) -> list[str]:
    plot_x = origin_x + _PLOT_LEFT
    plot_y = origin_y + _PLOT_TOP
    plot_w = width - _PLOT_LEFT - _PLOT_RIGHT
    plot_h = height - _PLOT_TOP - _PLOT_BOTTOM

    x_min, x_max = _limits([x for series in panel.series for x in series.xs])
    y_min, y_max = _limits([y for series in panel.series for y in series.ys])

    def px(value: float) -> float:
        return plot_x + (value - x_min) / (x_max - x_min) * plot_w

    def py(value: float) -> float:
        return plot_y + plot_h - (value - y_min) / (y_max - y_min) * plot_h

    parts = [
        f'<rect x="{_fmt(plot_x)}" y="{_fmt(plot_y)}" width="{_fmt(plot_w)}" height="{_fmt(plot_h)}" '
        'fill="none" stroke="#cccccc" stroke-width="1"/>',
        f'<text x="{_fmt(origin_x + width / 2)}" y="{_fmt(origin_y + 15)}" text-anchor="middle" '
        f'class="title">{escape(panel.title)}</text>',
        f'<text x="{_fmt(plot_x - 4)}" y="{_fmt(plot_y + 8)}" text-anchor="end" class="tick">{y_max:.4g}</text>',
        f'<text x="{_fmt(plot_x - 4)}" y="{_fmt(plot_y + plot_h)}" text-anchor="end" class="tick">{y_min:.4g}</text>',
        f'<text x="{_fmt(plot_x)}" y="{_fmt(plot_y + plot_h + 13)}" text-anchor="start" class="tick">{x_min:.4g}</text>',
        f'<text x="{_fmt(plot_x + plot_w)}" y="{_fmt(plot_y + plot_h + 13)}" text-anchor="end" class="tick">{x_max:.4g}</text>',
    ]
    for series in panel.series:
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(series.xs, series.ys))
        parts.append(
            f'<polyline fill="none" stroke="{series.color}" stroke-width="1.5" points="{points}"/>'
        )
    return parts


def render_grid(
    panels: Sequence[Panel],
    *,
    columns: int = 5,
    panel_width: float = 230.0,
    panel_height: float = 170.0,
    legend: Sequence[tuple[str, str]] = (),
) -> str:
    """Lay panels out on a fixed grid and return the complete SVG document."""
    if not panels:
        raise ValueError("no panels to render")
    if columns < 1:
        raise ValueError("columns must be >= 1")
    rows = (len(panels) + columns - 1) // columns
    legend_height = 22.0 if legend else 0.0
    total_w = columns * panel_width
    total_h = rows * panel_height + legend_height

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(total_w)}" height="{_fmt(total_h)}" '
        f'viewBox="0 0 {_fmt(total_w)} {_fmt(total_h)}">',
        "<style>text{font-family:monospace}.title{font-size:11px}.tick{font-size:9px}"
        ".legend{font-size:11px}</style>",
        f'<rect x="0" y="0" width="{_fmt(total_w)}" height="{_fmt(total_h)}" fill="#ffffff"/>',
    ]
    offset = 8.0
    for label, color in legend:
        parts.append(f'<rect x="{_fmt(offset)}" y="6" width="14" height="10" fill="{color}"/>')
        parts.append(f'<text x="{_fmt(offset + 18)}" y="15" class="legend">{escape(label)}</text>')
        offset += 18 + 7 * len(label) + 16
    for index, panel in enumerate(panels):
        row, col = divmod(index, columns)
        parts.extend(_panel_svg(panel, col * panel_width, legend_height + row * panel_height, panel_width, panel_height))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
