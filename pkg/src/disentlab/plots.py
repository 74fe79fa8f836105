"""Dependency-free SVG rendering for heat maps and line charts.

Layout constants are fixed and every number is formatted explicitly, so a
given input always renders to byte-identical SVG text. That keeps report
artifacts diffable without pulling in a plotting package.
"""

from __future__ import annotations

import math

import numpy as np

CELL = 36  # heat-map cell edge, px
NAN_FILL = "#b0b0b0"
SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_LOW = (247, 251, 255)  # near-white
_HIGH = (8, 48, 107)  # dark blue

_FONT = 'font-family="monospace"'


def _esc(text) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _fill(t: float) -> str:
    """Hex color on the linear near-white-to-blue ramp, t clipped to [0, 1]."""
    u = min(max(float(t), 0.0), 1.0)
    return "#%02x%02x%02x" % tuple(
        round(lo + (hi - lo) * u) for lo, hi in zip(_LOW, _HIGH)
    )


def _labels_or_indices(labels, n: int, what: str) -> list[str]:
    if not labels:
        return [str(i) for i in range(n)]
    labels = [str(v) for v in labels]
    if len(labels) != n:
        raise ValueError(f"expected {n} {what} labels, got {len(labels)}")
    return labels


def heatmap_svg(values, row_labels=(), col_labels=(), title: str = "") -> str:
    """Render a matrix as a colored grid with the cell values printed.

    Color encodes the value on a linear ramp between the finite minimum and
    maximum; non-finite cells are drawn gray with no printed value.
    """
    m = np.asarray(values, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a nonempty 2-d array, got shape {m.shape}")
    rows = _labels_or_indices(row_labels, m.shape[0], "row")
    cols = _labels_or_indices(col_labels, m.shape[1], "column")

    finite = m[np.isfinite(m)]
    lo = float(finite.min()) if finite.size else 0.0
    span = float(finite.max()) - lo if finite.size else 0.0

    left = 12 + 7 * max(len(v) for v in rows)
    top = 30 + 7 * max(len(v) for v in cols)
    width = left + CELL * m.shape[1] + 16
    height = top + CELL * m.shape[0] + 16
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{width // 2}" y="16" {_FONT} font-size="13" '
            f'text-anchor="middle">{_esc(title)}</text>'
        )
    for j, name in enumerate(cols):
        x = left + CELL * j + CELL // 2
        out.append(
            f'<text x="{x}" y="{top - 6}" {_FONT} font-size="10" text-anchor="end" '
            f'transform="rotate(-45 {x} {top - 6})">{_esc(name)}</text>'
        )
    for i, name in enumerate(rows):
        y = top + CELL * i + CELL // 2 + 4
        out.append(
            f'<text x="{left - 6}" y="{y}" {_FONT} font-size="10" '
            f'text-anchor="end">{_esc(name)}</text>'
        )
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            x, y = left + CELL * j, top + CELL * i
            v = m[i, j]
            if not math.isfinite(v):
                out.append(
                    f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                    f'fill="{NAN_FILL}" stroke="white"/>'
                )
                continue
            t = (v - lo) / span if span > 0.0 else 0.5
            text_fill = "white" if t > 0.6 else "black"
            out.append(
                f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{_fill(t)}" stroke="white"/>'
            )
            out.append(
                f'<text x="{x + CELL // 2}" y="{y + CELL // 2 + 3}" {_FONT} '
                f'font-size="9" text-anchor="middle" fill="{text_fill}">{v:.3g}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_chart_svg(
    xs,
    series,
    labels=(),
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 640,
    height: int = 400,
) -> str:
    """Render one or more series against a shared x axis.

    `series` is a sequence of y vectors, each aligned with `xs`; non-finite y
    values break the polyline into separate segments.
    """
    x = np.asarray(xs, dtype=float)
    ys = [np.asarray(s, dtype=float) for s in series]
    if x.ndim != 1 or x.size < 1 or not ys:
        raise ValueError("need a nonempty x vector and at least one series")
    for s in ys:
        if s.shape != x.shape:
            raise ValueError(f"series shape {s.shape} does not match x shape {x.shape}")
    names = _labels_or_indices(labels, len(ys), "series")

    stacked = np.concatenate(ys)
    finite = stacked[np.isfinite(stacked)]
    if finite.size == 0:
        raise ValueError("all series values are non-finite")
    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo, y_hi = float(finite.min()), float(finite.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    left, right, top, bottom = 72, 24, 36, 48
    plot_w, plot_h = width - left - right, height - top - bottom

    def px(v: float) -> float:
        return left + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return top + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="black"/>',
    ]
    if title:
        out.append(
            f'<text x="{width // 2}" y="20" {_FONT} font-size="13" '
            f'text-anchor="middle">{_esc(title)}</text>'
        )
    for tick in np.linspace(x_lo, x_hi, 5):
        tx = px(tick)
        out.append(
            f'<line x1="{tx:.2f}" y1="{top + plot_h}" x2="{tx:.2f}" '
            f'y2="{top + plot_h + 5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{tx:.2f}" y="{top + plot_h + 18}" {_FONT} font-size="10" '
            f'text-anchor="middle">{tick:.4g}</text>'
        )
    for tick in np.linspace(y_lo, y_hi, 5):
        ty = py(tick)
        out.append(
            f'<line x1="{left - 5}" y1="{ty:.2f}" x2="{left}" y2="{ty:.2f}" '
            f'stroke="black"/>'
        )
        out.append(
            f'<text x="{left - 8}" y="{ty:.2f}" {_FONT} font-size="10" '
            f'text-anchor="end">{tick:.4g}</text>'
        )
    if x_label:
        out.append(
            f'<text x="{left + plot_w // 2}" y="{height - 10}" {_FONT} '
            f'font-size="11" text-anchor="middle">{_esc(x_label)}</text>'
        )
    if y_label:
        out.append(
            f'<text x="16" y="{top + plot_h // 2}" {_FONT} font-size="11" '
            f'text-anchor="middle" transform="rotate(-90 16 {top + plot_h // 2})">'
            f"{_esc(y_label)}</text>"
        )
    for idx, (s, name) in enumerate(zip(ys, names)):
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        segment: list[str] = []
        segments: list[list[str]] = []
        for xv, yv in zip(x, s):
            if math.isfinite(yv):
                segment.append(f"{px(xv):.2f},{py(yv):.2f}")
            elif segment:
                segments.append(segment)
                segment = []
        if segment:
            segments.append(segment)
        for seg in segments:
            if len(seg) == 1:
                cx, cy = seg[0].split(",")
                out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
            else:
                out.append(
                    f'<polyline points="{" ".join(seg)}" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"/>'
                )
        ly = top + 14 + 14 * idx
        out.append(
            f'<line x1="{left + plot_w - 120}" y1="{ly - 4}" x2="{left + plot_w - 100}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{left + plot_w - 94}" y="{ly}" {_FONT} '
            f'font-size="10">{_esc(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, svg: str) -> None:
    """Write SVG text with LF line endings regardless of platform."""
    with open(path, "w", newline="") as fh:
        fh.write(svg)
