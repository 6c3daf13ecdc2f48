"""Self-contained SVG line charts plus a machine-readable CSV twin.

No plotting dependency: the chart is assembled as plain SVG text.  Every
emitted file is a deterministic function of its inputs (fixed geometry,
fixed formatting, no timestamps), so identical data produces identical
bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

from ncring.errors import EmptySeries

__all__ = ["emit_plot"]

_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 160, 40, 55
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        return [10.0**k for k in range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)]
    span = hi - lo
    if span <= 0.0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / 4.0))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= 6.0:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * max(1.0, abs(hi)):
        ticks.append(t)
        t += step
    return ticks


def _tick_label(value: float, log: bool) -> str:
    if log:
        return f"1e{round(math.log10(value))}"
    return f"{value:g}"


def emit_plot(
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    axes: dict,
    path: str | Path,
) -> Path:
    """Write a line chart to `path` (SVG) and the same data to a sibling CSV.

    `series` is a list of (label, points) with points as (x, y) pairs;
    `axes` takes boolean keys x_log and y_log.  On log axes, points with a
    non-positive coordinate are dropped from the drawing (the drop count is
    recorded in an SVG comment) but kept in the CSV.  Returns the SVG path.
    """
    if not series:
        raise EmptySeries("no series to plot")
    for label, points in series:
        if len(points) < 2:
            raise EmptySeries(f"series {label!r} has fewer than 2 points")
    x_log = bool(axes.get("x_log", False))
    y_log = bool(axes.get("y_log", False))

    dropped = 0
    drawn: list[tuple[str, list[tuple[float, float]]]] = []
    for label, points in series:
        kept = []
        for x, y in points:
            if (x_log and x <= 0.0) or (y_log and y <= 0.0):
                dropped += 1
                continue
            kept.append((math.log10(x) if x_log else float(x),
                         math.log10(y) if y_log else float(y)))
        drawn.append((label, kept))

    xs = [p[0] for _, pts in drawn for p in pts]
    ys = [p[1] for _, pts in drawn for p in pts]
    if xs:
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
    else:
        x_lo = x_hi = y_lo = y_hi = 0.0
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0

    plot_l, plot_r = _MARGIN_L, _WIDTH - _MARGIN_R
    plot_t, plot_b = _MARGIN_T, _HEIGHT - _MARGIN_B

    def px(x: float) -> float:
        return plot_l + (x - x_lo) / (x_hi - x_lo) * (plot_r - plot_l)

    def py(y: float) -> float:
        return plot_b - (y - y_lo) / (y_hi - y_lo) * (plot_b - plot_t)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f"<!-- dropped {dropped} non-positive points for log axes -->",
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
    ]

    for t in _ticks(x_lo, x_hi, x_log):
        lx = math.log10(t) if x_log else t
        if lx < x_lo - 1e-12 or lx > x_hi + 1e-12:
            continue
        x = px(lx)
        lines.append(
            f'<line x1="{x:.2f}" y1="{plot_t}" x2="{x:.2f}" y2="{plot_b}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{x:.2f}" y="{plot_b + 18}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">{_tick_label(t, x_log)}</text>'
        )
    for t in _ticks(y_lo, y_hi, y_log):
        ly = math.log10(t) if y_log else t
        if ly < y_lo - 1e-12 or ly > y_hi + 1e-12:
            continue
        y = py(ly)
        lines.append(
            f'<line x1="{plot_l}" y1="{y:.2f}" x2="{plot_r}" y2="{y:.2f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{plot_l - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-size="12" font-family="sans-serif">{_tick_label(t, y_log)}</text>'
        )

    lines.append(
        f'<line x1="{plot_l}" y1="{plot_b}" x2="{plot_r}" y2="{plot_b}" '
        'stroke="#000000" stroke-width="1.5"/>'
    )
    lines.append(
        f'<line x1="{plot_l}" y1="{plot_t}" x2="{plot_l}" y2="{plot_b}" '
        'stroke="#000000" stroke-width="1.5"/>'
    )

    legend_y = plot_t + 10
    for i, (label, pts) in enumerate(drawn):
        color = _COLORS[i % len(_COLORS)]
        if pts:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            lines.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'
            )
        ly = legend_y + i * 20
        lines.append(
            f'<line x1="{plot_r + 14}" y1="{ly}" x2="{plot_r + 38}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        lines.append(
            f'<text x="{plot_r + 44}" y="{ly + 4}" text-anchor="start" '
            f'font-size="13" font-family="sans-serif">{_escape(label)}</text>'
        )
    lines.append("</svg>")

    svg_path = Path(path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    with open(svg_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    csv_path = svg_path.with_suffix(".csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("series,x,y\n")
        for label, points in series:
            for x, y in points:
                fh.write(f"{label},{float(x)!r},{float(y)!r}\n")
    return svg_path
