"""SVG error-bar charts.

Geometry is fixed so output is byte-stable: 90 px per group, a 260 px plot
area, 16 px caps, a filled circle at the mean. Groups without an interval
are drawn as a hollow circle (or omitted when they have no values at all).
Coordinates are printed with two decimals.
"""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

from .stats import GroupStats

GROUP_WIDTH = 90
PLOT_HEIGHT = 260
MARGIN_LEFT = 70
MARGIN_TOP = 40
MARGIN_BOTTOM = 50
CAP = 16
TICKS = 5


def _bounds(groups: Sequence[GroupStats]) -> tuple[float, float]:
    vals = []
    for g in groups:
        if g.mean is not None:
            vals.append(g.mean)
        if g.interval_defined:
            vals += [g.ci_low, g.ci_high]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi == lo:
        pad = abs(hi) * 0.1 or 1.0
    else:
        pad = (hi - lo) * 0.1
    return lo - pad, hi + pad


def errorbar_svg(groups: Sequence[GroupStats], title: str, ylabel: str = "") -> str:
    width = MARGIN_LEFT + GROUP_WIDTH * max(1, len(groups)) + 20
    height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM
    lo, hi = _bounds(groups)

    def y(v: float) -> float:
        return MARGIN_TOP + PLOT_HEIGHT * (hi - v) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{MARGIN_TOP + PLOT_HEIGHT}" stroke="black"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + PLOT_HEIGHT}" x2="{width - 20}" '
        f'y2="{MARGIN_TOP + PLOT_HEIGHT}" stroke="black"/>',
    ]
    for i in range(TICKS + 1):
        v = lo + (hi - lo) * i / TICKS
        yy = y(v)
        out.append(f'<line x1="{MARGIN_LEFT - 4}" y1="{yy:.2f}" x2="{MARGIN_LEFT}" y2="{yy:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_LEFT - 6}" y="{yy + 4:.2f}" text-anchor="end">{v:.4g}</text>')
    if ylabel:
        cy = MARGIN_TOP + PLOT_HEIGHT / 2
        out.append(f'<text x="14" y="{cy:.2f}" transform="rotate(-90 14 {cy:.2f})" '
                   f'text-anchor="middle">{escape(ylabel)}</text>')
    for i, g in enumerate(groups):
        cx = MARGIN_LEFT + GROUP_WIDTH * (i + 0.5)
        out.append(f'<text x="{cx:.2f}" y="{MARGIN_TOP + PLOT_HEIGHT + 18}" text-anchor="middle">'
                   f'{escape(g.group_label)}</text>')
        out.append(f'<text x="{cx:.2f}" y="{MARGIN_TOP + PLOT_HEIGHT + 32}" text-anchor="middle" '
                   f'fill="#555">n={g.n}</text>')
        if g.mean is None:
            continue
        if g.interval_defined:
            top, bot = y(g.ci_high), y(g.ci_low)
            out.append(f'<line x1="{cx:.2f}" y1="{top:.2f}" x2="{cx:.2f}" y2="{bot:.2f}" stroke="black"/>')
            for yy in (top, bot):
                out.append(f'<line x1="{cx - CAP / 2:.2f}" y1="{yy:.2f}" x2="{cx + CAP / 2:.2f}" '
                           f'y2="{yy:.2f}" stroke="black"/>')
            out.append(f'<circle cx="{cx:.2f}" cy="{y(g.mean):.2f}" r="3.5" fill="black"/>')
        else:
            out.append(f'<circle cx="{cx:.2f}" cy="{y(g.mean):.2f}" r="3.5" fill="none" stroke="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
