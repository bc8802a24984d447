"""Deterministic SVG timeline of a pulse sequence: one lane per channel."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

from .sequence import PI, RAMAN, RYDBERG, TWO_PI, PulseSequence, duration

LANE_HEIGHT = 40
LANE_GAP = 20
LEFT = 80
TOP = 20
UNIT = 24  # pixels per tick

_FILL = {PI: "#f4a261", TWO_PI: "#e76f51", "raman": "#2a9d8f"}


def _label(ins) -> str:
    if ins.channel == RAMAN:
        return f"R q{ins.target}"
    return f"{'2π' if ins.role == TWO_PI else 'π'} q{ins.target}"


def _x(t: Fraction, unit: float) -> str:
    return f"{LEFT + float(t) * unit:.2f}"


def render_timeline(seq: PulseSequence, path=None, unit: float = UNIT) -> str:
    """SVG text; also written to ``path`` when given.

    Pulses are filled rectangles (width proportional to duration), retargets
    dashed outlines, and the axis is labelled in ticks.
    """
    total = duration(seq)
    width = LEFT + float(total) * unit + 40
    height = TOP + 2 * LANE_HEIGHT + LANE_GAP + 40
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2f}" height="{height}" '
        'font-family="sans-serif" font-size="10">'
    ]
    for k, name in enumerate((RYDBERG, RAMAN)):
        y = TOP + k * (LANE_HEIGHT + LANE_GAP)
        lines.append(f'<g class="lane" data-channel="{name}">')
        lines.append(f'<text x="8" y="{y + LANE_HEIGHT / 2 + 4}">{name.capitalize()}</text>')
        lines.append(
            f'<line x1="{LEFT}" y1="{y + LANE_HEIGHT}" x2="{width - 20:.2f}" y2="{y + LANE_HEIGHT}" stroke="#999"/>'
        )
        for ins in seq.channel(name):
            x = _x(ins.t_start, unit)
            w = f"{float(ins.duration) * unit:.2f}"
            if ins.is_pulse:
                fill = _FILL.get(ins.role, "#888")
                lines.append(
                    f'<rect class="pulse" x="{x}" y="{y + 4}" width="{w}" height="{LANE_HEIGHT - 8}" '
                    f'fill="{fill}" stroke="#333"/>'
                )
                cx = LEFT + float(ins.t_start + ins.duration / 2) * unit
                lines.append(
                    f'<text x="{cx:.2f}" y="{y + LANE_HEIGHT / 2 + 4}" text-anchor="middle">{escape(_label(ins))}</text>'
                )
            else:
                lines.append(
                    f'<rect class="retarget" x="{x}" y="{y + 4}" width="{w}" height="{LANE_HEIGHT - 8}" '
                    'fill="none" stroke="#333" stroke-dasharray="4 3"/>'
                )
        lines.append("</g>")
    axis_y = TOP + 2 * LANE_HEIGHT + LANE_GAP + 14
    step = max(1, int(total) // 20) if total else 1
    tick = 0
    while tick <= total:
        x = _x(Fraction(tick), unit)
        lines.append(f'<text class="tick" x="{x}" y="{axis_y}" text-anchor="middle">{tick}</text>')
        tick += step
    lines.append("</svg>")
    svg = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(svg, encoding="utf-8")
    return svg
