"""Schedule charts: a shared segment layout rendered as text or SVG.

Both renderers draw from the same :func:`layout` result, so their segment
boundaries are identical by construction.  Machines are rows; each batch is
one setup segment (labeled by family) followed by one op segment per member;
job completion times are marked on the time axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import Instance, Schedule, check_feasibility, evaluate

__all__ = ["Segment", "Layout", "layout", "render_text", "render_svg"]


@dataclass(frozen=True)
class Segment:
    machine: int
    batch: int
    start: int
    end: int
    kind: str               # "setup" | "op"
    family: int
    op: Optional[int]       # None for setup segments

    @property
    def label(self) -> str:
        return f"f{self.family}" if self.kind == "setup" else str(self.op)


@dataclass(frozen=True)
class Layout:
    segments: tuple[Segment, ...]
    job_completions: dict[int, int]
    cmax: int
    twct: int


def layout(inst: Instance, sched: Schedule) -> Layout:
    """Compute drawable segments; rejects infeasible schedules."""
    violations = check_feasibility(inst, sched)
    if violations:
        detail = "; ".join(v.message for v in violations)
        raise ValueError(f"cannot render an infeasible schedule: {detail}")
    res = evaluate(inst, sched)
    segments: list[Segment] = []
    for k, b, batch in sched.batches():
        members = [inst.op(i) for i in batch.ops]
        start = res.batch_start[k - 1][b - 1]
        setup = inst.family(batch.family).s
        segments.append(Segment(k, b, start, start + setup, "setup",
                                batch.family, None))
        t = start + setup
        for op in members:
            segments.append(Segment(k, b, t, t + op.p, "op",
                                    batch.family, op.id))
            t += op.p
    return Layout(tuple(segments), dict(res.job_completion), res.cmax,
                  res.twct)


# ----------------------------------------------------------------- text

def render_text(inst: Instance, sched: Schedule, width: int = 100) -> str:
    lay = layout(inst, sched)
    scale = width / max(lay.cmax, 1)

    def col(t: int) -> int:
        return round(t * scale)

    lines = []
    for m in inst.machines:
        row = [" "] * (width + 1)
        for seg in lay.segments:
            if seg.machine != m.id:
                continue
            a, b = col(seg.start), col(seg.end)
            fill = "=" if seg.kind == "setup" else "#"
            for x in range(a, max(b, a + 1)):
                if x <= width:
                    row[x] = fill
            label = seg.label
            if b - a - 1 >= len(label):
                for ix, ch in enumerate(label):
                    row[a + 1 + ix] = ch
        lines.append(f"M{m.id:<2}|" + "".join(row) + "|")
    marks = [" "] * (width + 1)
    for j, cj in sorted(lay.job_completions.items()):
        marks[col(cj)] = "^"
    lines.append("   |" + "".join(marks) + "|")
    lines.append(f"   0{'':>{width - len(str(lay.cmax))}}{lay.cmax}")
    legend = "  ".join(f"J{j}:{c}" for j, c in
                       sorted(lay.job_completions.items()))
    lines.append(f"jobs {legend}   twct {lay.twct}")
    return "\n".join(lines)


# ------------------------------------------------------------------ svg

_PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
            "#76b7b2", "#edc948", "#9c755f"]

_ROW_H = 34
_BAR_H = 22
_LEFT = 46
_TOP = 16
_AXIS_H = 48


def render_svg(inst: Instance, sched: Schedule, width: int = 900) -> str:
    lay = layout(inst, sched)
    n_m = len(inst.machines)
    chart_w = width - _LEFT - 16
    scale = chart_w / max(lay.cmax, 1)
    height = _TOP + n_m * _ROW_H + _AXIS_H

    def x(t: float) -> float:
        return _LEFT + t * scale

    def y(k: int) -> float:
        return _TOP + (k - 1) * _ROW_H

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{width}" height="{height}" '
           f'font-family="monospace" font-size="11">']
    for m in inst.machines:
        out.append(f'<text x="4" y="{y(m.id) + _BAR_H / 2 + 4:.1f}">'
                   f'M{m.id}</text>')
        out.append(f'<line x1="{_LEFT}" y1="{y(m.id) + _BAR_H / 2:.1f}" '
                   f'x2="{x(lay.cmax):.1f}" y2="{y(m.id) + _BAR_H / 2:.1f}" '
                   f'stroke="#ddd"/>')
    for seg in lay.segments:
        color = _PALETTE[(seg.family - 1) % len(_PALETTE)]
        extra = ' fill-opacity="0.35"' if seg.kind == "setup" else ""
        out.append(
            f'<rect x="{x(seg.start):.1f}" y="{y(seg.machine):.1f}" '
            f'width="{max((seg.end - seg.start) * scale, 1):.1f}" '
            f'height="{_BAR_H}" fill="{color}" stroke="#333"{extra}/>')
        out.append(
            f'<text x="{x(seg.start) + 2:.1f}" '
            f'y="{y(seg.machine) + _BAR_H - 7:.1f}">{seg.label}</text>')
    axis_y = _TOP + n_m * _ROW_H + 8
    out.append(f'<line x1="{_LEFT}" y1="{axis_y}" x2="{x(lay.cmax):.1f}" '
               f'y2="{axis_y}" stroke="#333"/>')
    for t in (0, lay.cmax):
        out.append(f'<text x="{x(t):.1f}" y="{axis_y + 14}">{t}</text>')
    for j, cj in sorted(lay.job_completions.items()):
        out.append(f'<line x1="{x(cj):.1f}" y1="{_TOP}" x2="{x(cj):.1f}" '
                   f'y2="{axis_y}" stroke="#888" stroke-dasharray="3,3"/>')
        out.append(f'<text x="{x(cj):.1f}" y="{axis_y + 28}">'
                   f'J{j}={cj}</text>')
    out.append(f'<text x="{_LEFT}" y="{height - 4}">twct {lay.twct} '
               f'cmax {lay.cmax}</text>')
    out.append("</svg>")
    return "\n".join(out)
