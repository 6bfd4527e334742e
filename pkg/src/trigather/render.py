"""SVG frames of a trace: grid patch, robots, bounding polygons and Q."""
from __future__ import annotations

import math
from collections import Counter
from pathlib import Path

from trigather.engine import Trace
from trigather.grid import OFFSETS, bounding_polygon

SCALE = 60.0  # pixels per figure unit (two doubled units)
MARGIN = 2  # doubled units of grid drawn around the polygon


def _frames(trace: Trace, every: int):
    """Yield ``(label, positions)`` for the initial state and every ``every``-th step.

    A step is one event, or one simultaneous batch.  The final state is
    always included.
    """
    robots = list(trace.initial_state.robots)
    yield "initial", list(robots)
    pending = []
    events = trace.events
    steps = 0
    for k, e in enumerate(events):
        if e.to is not None:
            pending.append((e.robot_id, e.to))
        batch_done = k + 1 == len(events) or events[k + 1].step != e.step
        if batch_done:
            for rid, to in pending:
                robots[rid] = to
            pending.clear()
            steps += 1
            if steps % every == 0 or k + 1 == len(events):
                yield f"event {k}", list(robots)


def render_frame(trace: Trace, robots, label: str) -> str:
    poly = bounding_polygon(trace.initial_state.robots)
    x0, x1 = poly.x_min - MARGIN, poly.x_max + MARGIN
    q = poly.Q
    y0, y1 = math.floor(poly.P[1]) - MARGIN, poly.y_top + MARGIN
    sx = SCALE / 2
    sy = SCALE / (2 * math.sqrt(3))
    width = (x1 - x0) * sx + 2 * SCALE
    height = (y1 - y0) * sy + 2 * SCALE

    def px(x, y) -> str:
        return f"{(float(x) - x0) * sx + SCALE:.2f},{(y1 - float(y)) * sy + SCALE:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.2f} {height:.2f}">',
        '<rect width="100%" height="100%" fill="white"/>',
        '<g stroke="#cccccc" stroke-width="0.8">',
    ]
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            if (x + y) % 2:
                continue
            for dx, dy in OFFSETS[:3]:  # downward edges only, each edge once
                nx, ny = x + dx, y + dy
                if x0 <= nx <= x1 and y0 <= ny <= y1:
                    a, b = px(x, y).split(","), px(nx, ny).split(",")
                    out.append(f'<line x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}"/>')
    out.append("</g>")
    c = poly.corners()
    outer = " ".join(px(*c[k]) for k in ("A", "B", "P", "C", "D"))
    inner = " ".join(px(*c[k]) for k in ("A", "B'", "Q", "C'", "D"))
    out.append(f'<polygon points="{outer}" fill="none" stroke="#e08080" '
               'stroke-width="1.5" stroke-dasharray="6,4"/>')
    out.append(f'<polygon points="{inner}" fill="none" stroke="#c00000" stroke-width="2"/>')
    qx, qy = (float(v) for v in px(q.x, q.y).split(","))
    out.append(f'<rect x="{qx - 7:.2f}" y="{qy - 7:.2f}" width="14" height="14" fill="#006400"/>')
    occ = Counter(robots)
    for pos in sorted(occ):
        cx, cy = px(pos.x, pos.y).split(",")
        out.append(f'<circle cx="{cx}" cy="{cy}" r="6" fill="black"/>')
        if occ[pos] > 1:
            out.append(f'<text x="{float(cx) + 8:.2f}" y="{float(cy) - 8:.2f}" '
                       f'font-size="11" font-family="monospace">{occ[pos]}</text>')
    out.append(f'<text x="10" y="20" font-size="14" font-family="monospace">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_trace(trace: Trace, out_dir, every: int = 1) -> list[Path]:
    if every < 1:
        raise ValueError("every must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, (label, robots) in enumerate(_frames(trace, every)):
        path = out_dir / f"frame_{i:05d}.svg"
        path.write_text(render_frame(trace, robots, label), encoding="utf-8")
        paths.append(path)
    return paths
