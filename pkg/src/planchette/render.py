"""Deterministic SVG drawings of boards, scalar fields and trajectories."""

from __future__ import annotations

import numpy as np

from .board import BoardLayout, Grid

SCALE = 60.0
PAD = 20.0

# dark blue -> teal -> yellow
_RAMP = np.array([[68, 1, 84], [33, 145, 140], [253, 231, 37]], dtype=float)


def _color(v: float) -> str:
    v = min(max(v, 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(v), len(_RAMP) - 2)
    rgb = _RAMP[i] + (v - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(board: BoardLayout, field=None, grid: Grid | None = None, trajectory=None) -> str:
    """Board with goal labels, optional heatmap ``field`` on ``grid`` and polyline.

    ``field`` has shape ``grid.shape`` and is min-max scaled for coloring.
    ``trajectory`` is an ``(n, 2)`` array of positions.
    """
    x0, x1, y0, y1 = board.bounds
    width = (x1 - x0) * SCALE + 2 * PAD
    height = (y1 - y0) * SCALE + 2 * PAD

    def px(x):
        return PAD + (x - x0) * SCALE

    def py(y):
        return PAD + (y1 - y) * SCALE

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect x="{_fmt(PAD)}" y="{_fmt(PAD)}" width="{_fmt(width - 2 * PAD)}" '
        f'height="{_fmt(height - 2 * PAD)}" fill="#ffffff" stroke="#000000"/>',
    ]
    if field is not None:
        if grid is None:
            raise ValueError("a field needs its grid")
        values = np.asarray(field, dtype=float)
        lo, hi = float(values.min()), float(values.max())
        span = hi - lo if hi > lo else 1.0
        ex, ey = grid.edges
        out.append('<g id="field" stroke="none">')
        for i in range(len(ex) - 1):
            for j in range(len(ey) - 1):
                out.append(
                    f'<rect x="{_fmt(px(ex[i]))}" y="{_fmt(py(ey[j + 1]))}" '
                    f'width="{_fmt((ex[i + 1] - ex[i]) * SCALE)}" height="{_fmt((ey[j + 1] - ey[j]) * SCALE)}" '
                    f'fill="{_color((values[i, j] - lo) / span)}"/>'
                )
        out.append("</g>")
    if trajectory is not None and len(trajectory):
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in np.asarray(trajectory, dtype=float))
        out.append(f'<polyline id="trajectory" points="{pts}" fill="none" stroke="#d62728" stroke-width="1"/>')
    out.append('<g id="goals" font-family="sans-serif" font-size="11" text-anchor="middle">')
    for sym, (gx, gy) in zip(board.symbols, board.goals):
        out.append(f'<circle cx="{_fmt(px(gx))}" cy="{_fmt(py(gy))}" r="3" fill="#000000"/>')
        out.append(f'<text x="{_fmt(px(gx))}" y="{_fmt(py(gy) - 6)}">{sym}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
