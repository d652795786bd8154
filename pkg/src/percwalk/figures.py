"""Static SVG emission: sample paths with regeneration marks, and cluster
windows with traps shaded and closed dual bonds ticked.

Documents are built by string assembly with fixed 2-decimal coordinate
formatting and scan-order element emission, so identical inputs yield
byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .lattice import Rect, Site
from .structure import GoodnessMap, classify, traps_in
from .walk import EpochAnnotations, Trajectory

PATH_W, PATH_H = 880, 320
MARGIN = 24
#: polyline vertices above this are thinned by a uniform stride
MAX_PATH_POINTS = 20_000


def _f(v: float) -> str:
    return f"{v:.2f}"


def _svg_open(width: int, height: int) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def render_path_figure(
    traj: Trajectory,
    annotations: EpochAnnotations | None = None,
    label: str | None = None,
    width: int = PATH_W,
    height: int = PATH_H,
    max_points: int = MAX_PATH_POINTS,
) -> str:
    """Trajectory polyline in lattice coordinates with a vertical gray line
    at the X-level of every regeneration epoch."""
    X, Y = traj.X, traj.Y
    x_lo, x_hi = int(X.min()), int(X.max())
    y_lo, y_hi = int(Y.min()), int(Y.max())
    sx = (width - 2 * MARGIN) / max(x_hi - x_lo, 1)
    sy = (height - 2 * MARGIN) / max(y_hi - y_lo, 1)

    def px(x):
        return MARGIN + (x - x_lo) * sx

    def py(y):
        # SVG y grows downward
        return height - MARGIN - (y - y_lo) * sy

    out = _svg_open(width, height)
    if annotations is not None:
        for n in annotations.regeneration:
            x = _f(px(int(X[n])))
            out.append(
                f'<line class="regen" x1="{x}" y1="{MARGIN}" x2="{x}" '
                f'y2="{height - MARGIN}" stroke="#b0b0b0" stroke-width="1"/>'
            )
    stride = max(1, -(-X.size // max_points))
    idx = np.arange(0, X.size, stride)
    if idx[-1] != X.size - 1:
        idx = np.append(idx, X.size - 1)
    pts = " ".join(f"{_f(px(X[i]))},{_f(py(Y[i]))}" for i in idx)
    out.append(
        f'<polyline class="path" points="{pts}" fill="none" '
        f'stroke="#1a4d8f" stroke-width="1.2"/>'
    )
    if label:
        out.append(
            f'<text x="{MARGIN}" y="{MARGIN - 8}" font-family="sans-serif" '
            f'font-size="13" fill="#333333">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out)


def render_trap_figure(
    gmap: GoodnessMap,
    label: str | None = None,
    cell: float = 12.0,
    include_truncated: bool = False,
) -> str:
    """Cluster window with open edges drawn, closed dual bonds ticked, and
    each trap emitted as one <g class="trap"> of shaded site squares."""
    region = gmap.region
    r = gmap.rect
    win = gmap.window
    width = int(region.nx * cell + 2 * MARGIN)
    height = int(region.ny * cell + 2 * MARGIN)

    def px(x):
        return MARGIN + (x - region.x_min + 0.5) * cell

    def py(y):
        return height - MARGIN - (y - region.y_min + 0.5) * cell

    out = _svg_open(width, height)
    # open edges, scan order; only segments with both endpoints in region
    for x in range(region.x_min, region.x_max + 1):
        for y in range(region.y_min, region.y_max + 1):
            ix, iy = x - r.x_min, y - r.y_min
            if x + 1 <= region.x_max and win.h_inside[ix, iy]:
                out.append(
                    f'<line class="open" x1="{_f(px(x))}" y1="{_f(py(y))}" '
                    f'x2="{_f(px(x + 1))}" y2="{_f(py(y))}" '
                    f'stroke="#9db4c8" stroke-width="1.5"/>'
                )
            if y + 1 <= region.y_max and win.v_inside[ix, iy]:
                out.append(
                    f'<line class="open" x1="{_f(px(x))}" y1="{_f(py(y))}" '
                    f'x2="{_f(px(x))}" y2="{_f(py(y + 1))}" '
                    f'stroke="#9db4c8" stroke-width="1.5"/>'
                )
    # closed dual bonds: a tick through the midpoint, perpendicular to the edge
    t = 0.3 * cell
    for x in range(region.x_min, region.x_max + 1):
        for y in range(region.y_min, region.y_max + 1):
            ix, iy = x - r.x_min, y - r.y_min
            if x + 1 <= region.x_max and not win.h_inside[ix, iy]:
                mx, my = px(x + 0.5), py(y)
                out.append(
                    f'<line class="dual" x1="{_f(mx)}" y1="{_f(my - t)}" '
                    f'x2="{_f(mx)}" y2="{_f(my + t)}" '
                    f'stroke="#c0392b" stroke-width="1"/>'
                )
            if y + 1 <= region.y_max and not win.v_inside[ix, iy]:
                mx, my = px(x), py(y + 0.5)
                out.append(
                    f'<line class="dual" x1="{_f(mx - t)}" y1="{_f(my)}" '
                    f'x2="{_f(mx + t)}" y2="{_f(my)}" '
                    f'stroke="#c0392b" stroke-width="1"/>'
                )
    # traps last so the shading sits on top; one group per component; only
    # components intersecting the drawn region (the support window is larger)
    half = 0.42 * cell
    for trap in traps_in(gmap, include_truncated=include_truncated):
        if not any(region.contains(s) for s in trap.sites):
            continue
        out.append('<g class="trap">')
        for s in sorted(trap.sites):
            out.append(
                f'<rect x="{_f(px(s.x) - half)}" y="{_f(py(s.y) - half)}" '
                f'width="{_f(2 * half)}" height="{_f(2 * half)}" '
                f'fill="#e67e22" fill-opacity="0.75"/>'
            )
        out.append("</g>")
    if label:
        out.append(
            f'<text x="{MARGIN}" y="{MARGIN - 8}" font-family="sans-serif" '
            f'font-size="13" fill="#333333">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out)


def emit_figure(
    traj: Trajectory | None,
    annotations: EpochAnnotations | None,
    style: str,
    gmap: GoodnessMap | None = None,
    label: str | None = None,
) -> str:
    """Dispatch on style: 'path' draws traj with regeneration lines,
    'traps' draws the classified window held by gmap."""
    if style == "path":
        if traj is None:
            raise ParameterError("path figure needs a trajectory")
        return render_path_figure(traj, annotations, label=label)
    if style == "traps":
        if gmap is None:
            raise ParameterError("trap figure needs a classified window")
        return render_trap_figure(gmap, label=label)
    raise ParameterError(f"unknown figure style {style!r}")
