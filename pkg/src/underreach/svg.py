"""Static SVG plots of 2-D zonotope projections."""
import numpy as np

from underreach.formats import atomic_write_text
from underreach.zonotope import project, vertices_2d

WIDTH = HEIGHT = 480
MARGIN = 48


def closed_form_curves(samples=256):
    """Lower and upper boundary of the double-integrator reachable set at T = 1."""
    x = np.linspace(0.0, 1.0, samples)
    return np.column_stack([x, x**2 / 2]), np.column_stack([x, x - x**2 / 2 + 1])


def _bounds(point_sets):
    pts = [p for p in point_sets if len(p)]
    if not pts:
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    return lo - 0.05 * span, hi + 0.05 * span


def render_svg(zonotopes, dims=(0, 1), overlay=False):
    polys = [vertices_2d(project(Z, dims)) for Z in zonotopes]
    curves = closed_form_curves() if overlay else ()
    lo, hi = _bounds(list(polys) + list(curves))
    scale = np.array([WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN]) / (hi - lo)

    def to_px(p):
        q = (np.asarray(p) - lo) * scale
        return np.column_stack([MARGIN + q[:, 0], HEIGHT - MARGIN - q[:, 1]])

    def fmt(pts):
        return " ".join(f"{x:.3f},{y:.3f}" for x, y in to_px(pts))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black" stroke-width="1"/>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="11">{lo[0]:.4g}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="11" '
        f'text-anchor="end">{hi[0]:.4g}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" font-size="11" '
        f'text-anchor="end">{lo[1]:.4g}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 10}" font-size="11" '
        f'text-anchor="end">{hi[1]:.4g}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" text-anchor="middle">'
        f'x{dims[0] + 1}</text>',
        f'<text x="14" y="{HEIGHT / 2}" font-size="12" text-anchor="middle">x{dims[1] + 1}</text>',
    ]
    for poly in polys:
        if len(poly) >= 3:
            out.append(f'<polygon points="{fmt(poly)}" fill="#1f4e9c" fill-opacity="0.35" '
                       'stroke="#1f4e9c" stroke-width="0.8"/>')
        else:
            out.append(f'<polyline points="{fmt(poly)}" fill="none" stroke="#1f4e9c" '
                       'stroke-width="1.2"/>')
    for curve in curves:
        out.append(f'<polyline points="{fmt(curve)}" fill="none" stroke="#c0392b" '
                   'stroke-width="1.2" stroke-dasharray="4 2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(zonotopes, dims, path, overlay=False):
    """One filled polygon per zonotope projected on ``dims`` (0-based)."""
    atomic_write_text(path, render_svg(zonotopes, dims, overlay))
