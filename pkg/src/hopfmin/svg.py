"""Minimal deterministic SVG rendering for meshes, maps, Hopf fields and
trajectory families.  Fixed canvas, fixed formatting, no external deps."""

from __future__ import annotations

import numpy as np

CANVAS = 800.0
MARGIN = 40.0


def _fmt(x):
    return format(float(x), ".6g")


class _Canvas:
    def __init__(self, bbox):
        (xmin, ymin), (xmax, ymax) = bbox
        span = max(xmax - xmin, ymax - ymin, 1e-12)
        self.scale = (CANVAS - 2 * MARGIN) / span
        self.xmin, self.ymin, self.ymax = xmin, ymin, ymax
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(CANVAS)}" '
            f'height="{int(CANVAS)}" viewBox="0 0 {int(CANVAS)} {int(CANVAS)}">']

    def pt(self, p):
        # flip y so the plane is drawn with y upward
        return (MARGIN + (p[0] - self.xmin) * self.scale,
                MARGIN + (self.ymax - p[1]) * self.scale)

    def polyline(self, pts, stroke="#333", width=1.0, fill="none", cls=None,
                 closed=False):
        s = " ".join(f"{_fmt(u)},{_fmt(v)}" for u, v in (self.pt(p) for p in pts))
        tag = "polygon" if closed else "polyline"
        c = f' class="{cls}"' if cls else ""
        self.parts.append(
            f'<{tag}{c} points="{s}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>')

    def circle(self, p, r=3.0, fill="#c00", cls=None):
        u, v = self.pt(p)
        c = f' class="{cls}"' if cls else ""
        self.parts.append(
            f'<circle{c} cx="{_fmt(u)}" cy="{_fmt(v)}" r="{_fmt(r)}" fill="{fill}"/>')

    def triangle(self, pts, fill):
        s = " ".join(f"{_fmt(u)},{_fmt(v)}" for u, v in (self.pt(p) for p in pts))
        self.parts.append(f'<polygon points="{s}" fill="{fill}" stroke="none"/>')

    def text(self, p, msg):
        u, v = self.pt(p)
        self.parts.append(f'<text x="{_fmt(u)}" y="{_fmt(v)}" font-size="14">{msg}</text>')

    def tostring(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _bbox(points):
    pts = np.asarray(points, dtype=float)
    return pts.min(axis=0), pts.max(axis=0)


def _heat(t):
    # blue -> red through white, t in [0, 1]
    t = min(max(float(t), 0.0), 1.0)
    if t < 0.5:
        u = t / 0.5
        r, g, b = int(255 * u), int(255 * u), 255
    else:
        u = (t - 0.5) / 0.5
        r, g, b = 255, int(255 * (1 - u)), int(255 * (1 - u))
    return f"rgb({r},{g},{b})"


def render_mesh(mesh):
    cv = _Canvas(_bbox(mesh.vertices))
    for tri in mesh.triangles:
        cv.polyline(mesh.vertices[tri], stroke="#888", width=0.6, closed=True)
    cv.polyline(mesh.vertices[mesh.boundary_loop], stroke="#000", width=1.5,
                closed=True)
    return cv.tostring()


def render_map(dmap, target_outline=None, flag_flips=True):
    """Wireframe of the image mesh over the target outline; triangles with
    nonpositive image area are highlighted."""
    from .geometry import triangle_areas
    pts = dmap.targets
    ref = [pts]
    if target_outline is not None:
        ref.append(np.asarray(target_outline, dtype=float))
    cv = _Canvas(_bbox(np.vstack(ref)))
    if target_outline is not None:
        cv.polyline(target_outline, stroke="#06c", width=2.0, closed=True)
    areas = triangle_areas(pts, dmap.reference.triangles)
    for tri, a in zip(dmap.reference.triangles, areas):
        bad = flag_flips and a <= 0
        cv.polyline(pts[tri], stroke="#c00" if bad else "#555",
                    width=1.4 if bad else 0.6, closed=True,
                    cls="flip" if bad else None)
    return cv.tostring()


def render_hopf(field):
    """|phi| heat map over the source mesh."""
    mesh = field.mesh
    mags = np.abs(field.phi)
    hi = float(mags.max()) if len(mags) else 1.0
    hi = hi if hi > 0 else 1.0
    cv = _Canvas(_bbox(mesh.vertices))
    for tri, m in zip(mesh.triangles, mags):
        cv.triangle(mesh.vertices[tri], _heat(m / hi))
    cv.polyline(mesh.vertices[mesh.boundary_loop], stroke="#000", width=1.5,
                closed=True)
    return cv.tostring()


def render_trajectories(domain, trajectories, marks=()):
    cv = _Canvas(_bbox(domain.vertices))
    cv.polyline(domain.vertices, stroke="#000", width=1.5, closed=True)
    for tr in trajectories:
        cv.polyline(tr.points, stroke="#06c", width=1.2, cls=tr.kind)
    for p in marks:
        cv.circle(p, r=3.0, fill="#c00")
    return cv.tostring()


def render_points_over_target(points, inside_mask, target_outline):
    """Choquet-style figure: vertices outside the target drawn distinctly."""
    cv = _Canvas(_bbox(np.vstack([points, target_outline])))
    cv.polyline(target_outline, stroke="#000", width=2.0, closed=True)
    for p, ok in zip(points, inside_mask):
        if ok:
            cv.circle(p, r=1.2, fill="#888", cls="inside")
        else:
            cv.circle(p, r=3.0, fill="#c00", cls="outside")
    return cv.tostring()


def render_empty(note):
    cv = _Canvas(((0.0, 0.0), (1.0, 1.0)))
    cv.text((0.05, 0.5), note)
    return cv.tostring()
