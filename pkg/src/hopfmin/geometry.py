"""Polygonal domains, triangle meshes and boundary correspondences.

Everything downstream (maps, energies, Hopf fields) lives on the meshes
built here.  Domains are simple polygons with counterclockwise boundary;
curved shapes are inscribed polygons.  Meshing is deterministic: the same
domain and edge target always produce the same mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay


class GeometryError(ValueError):
    """Invalid domain, mesh, or boundary-map input."""


# ---------------------------------------------------------------------------
# small planar helpers
# ---------------------------------------------------------------------------

def as_complex(points):
    """View an (N, 2) float array as complex numbers x + iy."""
    pts = np.asarray(points, dtype=float)
    return pts[..., 0] + 1j * pts[..., 1]


def as_xy(z):
    """Inverse of :func:`as_complex`."""
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1)


def polygon_area(vertices):
    """Signed shoelace area of a closed polygon (CCW positive)."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def triangle_areas(vertices, triangles):
    v = np.asarray(vertices, dtype=float)
    t = np.asarray(triangles)
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def points_in_polygon(points, polygon):
    """Even-odd crossing test, vectorized over points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    px, py = poly[:, 0], poly[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    for k in range(len(poly)):
        x0, y0, x1, y1 = px[k], py[k], qx[k], qy[k]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xi)
    return inside


def distance_to_polygon(points, polygon):
    """Unsigned distance from each point to the polygon boundary."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(polygon, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a                                        # (E,2)
    pa = pts[:, None, :] - a[None, :, :]              # (P,E,2)
    denom = np.einsum("ej,ej->e", ab, ab)
    t = np.clip(np.einsum("pej,ej->pe", pa, ab) / denom, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    d = np.linalg.norm(pts[:, None, :] - closest, axis=2)
    return d.min(axis=1)


def winding_number(loop_points, probe):
    """Winding of a closed polyline around a probe point (in turns)."""
    z = as_complex(loop_points) - complex(probe[0], probe[1])
    ang = np.angle(np.roll(z, -1) / z)
    return float(np.sum(ang) / (2.0 * np.pi))


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """A simple polygon with CCW boundary.

    ``kind`` records how the polygon was built ("rectangle", "disk-polygon"
    or "polygon"); ``convex`` is computed, never trusted from the caller.
    """

    kind: str
    vertices: np.ndarray
    convex: bool

    @property
    def area(self):
        return polygon_area(self.vertices)

    @property
    def perimeter(self):
        v = self.vertices
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    @property
    def diameter(self):
        v = self.vertices
        lo, hi = v.min(axis=0), v.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def contains(self, points):
        return points_in_polygon(points, self.vertices)

    def interior_point(self):
        """A deterministic point strictly inside the polygon."""
        v = self.vertices
        # centroid works for convex shapes; otherwise probe triangle fans
        c = v.mean(axis=0)
        if points_in_polygon(c[None], v)[0]:
            return c
        for i in range(1, len(v) - 1):
            p = (v[0] + v[i] + v[i + 1]) / 3.0
            if points_in_polygon(p[None], v)[0]:
                return p
        raise GeometryError("could not find an interior point")


def _is_convex(vertices):
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    scale = np.max(np.abs(cross)) if len(cross) else 1.0
    return bool(np.all(cross >= -1e-12 * max(scale, 1.0)))


def _check_simple(vertices):
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = v[j], v[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                raise GeometryError(
                    f"polygon is self-intersecting: edge {i} crosses edge {j}")


def make_domain(kind, *, n=64, radius=1.0, w=1.0, h=1.0, vertices=None):
    """Build a :class:`Domain`.

    kinds: ``rectangle(w, h)``, ``disk-polygon(n, radius)`` (inscribed
    regular n-gon), ``polygon(vertices)``.  Rejects self-intersecting
    input; clockwise input is reversed to CCW.
    """
    if kind == "rectangle":
        if w <= 0 or h <= 0:
            raise GeometryError("rectangle needs positive side lengths")
        verts = np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    elif kind == "disk-polygon":
        if n < 3 or radius <= 0:
            raise GeometryError("disk-polygon needs n >= 3, radius > 0")
        ang = 2.0 * np.pi * np.arange(n) / n
        verts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    elif kind == "polygon":
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
            raise GeometryError("polygon needs at least 3 planar vertices")
        if np.any(np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1) == 0.0):
            raise GeometryError("polygon has a repeated consecutive vertex")
    else:
        raise GeometryError(f"unknown domain kind {kind!r}")

    _check_simple(verts)
    if polygon_area(verts) < 0:
        verts = verts[::-1].copy()
    if polygon_area(verts) <= 0:
        raise GeometryError("degenerate polygon (zero area)")
    return Domain(kind=kind, vertices=verts, convex=_is_convex(verts))


# ---------------------------------------------------------------------------
# triangle meshes
# ---------------------------------------------------------------------------

class TriangleMesh:
    """Triangulation of a polygonal region.

    vertices : (V, 2) float array
    triangles : (T, 3) int array, CCW orientation
    boundary_loop : (B,) int array, one CCW traversal of the boundary
    """

    def __init__(self, vertices, triangles, boundary_loop, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_loop = np.ascontiguousarray(boundary_loop, dtype=np.int64)
        self._cache = {}
        if validate:
            self._validate()

    # -- derived quantities -------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def vertices_z(self):
        if "z" not in self._cache:
            self._cache["z"] = as_complex(self.vertices)
        return self._cache["z"]

    @property
    def areas(self):
        if "areas" not in self._cache:
            self._cache["areas"] = triangle_areas(self.vertices, self.triangles)
        return self._cache["areas"]

    @property
    def total_area(self):
        return float(np.sum(self.areas))

    @property
    def boundary_mask(self):
        if "bmask" not in self._cache:
            m = np.zeros(self.n_vertices, dtype=bool)
            m[self.boundary_loop] = True
            self._cache["bmask"] = m
        return self._cache["bmask"]

    @property
    def interior_vertices(self):
        return np.nonzero(~self.boundary_mask)[0]

    @property
    def edge_lengths(self):
        v, t = self.vertices, self.triangles
        out = []
        for i, j in ((0, 1), (1, 2), (2, 0)):
            out.append(np.linalg.norm(v[t[:, j]] - v[t[:, i]], axis=1))
        return np.stack(out, axis=1)

    def _edge_dict(self):
        if "edges" not in self._cache:
            edges = {}
            for ti, tri in enumerate(self.triangles):
                for k in range(3):
                    e = (int(tri[k]), int(tri[(k + 1) % 3]))
                    edges.setdefault(frozenset(e), []).append((ti, k))
            self._cache["edges"] = edges
        return self._cache["edges"]

    @property
    def tri_neighbors(self):
        """(T, 3) neighbor triangle across edge k -> k+1; -1 on boundary."""
        if "neigh" not in self._cache:
            edges = self._edge_dict()
            neigh = np.full((self.n_triangles, 3), -1, dtype=np.int64)
            for e, owners in edges.items():
                if len(owners) == 2:
                    (t0, k0), (t1, k1) = owners
                    neigh[t0, k0] = t1
                    neigh[t1, k1] = t0
            self._cache["neigh"] = neigh
        return self._cache["neigh"]

    @property
    def vertex_triangles(self):
        """Incidence lists: triangles containing each vertex."""
        if "v2t" not in self._cache:
            v2t = [[] for _ in range(self.n_vertices)]
            for ti, tri in enumerate(self.triangles):
                for v in tri:
                    v2t[v].append(ti)
            self._cache["v2t"] = v2t
        return self._cache["v2t"]

    def vertex_ring(self, v):
        """Ordered CCW neighbor loop of an interior vertex.

        Returns (neighbors, triangles): neighbors[i], neighbors[i+1] span
        triangles[i] together with v.
        """
        rings = self._cache.setdefault("rings", {})
        if v not in rings:
            inc = [(ti, list(self.triangles[ti]))
                   for ti in self.vertex_triangles[v]]
            if not inc:
                raise GeometryError(f"vertex {v} not in any triangle")
            # successor map within the star: for triangle (v,a,b), a -> b
            succ = {}
            tri_of = {}
            for ti, tri in inc:
                k = tri.index(v)
                a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
                succ[a] = b
                tri_of[a] = ti
            start = min(succ)
            loop, tris = [start], []
            cur = start
            for _ in range(len(inc)):
                tris.append(tri_of[cur])
                cur = succ[cur]
                loop.append(cur)
            if loop[-1] != start:
                raise GeometryError(f"vertex {v} is not interior (open ring)")
            rings[v] = (np.array(loop[:-1], dtype=np.int64),
                        np.array(tris, dtype=np.int64))
        return rings[v]

    # -- validation ----------------------------------------------------------

    def _validate(self):
        areas = self.areas
        if np.any(areas <= 0.0):
            bad = np.nonzero(areas <= 0.0)[0][:5]
            raise GeometryError(f"non-positive triangle areas at {bad.tolist()}")
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices:
            raise GeometryError("triangle index out of range")
        edges = self._edge_dict()
        counts = {e: len(o) for e, o in edges.items()}
        if any(c > 2 for c in counts.values()):
            raise GeometryError("mesh is not edge-manifold")
        boundary_edges = {e for e, c in counts.items() if c == 1}
        loop = self.boundary_loop
        loop_edges = {frozenset((int(loop[i]), int(loop[(i + 1) % len(loop)])))
                      for i in range(len(loop))}
        if loop_edges != boundary_edges:
            raise GeometryError("boundary_loop does not match the mesh boundary")
        if polygon_area(self.vertices[loop]) <= 0:
            raise GeometryError("boundary_loop is not counterclockwise")
        # connectivity via union-find over triangles' shared vertices
        parent = np.arange(self.n_vertices)

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for tri in self.triangles:
            r = find(tri[0])
            for k in (1, 2):
                parent[find(tri[k])] = r
        roots = {find(i) for i in range(self.n_vertices)}
        if len(roots) != 1:
            raise GeometryError("mesh is not connected")


def _hex_lattice(bbox, spacing):
    (xmin, ymin), (xmax, ymax) = bbox
    dy = spacing * math.sqrt(3.0) / 2.0
    rows = int(math.floor((ymax - ymin) / dy)) + 1
    cols = int(math.floor((xmax - xmin) / spacing)) + 2
    pts = []
    for j in range(rows + 1):
        y = ymin + j * dy
        off = 0.5 * spacing if (j % 2) else 0.0
        for i in range(cols + 1):
            pts.append((xmin + off + i * spacing, y))
    return np.array(pts)


def triangulate(domain, target_edge):
    """Deterministic mesh of a polygonal domain.

    The boundary polygon is subdivided to pieces of length <= target_edge
    and the interior filled with a hexagonal lattice kept clear of the
    boundary, then Delaunay-triangulated.  Guarantees: exact polygon cover
    (area match to 1e-12), positive triangle areas, max edge <= 1.5 *
    target_edge.
    """
    if target_edge <= 0:
        raise GeometryError("target_edge must be positive")
    poly = domain.vertices
    area_poly = polygon_area(poly)
    if area_poly <= 0:
        raise GeometryError("degenerate polygon")

    bpts = []
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        length = float(np.linalg.norm(b - a))
        m = max(1, int(math.ceil(length / target_edge - 1e-12)))
        for k in range(m):
            bpts.append(a + (k / m) * (b - a))
    bpts = np.array(bpts)
    nb = len(bpts)

    # spacing/clearance tuned so band edges stay below 1.5 * target_edge
    # and boundary pieces keep empty diametral disks (hence stay Delaunay)
    spacing = 0.8 * target_edge
    clearance = 0.51 * target_edge
    lo = poly.min(axis=0) + spacing * 0.29
    hi = poly.max(axis=0)
    lattice = _hex_lattice((lo, hi), spacing)
    keep = points_in_polygon(lattice, poly)
    if np.any(keep):
        keep[keep] &= distance_to_polygon(lattice[keep], poly) >= clearance
    interior = lattice[keep]

    points = np.vstack([bpts, interior]) if len(interior) else bpts
    tri = Delaunay(points)
    simplices = tri.simplices

    areas = triangle_areas(points, simplices)
    flip = areas < 0
    simplices[flip] = simplices[flip][:, ::-1]
    centroids = points[simplices].mean(axis=1)
    inside = points_in_polygon(centroids, poly)
    good = inside & (np.abs(areas) > 1e-14 * max(area_poly, 1.0))
    simplices = simplices[good]

    # canonical ordering: rotate each triangle to start at its smallest
    # index, then sort rows
    rolled = np.empty_like(simplices)
    arg = np.argmin(simplices, axis=1)
    for k in range(3):
        sel = arg == k
        rolled[sel] = np.roll(simplices[sel], -k, axis=1)
    order = np.lexsort((rolled[:, 2], rolled[:, 1], rolled[:, 0]))
    simplices = rolled[order]

    mesh = TriangleMesh(points, simplices, np.arange(nb), validate=True)

    total = mesh.total_area
    if abs(total - area_poly) > 1e-12 * max(1.0, area_poly):
        raise GeometryError(
            f"mesh does not cover the polygon: area {total} vs {area_poly}")
    max_edge = float(mesh.edge_lengths.max())
    if max_edge > 1.5 * target_edge + 1e-12:
        raise GeometryError(
            f"max edge {max_edge:.4g} exceeds 1.5 * target_edge")
    return mesh


# ---------------------------------------------------------------------------
# boundary maps
# ---------------------------------------------------------------------------

def _cumulative_fractions(polygon):
    v = np.asarray(polygon, dtype=float)
    seg = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return cum / cum[-1]


def point_at_fraction(polygon, t):
    """Point at arclength fraction t in [0, 1) along the polygon boundary."""
    v = np.asarray(polygon, dtype=float)
    frac = _cumulative_fractions(v)
    t = np.atleast_1d(np.asarray(t, dtype=float)) % 1.0
    idx = np.clip(np.searchsorted(frac, t, side="right") - 1, 0, len(v) - 1)
    seg_len = frac[idx + 1] - frac[idx]
    lam = np.where(seg_len > 0, (t - frac[idx]) / np.where(seg_len > 0, seg_len, 1.0), 0.0)
    nxt = (idx + 1) % len(v)
    out = v[idx] + lam[:, None] * (v[nxt] - v[idx])
    return out if out.shape[0] > 1 else out[0]


def fraction_of_point(polygon, points, tol=1e-7):
    """Arclength fraction of points lying on the polygon boundary."""
    v = np.asarray(polygon, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    frac = _cumulative_fractions(v)
    a = v
    b = np.roll(v, -1, axis=0)
    ab = b - a
    denom = np.einsum("ej,ej->e", ab, ab)
    pa = pts[:, None, :] - a[None]
    t = np.clip(np.einsum("pej,ej->pe", pa, ab) / denom, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    d = np.linalg.norm(pts[:, None, :] - closest, axis=2)
    best = np.argmin(d, axis=1)
    dmin = d[np.arange(len(pts)), best]
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.any(dmin > tol * scale):
        k = int(np.argmax(dmin))
        raise GeometryError(
            f"point {pts[k].tolist()} is not on the boundary (distance {dmin[k]:.3g})")
    seg = frac[best + 1] - frac[best]
    out = frac[best] + t[np.arange(len(pts)), best] * seg
    out = out % 1.0
    return out if len(out) > 1 else float(out[0])


@dataclass(frozen=True)
class BoundaryMap:
    """Monotone sample table of a boundary homeomorphism.

    ``samples_s`` are strictly increasing arclength fractions on the source
    boundary; ``samples_w`` the corresponding target boundary points.
    Between samples the image moves linearly in target arclength.
    """

    samples_s: np.ndarray
    samples_w: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        s = np.asarray(self.samples_s, dtype=float)
        w = np.asarray(self.samples_w, dtype=float)
        object.__setattr__(self, "samples_s", s)
        object.__setattr__(self, "samples_w", w)
        if s.ndim != 1 or w.shape != (len(s), 2) or len(s) < 3:
            raise GeometryError("boundary map needs >= 3 samples of (s, w)")
        if np.any(s < 0) or np.any(s >= 1):
            raise GeometryError("sample fractions must lie in [0, 1)")
        ds = np.diff(s)
        if np.any(ds <= 0):
            k = int(np.nonzero(ds <= 0)[0][0])
            raise GeometryError(
                f"monotonicity violated: s[{k + 1}]={s[k + 1]} <= s[{k}]={s[k]}")
        if self.orientation != 1:
            raise GeometryError("only orientation +1 is supported")

    @staticmethod
    def identity(domain):
        """Samples fixing every polygon vertex of ``domain``."""
        poly = domain.vertices
        s = _cumulative_fractions(poly)[:-1]
        return BoundaryMap(s, poly.copy())

    @staticmethod
    def from_function(source, target, fn, n_samples=256):
        """Sample ``fn``: source arclength fraction -> point on target boundary."""
        s = np.arange(n_samples) / n_samples
        w = np.array([fn(float(si)) for si in s], dtype=float)
        return BoundaryMap(s, w)

    def target_fractions(self, target):
        return np.atleast_1d(fraction_of_point(target.vertices, self.samples_w))

    def inverted(self, source, target):
        """Swap roles: a table for the inverse boundary homeomorphism."""
        t = self.target_fractions(target)
        w = point_at_fraction(source.vertices, self.samples_s)
        w = np.atleast_2d(w)
        order = np.argsort(t)
        return BoundaryMap(t[order], w[order])


def boundary_targets(mesh, bmap, target):
    """Target positions for every boundary vertex of ``mesh``.

    Fractions are measured along the mesh boundary loop from its first
    vertex; images interpolate the sample table linearly in target
    arclength.  Returns an array aligned with ``mesh.boundary_loop``.
    """
    loop_pts = mesh.vertices[mesh.boundary_loop]
    sv = _cumulative_fractions(loop_pts)[:-1]

    s = bmap.samples_s
    t = bmap.target_fractions(target)
    # unwrap target fractions so they increase with s (one full turn)
    t_un = t.copy()
    for i in range(1, len(t_un)):
        while t_un[i] <= t_un[i - 1]:
            t_un[i] += 1.0
    if t_un[-1] - t_un[0] >= 1.0:
        k = int(np.argmax(np.diff(t_un)))
        raise GeometryError(
            f"monotonicity violated: target images wrap more than once near sample {k}")

    # closing interval back to the first sample, one turn later
    s_ext = np.concatenate([s, [s[0] + 1.0]])
    t_ext = np.concatenate([t_un, [t_un[0] + 1.0]])

    sq = sv.copy()
    sq[sq < s[0]] += 1.0
    idx = np.clip(np.searchsorted(s_ext, sq, side="right") - 1, 0, len(s) - 1)
    lam = (sq - s_ext[idx]) / (s_ext[idx + 1] - s_ext[idx])
    tq = t_ext[idx] + lam * (t_ext[idx + 1] - t_ext[idx])
    return np.atleast_2d(point_at_fraction(target.vertices, tq % 1.0))
