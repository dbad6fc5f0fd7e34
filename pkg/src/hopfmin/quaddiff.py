"""Holomorphic quadratic differentials and their trajectory structure.

A quadratic differential phi(z) dz dz has vertical arcs where the squared
tangent times phi is negative real, horizontal ones where it is positive.
Tracing integrates the unit direction field +-i/sqrt(phi) (or 1/sqrt(phi))
with a classical 4th-order step in the |phi|^(1/2)-metric arclength,
keeping the square-root branch by continuity along the curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Domain, as_complex, as_xy, points_in_polygon, triangulate


class TraceError(RuntimeError):
    pass


class QuadraticDifferential:
    """Coefficient phi given analytically or as polynomial coefficients."""

    def __init__(self, form, domain: Domain, critical_points=None):
        self.domain = domain
        if callable(form):
            self._fn = form
            self.coefficients = None
        else:
            coeffs = np.asarray(form, dtype=complex)
            self.coefficients = coeffs
            self._fn = lambda z: np.polynomial.polynomial.polyval(z, coeffs)
            if critical_points is None:
                critical_points = self._polynomial_zeros()
        self.critical_points = (np.asarray(critical_points, dtype=complex)
                                if critical_points is not None
                                else np.empty(0, dtype=complex))
        self._eps_crit = None

    @staticmethod
    def polynomial(coeffs, domain):
        return QuadraticDifferential(np.asarray(coeffs, dtype=complex), domain)

    @staticmethod
    def from_callable(fn, domain, critical_points=None):
        return QuadraticDifferential(fn, domain, critical_points)

    def _polynomial_zeros(self):
        c = np.trim_zeros(self.coefficients, "b")
        if len(c) <= 1:
            return np.empty(0, dtype=complex)
        roots = np.roots(c[::-1])
        inside = points_in_polygon(as_xy(roots), self.domain.vertices)
        return roots[inside]

    def phi(self, z):
        return np.asarray(self._fn(np.asarray(z, dtype=complex)), dtype=complex)

    @property
    def eps_crit(self):
        """Critical-ball threshold: 1e-8 times max |phi| over the domain."""
        if self._eps_crit is None:
            v = self.domain.vertices
            lo, hi = v.min(axis=0), v.max(axis=0)
            gx = np.linspace(lo[0], hi[0], 41)
            gy = np.linspace(lo[1], hi[1], 41)
            X, Y = np.meshgrid(gx, gy)
            pts = np.stack([X.ravel(), Y.ravel()], axis=1)
            inside = points_in_polygon(pts, v)
            sample = np.concatenate([as_complex(pts[inside]), as_complex(v)])
            self._eps_crit = 1e-8 * float(np.max(np.abs(self.phi(sample))))
        return self._eps_crit


@dataclass
class Trajectory:
    points: np.ndarray
    kind: str
    termination: str
    phi_length: float
    end_terminations: tuple = ("", "")
    tangential_exit: bool = False

    @property
    def points_z(self):
        return as_complex(self.points)


def _segment_exit(poly, z0, z1):
    """First intersection of segment z0->z1 with the polygon boundary."""
    p = np.array([z0.real, z0.imag])
    q = np.array([z1.real, z1.imag])
    best_t, best_pt, best_edge = None, None, None
    v = poly
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        r = q - p
        s = b - a
        den = r[0] * s[1] - r[1] * s[0]
        if den == 0.0:
            continue
        t = ((a[0] - p[0]) * s[1] - (a[1] - p[1]) * s[0]) / den
        u = ((a[0] - p[0]) * r[1] - (a[1] - p[1]) * r[0]) / den
        if -1e-12 <= u <= 1 + 1e-12 and 1e-12 < t <= 1 + 1e-12:
            if best_t is None or t < best_t:
                best_t, best_pt, best_edge = t, p + t * r, (a, b)
    if best_t is None:
        return None
    seg = q - p
    edge = best_edge[1] - best_edge[0]
    cosang = abs(seg[0] * edge[0] + seg[1] * edge[1]) / (
        np.linalg.norm(seg) * np.linalg.norm(edge) + 1e-300)
    tangential = cosang > 0.998
    return complex(best_pt[0], best_pt[1]), tangential


def _direction(qd, z, prev, vertical, eps_crit):
    val = complex(qd.phi(np.array([z]))[0])
    if abs(val) < eps_crit:
        return None
    root = np.sqrt(val)
    d = 1j / root if vertical else 1.0 / root
    # branch by continuity: pick the sign best aligned with the last step
    dot = (d * np.conj(prev)).real
    if dot < 0:
        d = -d
        dot = -dot
    if dot <= 0.0 or abs(dot) < 1e-12 * abs(d) * abs(prev):
        raise TraceError(f"direction field branch flip at {z}")
    return d


def _trace_one_way(qd, z0, d0, vertical, step, max_steps, eps_crit, poly):
    pts = [z0]
    z = z0
    prev = d0
    termination = "step-limit"
    tangential = False
    for _ in range(max_steps):
        k1 = _direction(qd, z, prev, vertical, eps_crit)
        if k1 is None:
            termination = "critical-point"
            break
        try:
            k2 = _direction(qd, z + 0.5 * step * k1, k1, vertical, eps_crit)
            k3 = _direction(qd, z + 0.5 * step * k2, k2, vertical, eps_crit) if k2 else None
            k4 = _direction(qd, z + step * k3, k3, vertical, eps_crit) if k3 else None
        except TraceError:
            k2 = k3 = k4 = None
        if k2 is None or k3 is None or k4 is None:
            # a stage hit a critical ball; finish with the plain step
            z_new = z + step * k1
        else:
            z_new = z + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not points_in_polygon(np.array([[z_new.real, z_new.imag]]), poly)[0]:
            hit = _segment_exit(poly, z, z_new)
            if hit is not None:
                zb, tangential = hit
                if abs(zb - z) > 0:
                    pts.append(zb)
            termination = "boundary"
            break
        prev = z_new - z if z_new != z else prev
        z = z_new
        pts.append(z)
        if abs(complex(qd.phi(np.array([z]))[0])) < eps_crit:
            termination = "critical-point"
            break
    return pts, termination, tangential


def trace(qd: QuadraticDifferential, start, kind="vertical", step=1e-3,
          max_steps=200_000) -> Trajectory:
    """Trace the trajectory of the given kind through a noncritical point.

    ``step`` is the advance per move in the |phi|^(1/2) metric.  The curve
    runs in both directions until the domain boundary, a critical ball, or
    the step limit.
    """
    if kind not in ("vertical", "horizontal"):
        raise ValueError("kind must be 'vertical' or 'horizontal'")
    if step <= 0:
        raise ValueError("step must be positive")
    z0 = complex(start[0], start[1]) if np.ndim(start) else complex(start)
    eps = qd.eps_crit
    val = complex(qd.phi(np.array([z0]))[0])
    if abs(val) < eps:
        raise TraceError(f"start point {z0} is critical (|phi| < eps_crit)")
    vertical = kind == "vertical"
    root = np.sqrt(val)
    d0 = 1j / root if vertical else 1.0 / root
    poly = qd.domain.vertices

    fwd, term_f, tang_f = _trace_one_way(qd, z0, d0, vertical, step,
                                         max_steps, eps, poly)
    bwd, term_b, tang_b = _trace_one_way(qd, z0, -d0, vertical, step,
                                         max_steps, eps, poly)
    zs = np.concatenate([np.array(bwd[::-1]), np.array(fwd[1:])])
    both = (term_b, term_f)
    if both[0] == both[1]:
        termination = both[0]
    elif "critical-point" in both:
        termination = "critical-point"
    elif "boundary" in both:
        termination = "boundary"
    else:
        termination = "step-limit"
    traj = Trajectory(points=as_xy(zs), kind=kind, termination=termination,
                      phi_length=0.0, end_terminations=both,
                      tangential_exit=tang_f or tang_b)
    traj.phi_length = phi_length(qd, traj.points)
    return traj


def phi_length(qd: QuadraticDifferential, curve) -> float:
    """Length of a polyline in the |phi|^(1/2) metric (midpoint rule)."""
    z = as_complex(np.asarray(curve, dtype=float)) if np.asarray(curve).ndim == 2 \
        else np.asarray(curve, dtype=complex)
    if len(z) < 2:
        return 0.0
    mid = 0.5 * (z[:-1] + z[1:])
    seg = np.abs(np.diff(z))
    return float(np.sum(np.sqrt(np.abs(qd.phi(mid))) * seg))


def natural_parameter(qd: QuadraticDifferential, curve):
    """Cumulative integral of sqrt(phi) dz along a polyline.

    Branch continuity is kept across evaluations; on a vertical trajectory
    the real part of the result is constant, on a horizontal one the
    imaginary part.
    """
    z = as_complex(np.asarray(curve, dtype=float)) if np.asarray(curve).ndim == 2 \
        else np.asarray(curve, dtype=complex)
    nodes = qd.phi(z)
    mids = qd.phi(0.5 * (z[:-1] + z[1:]))

    roots = np.sqrt(np.concatenate([nodes, mids]))
    n = len(z)
    # enforce continuity along the chain node0, mid0, node1, mid1, ...
    chain = np.empty(2 * n - 1, dtype=complex)
    chain[0::2] = roots[:n]
    chain[1::2] = roots[n:]
    for i in range(1, len(chain)):
        if (chain[i] * np.conj(chain[i - 1])).real < 0:
            chain[i] = -chain[i]
    r_nodes = chain[0::2]
    r_mids = chain[1::2]

    dz = np.diff(z)
    # Simpson on each segment
    inc = dz * (r_nodes[:-1] + 4.0 * r_mids + r_nodes[1:]) / 6.0
    return np.concatenate([[0.0], np.cumsum(inc)])


@dataclass
class MinimalityReport:
    traj_length: float
    min_competitor: float
    margin: float
    n_competitors: int
    resampled: int
    degenerate: bool


def minimality_check(qd: QuadraticDifferential, trajectory: Trajectory,
                     competitors=200, seed=0, n_points=257) -> MinimalityReport:
    """Compare the trajectory length against random curves with the same
    endpoints: smooth sine perturbations of the chord, amplitude at most a
    quarter of the domain diameter, rejected if they leave the domain.
    """
    rng = np.random.default_rng(seed)
    z = trajectory.points_z
    a, b = z[0], z[-1]
    L_traj = trajectory.phi_length
    if abs(b - a) == 0.0:
        return MinimalityReport(traj_length=L_traj, min_competitor=L_traj,
                                margin=0.0, n_competitors=0, resampled=0,
                                degenerate=True)
    t = np.linspace(0.0, 1.0, n_points)
    chord = a + t * (b - a)
    normal = 1j * (b - a) / abs(b - a)
    amp_max = qd.domain.diameter / 4.0
    poly = qd.domain.vertices

    best = np.inf
    resampled = 0
    done = 0
    while done < competitors:
        amps = rng.uniform(-1.0, 1.0, size=3) / np.array([1.0, 2.0, 3.0])
        total = np.sum(np.abs(amps))
        if total > 0:
            amps *= min(1.0, amp_max / total) * rng.uniform(0.1, 1.0)
        bumps = sum(amps[j] * np.sin((j + 1) * np.pi * t) for j in range(3))
        curve = chord + normal * bumps
        inside = points_in_polygon(as_xy(curve[1:-1]), poly)
        if not np.all(inside):
            resampled += 1
            if resampled > 50 * competitors:
                raise TraceError("could not sample competitors inside the domain")
            continue
        best = min(best, phi_length(qd, curve))
        done += 1
    return MinimalityReport(traj_length=L_traj, min_competitor=best,
                            margin=best - L_traj, n_competitors=done,
                            resampled=resampled, degenerate=False)


def vertical_family(qd: QuadraticDifferential, anchor, spacing, step=None):
    """Vertical trajectories seeded along the horizontal trajectory
    through ``anchor`` at uniform |phi|^(1/2)-spacing.

    Returns (trajectories, seeds).  Seeds sit at metric distance
    (k + 1/2) * spacing' from the transversal start, where spacing' divides
    the transversal length evenly and is as close to ``spacing`` as
    possible (midpoint placement for stripe reconstruction).
    """
    if step is None:
        step = spacing / 5.0
    transversal = trace(qd, anchor, kind="horizontal", step=step)
    z = transversal.points_z
    mids = 0.5 * (z[:-1] + z[1:])
    seg = np.abs(np.diff(z)) * np.sqrt(np.abs(qd.phi(mids)))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    m = max(1, int(round(total / spacing)))
    h = total / m
    targets = (np.arange(m) + 0.5) * h
    seeds = np.interp(targets, cum, np.concatenate([[0], np.arange(1, len(z))]))
    seed_pts = np.array([z[int(i)] + (i - int(i)) * (z[min(int(i) + 1, len(z) - 1)] - z[int(i)])
                         for i in seeds])
    trajectories = [trace(qd, (p.real, p.imag), kind="vertical", step=step)
                    for p in seed_pts]
    return trajectories, seed_pts, h


@dataclass
class FubiniReport:
    line_F: np.ndarray
    line_G: np.ndarray
    domain_F: float
    domain_G: float
    recon_F: float
    recon_G: float
    spacing: float
    coverage: float
    min_slack: float

    @property
    def implication_holds(self):
        return self.min_slack >= 0.0 and self.domain_F <= self.domain_G


def fubini_check(qd: QuadraticDifferential, F, G, family, spacing,
                 region: Domain = None, mesh_edge=None) -> FubiniReport:
    """Line integrals of |phi|^(1/2) F and G over a trajectory family
    against the |phi|-weighted area integrals over the covered region.

    ``F`` and ``G`` take complex points.  The region (default: the
    differential's domain) is triangulated independently for the area
    integrals; stripes of metric width ``spacing`` reconstruct them from
    the line integrals.  Errors out if the family leaves metric gaps wider
    than twice the spacing.
    """
    region = region if region is not None else qd.domain
    if mesh_edge is None:
        mesh_edge = region.diameter / 60.0
    mesh = triangulate(region, mesh_edge)

    def line_integral(tr, fn):
        z = tr.points_z
        mid = 0.5 * (z[:-1] + z[1:])
        seg = np.abs(np.diff(z))
        return float(np.sum(np.sqrt(np.abs(qd.phi(mid))) * fn(mid) * seg))

    line_F = np.array([line_integral(tr, F) for tr in family])
    line_G = np.array([line_integral(tr, G) for tr in family])

    # area integrals with the 3-point edge-midpoint rule
    corners = mesh.vertices_z[mesh.triangles]
    mids = 0.5 * (corners + np.roll(corners, -1, axis=1))
    w = np.abs(qd.phi(mids.ravel())).reshape(mids.shape)

    def area_integral(fn):
        vals = fn(mids.ravel()).reshape(mids.shape)
        return float(np.sum(mesh.areas * np.mean(w * vals, axis=1)))

    domain_F = area_integral(F)
    domain_G = area_integral(G)

    # coverage: metric distance from each centroid to the nearest family point
    cent = corners.mean(axis=1)
    allpts = np.concatenate([tr.points_z for tr in family])
    gap = np.empty(len(cent))
    for i, c in enumerate(cent):
        gap[i] = np.min(np.abs(allpts - c))
    coverage = float(np.max(gap * np.sqrt(np.abs(qd.phi(cent)))))
    if coverage > 2.0 * spacing:
        raise TraceError(
            f"family leaves uncovered metric gaps: {coverage:.3g} > 2 * {spacing:g}")

    recon_F = float(spacing * np.sum(line_F))
    recon_G = float(spacing * np.sum(line_G))
    return FubiniReport(line_F=line_F, line_G=line_G,
                        domain_F=domain_F, domain_G=domain_G,
                        recon_F=recon_F, recon_G=recon_G,
                        spacing=float(spacing), coverage=coverage,
                        min_slack=float(np.min(line_G - line_F)))
