"""Distortion and weighted Dirichlet energies of discrete maps.

Convention, fixed once for the whole package: |Dh|^2 means the squared
Hilbert-Schmidt norm 2(|h_z|^2 + |h_zb|^2).  Every functional below states
its constant relative to that choice, and cross-functional comparisons
(duality, Hoelder) carry an explicit factor 2 accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mapping import DiscreteMap, derivatives, invert, locate_points


class EnergyError(ValueError):
    pass


@dataclass
class EnergyBreakdown:
    """Total energy with its per-triangle contributions.

    ``convention_constant`` is the factor by which |D.|^2 terms exceed
    |h_z|^2 + |h_zb|^2 under the HS convention (2 for Dirichlet-type
    functionals, 1 for pure distortion integrals).
    """

    total: float
    per_triangle: np.ndarray
    convention_constant: float
    offenders: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def density_range(self):
        pt = self.per_triangle
        finite = pt[np.isfinite(pt)]
        if len(finite) == 0:
            return (np.nan, np.nan)
        return (float(finite.min()), float(finite.max()))


class WeightFn:
    """Positive weight on the target region.

    Variants: constant, analytic callable (with optional gradient),
    per-vertex PL samples over a mesh, or the distortion power K_f^(p-1)
    of a stored map pulled back through point location.
    """

    def __init__(self, kind, **data):
        self.kind = kind
        self._d = data

    @staticmethod
    def constant(value):
        if value <= 0:
            raise EnergyError("weight must be positive")
        return WeightFn("const", value=float(value))

    @staticmethod
    def from_callable(fn, grad=None):
        """``fn(x, y) -> values``; ``grad(x, y) -> (dx, dy)`` if available."""
        return WeightFn("callable", fn=fn, grad=grad)

    @staticmethod
    def from_vertex_samples(mesh, values):
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0):
            raise EnergyError("vertex samples must be positive")
        return WeightFn("samples", mesh=mesh, values=values)

    @staticmethod
    def distortion_pullback(f: DiscreteMap, p):
        """K_f^(p-1) as a piecewise-constant weight on f's reference region."""
        d = derivatives(f)
        if np.any(d.J <= 0.0):
            raise EnergyError("pullback weight needs an orientation-preserving map")
        return WeightFn("pullback", mesh=f.reference,
                        values=d.K ** (p - 1.0), p=float(p))

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "const":
            return np.full(len(points), self._d["value"])
        if self.kind == "callable":
            return np.asarray(self._d["fn"](points[:, 0], points[:, 1]), dtype=float)
        if self.kind == "samples":
            mesh = self._d["mesh"]
            idx, bary = locate_points(mesh, points)
            vals = self._d["values"][mesh.triangles[idx]]
            return np.einsum("pk,pk->p", bary, vals)
        if self.kind == "pullback":
            mesh = self._d["mesh"]
            idx, _ = locate_points(mesh, points)
            return self._d["values"][idx]
        raise EnergyError(f"unknown weight kind {self.kind}")

    def gradient(self, points):
        """Spatial gradient where meaningful; zeros for piecewise-constant kinds."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "callable" and self._d.get("grad") is not None:
            gx, gy = self._d["grad"](points[:, 0], points[:, 1])
            return np.stack([np.asarray(gx, dtype=float),
                             np.asarray(gy, dtype=float)], axis=1)
        return np.zeros((len(points), 2))

    @property
    def is_smooth(self):
        return self.kind == "const" or (
            self.kind == "callable" and self._d.get("grad") is not None)


def as_weight(phi):
    if isinstance(phi, WeightFn):
        return phi
    if np.isscalar(phi):
        return WeightFn.constant(float(phi))
    raise EnergyError("weight must be a WeightFn or a positive scalar")


def _quad_points(dmap: DiscreteMap, order):
    """Image-side quadrature nodes per triangle: centroid or edge midpoints."""
    tris = dmap.reference.triangles
    corners = dmap.targets[tris]                      # (T,3,2)
    if order == 1:
        return corners.mean(axis=1)[:, None, :], np.array([1.0])
    if order == 3:
        mids = 0.5 * (corners + np.roll(corners, -1, axis=1))
        return mids, np.full(3, 1.0 / 3.0)
    raise EnergyError("quadrature order must be 1 or 3")


def weight_at_centroids(dmap: DiscreteMap, phi, order=1):
    """Weight values at image quadrature nodes, averaged per triangle."""
    phi = as_weight(phi)
    nodes, wq = _quad_points(dmap, order)
    T = nodes.shape[0]
    vals = phi(nodes.reshape(-1, 2)).reshape(T, -1)
    if np.any(vals <= 0):
        bad = int(np.nonzero(np.any(vals <= 0, axis=1))[0][0])
        raise EnergyError(f"nonpositive weight sample on triangle {bad}")
    return vals @ wq


def mean_distortion(dmap: DiscreteMap, p, barrier=False) -> EnergyBreakdown:
    """Integral of K^p over the reference region (exact for PL maps).

    With ``barrier=True`` any non-positive Jacobian makes the energy
    infinite (the minimization-mode reading); otherwise J == 0 triangles
    contribute with K = 1 and J < 0 triangles propagate NaN.
    """
    if p < 1:
        raise EnergyError("p must be >= 1")
    d = derivatives(dmap)
    per = d.K ** p * d.area
    offenders = d.flipped
    total = float(np.sum(per))
    if barrier and len(offenders):
        per = per.copy()
        per[offenders] = np.inf
        total = np.inf
    return EnergyBreakdown(total=total, per_triangle=per,
                           convention_constant=1.0, offenders=offenders)


def inverse_energy(h: DiscreteMap, p) -> EnergyBreakdown:
    """(1/2) integral of K^(p-1) |Dh|^2; infinite if orientation fails.

    Per triangle this is K^(p-1) (|h_z|^2 + |h_zb|^2) area, which matches
    ``mean_distortion(invert(h), p)`` exactly in per-triangle algebra.
    """
    if p < 1:
        raise EnergyError("p must be >= 1")
    d = derivatives(h)
    offenders = d.flipped
    s = np.abs(d.fz) ** 2 + np.abs(d.fzb) ** 2
    per = np.empty_like(s)
    ok = d.J > 0.0
    per[ok] = d.K[ok] ** (p - 1.0) * s[ok] * d.area[ok]
    per[~ok] = np.inf
    total = np.inf if len(offenders) else float(np.sum(per))
    return EnergyBreakdown(total=total, per_triangle=per,
                           convention_constant=2.0, offenders=offenders)


def weighted_dirichlet(h: DiscreteMap, phi, order=1) -> EnergyBreakdown:
    """Integral of phi(h) |Dh|^2 = 2 phi(h) (|h_z|^2 + |h_zb|^2).

    The weight is sampled at the image centroid (``order=1``) or averaged
    over the image edge midpoints (``order=3``, exact for quadratic phi).
    """
    d = derivatives(h)
    s = np.abs(d.fz) ** 2 + np.abs(d.fzb) ** 2
    pv = weight_at_centroids(h, phi, order=order)
    per = 2.0 * pv * s * d.area
    return EnergyBreakdown(total=float(np.sum(per)), per_triangle=per,
                           convention_constant=2.0)


@dataclass
class HolderReport:
    lhs: float
    rhs: float
    gap: float
    p: float


def holder_check(f: DiscreteMap, g: DiscreteMap, p, order=1) -> HolderReport:
    """Compare the K_f^(p-1)-weighted Dirichlet energy of g against
    2 E_p[f]^((p-1)/p) E_p[g^-1]^(1/p).

    The factor 2 carries the HS convention; the gap rhs - lhs should never
    drop below round-off for admissible pairs, with equality at g = f^-1.
    """
    if p <= 1:
        raise EnergyError("p must exceed 1")
    phi = WeightFn.distortion_pullback(f, p)
    lhs = weighted_dirichlet(g, phi, order=order).total
    ef = mean_distortion(f, p).total
    eg = mean_distortion(invert(g), p).total
    rhs = 2.0 * ef ** ((p - 1.0) / p) * eg ** (1.0 / p)
    return HolderReport(lhs=lhs, rhs=rhs, gap=rhs - lhs, p=float(p))
