"""Piecewise-linear maps between meshed regions.

A map is a target point per reference vertex; restricted to a triangle it
is affine, so Wirtinger derivatives, Jacobian and distortion are constant
per triangle.  Inversion swaps reference and image meshes; composition
resamples through point location.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import TriangleMesh, as_complex, as_xy


class MapError(ValueError):
    """A map violates the contract of the requested operation."""


class DiscreteMap:
    """PL map: ``reference`` mesh plus one target point per vertex."""

    def __init__(self, reference: TriangleMesh, targets):
        self.reference = reference
        self.targets = np.ascontiguousarray(targets, dtype=float)
        if self.targets.shape != (reference.n_vertices, 2):
            raise MapError("targets must be one 2d point per reference vertex")

    @property
    def targets_z(self):
        return as_complex(self.targets)

    @staticmethod
    def identity(mesh):
        return DiscreteMap(mesh, mesh.vertices.copy())

    @staticmethod
    def from_callable(mesh, fn):
        """Sample a complex-to-complex function at the mesh vertices."""
        return DiscreteMap(mesh, as_xy(fn(mesh.vertices_z)))


@dataclass(frozen=True)
class DerivField:
    """Per-triangle derivative data of a :class:`DiscreteMap`.

    ``K`` is (|fz|^2+|fzb|^2)/J where J > 0, exactly 1 where J == 0, and
    NaN on orientation-reversed triangles (J < 0, see ``orientation_ok``).
    """

    fz: np.ndarray
    fzb: np.ndarray
    J: np.ndarray
    K: np.ndarray
    area: np.ndarray

    @property
    def orientation_ok(self):
        return self.J > 0.0

    @property
    def flipped(self):
        return np.nonzero(self.J <= 0.0)[0]


def derivatives(dmap: DiscreteMap) -> DerivField:
    """Wirtinger derivatives, Jacobian and distortion per triangle."""
    mesh = dmap.reference
    fz, fzb, _ = kernels.tri_derivs(mesh.triangles, mesh.vertices_z,
                                    dmap.targets_z)
    # build s and J from the same rounded norms so that conformal maps get
    # K == 1 exactly (s and J then agree bit for bit)
    p2 = (fz * np.conj(fz)).real
    q2 = (fzb * np.conj(fzb)).real
    s = p2 + q2
    J = p2 - q2
    K = np.full_like(J, np.nan)
    pos = J > 0.0
    K[pos] = s[pos] / J[pos]
    K[J == 0.0] = 1.0
    return DerivField(fz=fz, fzb=fzb, J=J, K=K, area=mesh.areas.copy())


def invert(dmap: DiscreteMap) -> DiscreteMap:
    """Exact PL inverse, defined on the image triangulation.

    Requires every Jacobian positive; the inverse triangle derivatives are
    conj(fz)/J and -fzb/J.
    """
    d = derivatives(dmap)
    if np.any(d.J <= 0.0):
        bad = d.flipped[:10].tolist()
        raise MapError(
            f"not invertible as orientation-preserving map; J <= 0 on triangles {bad}")
    mesh = dmap.reference
    image = TriangleMesh(dmap.targets, mesh.triangles.copy(),
                         mesh.boundary_loop.copy(), validate=True)
    return DiscreteMap(image, mesh.vertices.copy())


def locate_points(mesh: TriangleMesh, points, tol=1e-9):
    """Triangle index and barycentric coordinates for each query point.

    ``tol`` is a geometric distance: points farther outside the mesh raise.
    """
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    pz = as_complex(pts)
    idx, bary = kernels.locate(pz, mesh.triangles, mesh.tri_neighbors,
                               mesh.vertices_z, tol=1e-12)
    worst = bary.min(axis=1)
    suspicious = np.nonzero(worst < -1e-12)[0]
    if len(suspicious):
        from .geometry import distance_to_polygon
        loop = mesh.vertices[mesh.boundary_loop]
        dist = distance_to_polygon(pts[suspicious], loop)
        outside = suspicious[dist > tol]
        if len(outside):
            k = int(outside[0])
            raise MapError(
                f"point {pts[k].tolist()} lies outside the mesh "
                f"(distance {dist[list(suspicious).index(k)]:.3g} > {tol:g})")
    return idx, bary


def evaluate(dmap: DiscreteMap, points, tol=1e-9):
    """Evaluate the PL map at arbitrary points of its reference region."""
    idx, bary = locate_points(dmap.reference, points, tol=tol)
    corners = dmap.targets[dmap.reference.triangles[idx]]     # (P,3,2)
    return np.einsum("pk,pkj->pj", bary, corners)


def compose(outer: DiscreteMap, inner: DiscreteMap, tol=1e-9) -> DiscreteMap:
    """Vertex-sampled composition outer o inner on inner's reference mesh."""
    composed = evaluate(outer, inner.targets, tol=tol)
    return DiscreteMap(inner.reference, composed)
