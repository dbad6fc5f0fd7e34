"""Hopf differentials, stretch derivatives, and the energy-difference
integral identity.

The Hopf field of a map h with weight phi is phi(h) h_z conj(h_zb), per
triangle.  Stationarity of the weighted Dirichlet energy makes that field
holomorphic; on a mesh we measure the failure of holomorphy by closed
loop integrals around interior vertices, which vanish identically for
constant fields and for centroid samples of linear ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import as_weight, weight_at_centroids, weighted_dirichlet
from .geometry import TriangleMesh
from .mapping import DiscreteMap, derivatives, invert, compose, DerivField


class HopfError(ValueError):
    pass


@dataclass
class HopfField:
    """Per-triangle Hopf differential phi = weight * h_z * conj(h_zb)."""

    phi: np.ndarray
    weights: np.ndarray
    deriv: DerivField
    mesh: TriangleMesh


def hopf_differential(h: DiscreteMap, phi) -> HopfField:
    d = derivatives(h)
    w = weight_at_centroids(h, as_weight(phi))
    field = w * d.fz * np.conj(d.fzb)
    return HopfField(phi=field, weights=w, deriv=d, mesh=h.reference)


def gamma_field(deriv: DerivField, rel_tol=1e-14):
    """Unit phase of h_z conj(h_zb), or 0 where the product vanishes."""
    prod = deriv.fz * np.conj(deriv.fzb)
    mag = np.abs(prod)
    s = np.abs(deriv.fz) ** 2 + np.abs(deriv.fzb) ** 2
    out = np.zeros_like(prod)
    nz = mag > rel_tol * s
    out[nz] = prod[nz] / mag[nz]
    return out


@dataclass
class HopfResidual:
    """Loop-integral holomorphy residuals.

    ``loop_residuals[i]`` is |contour integral of phi| over the one-ring
    of interior vertex ``vertex_ids[i]``, divided by the ring area and by
    the global area-weighted mean of |phi| (``scale``).  ``max_rel`` is
    the worst ring; ``mean_rel`` the ring-area-weighted average, which is
    the robust aggregate under mesh refinement (the max tends to sit in
    the boundary layer of computed minimizers).
    """

    vertex_ids: np.ndarray
    loop_residuals: np.ndarray
    max_rel: float
    mean_rel: float
    scale: float


def holomorphy_residual(field: HopfField) -> HopfResidual:
    mesh = field.mesh
    interior = mesh.interior_vertices
    if len(interior) == 0:
        raise HopfError("mesh has no interior vertex")
    z = mesh.vertices_z
    areas = mesh.areas
    total = float(np.sum(areas))
    scale = float(np.sum(np.abs(field.phi) * areas) / total)
    denom = scale if scale > 0 else 1.0

    res = np.empty(len(interior))
    ring_areas = np.empty(len(interior))
    for i, v in enumerate(interior):
        ring, tris = mesh.vertex_ring(int(v))
        dz = z[np.roll(ring, -1)] - z[ring]
        loop = np.sum(field.phi[tris] * dz)
        ring_areas[i] = float(np.sum(areas[tris]))
        res[i] = abs(loop) / (ring_areas[i] * denom)
    mean = float(np.sum(res * ring_areas) / np.sum(ring_areas))
    return HopfResidual(vertex_ids=interior, loop_residuals=res,
                        max_rel=float(res.max()), mean_rel=mean, scale=scale)


@dataclass
class StretchDerivatives:
    """Horizontal and vertical derivatives of h along its own Hopf field.

    Residual arrays check |dH| = |h_z| + |h_zb|, |dH||dV| = J and
    weight (|dH|^2 - |dV|^2) = 4 |phi|; triangles with phi = 0 are skipped
    (conformal points) and reported in ``skipped``.
    """

    dH: np.ndarray
    dV: np.ndarray
    res_stretch: np.ndarray
    res_jacobian: np.ndarray
    res_weight: np.ndarray
    skipped: np.ndarray


def hv_derivatives(h: DiscreteMap, field: HopfField) -> StretchDerivatives:
    d = derivatives(h)
    check = field.weights * d.fz * np.conj(d.fzb)
    scale = np.max(np.abs(field.phi)) + np.max(np.abs(check)) + 1e-300
    if np.max(np.abs(check - field.phi)) > 1e-10 * scale:
        raise HopfError("field is not the Hopf differential of this map")

    mag = np.abs(field.phi)
    skipped = mag == 0.0
    u = np.ones_like(field.phi)
    u[~skipped] = field.phi[~skipped] / mag[~skipped]

    dH = d.fz + u * d.fzb
    dV = d.fz - u * d.fzb
    dH[skipped] = d.fz[skipped]
    dV[skipped] = d.fz[skipped]

    res_stretch = np.abs(np.abs(dH) - (np.abs(d.fz) + np.abs(d.fzb)))
    res_jacobian = np.abs(np.abs(dH) * np.abs(dV) - np.abs(d.J))
    res_weight = np.abs(field.weights * (np.abs(dH) ** 2 - np.abs(dV) ** 2)
                        - 4.0 * mag)
    res_stretch[skipped] = 0.0
    res_jacobian[skipped] = 0.0
    res_weight[skipped] = 0.0
    return StretchDerivatives(dH=dH, dV=dV, res_stretch=res_stretch,
                              res_jacobian=res_jacobian,
                              res_weight=res_weight,
                              skipped=np.nonzero(skipped)[0])


@dataclass
class IdentityReport:
    """Two quadratures of the energy difference E[H] - E[h].

    lhs is the direct difference of weighted Dirichlet energies; the right
    side integrates the transition map f = H^-1 o h.  ``rhs_term2`` is
    nonnegative by construction.
    """

    lhs: float
    rhs_term1: float
    rhs_term2: float
    gap: float
    rel_gap: float
    f_min_J: float


def integral_identity(h: DiscreteMap, H: DiscreteMap, phi,
                      order=1, tol=1e-9) -> IdentityReport:
    """Evaluate both sides of the energy-difference identity.

    ``h`` and ``H`` must be orientation-preserving maps of the same source
    mesh region onto the same target region (the transition map then maps
    the source onto itself).
    """
    phi = as_weight(phi)
    lhs = weighted_dirichlet(H, phi, order=order).total \
        - weighted_dirichlet(h, phi, order=order).total

    f = compose(invert(H), h, tol=tol)
    df = derivatives(f)
    if np.any(df.J <= 0.0):
        bad = df.flipped[:10].tolist()
        raise HopfError(
            f"transition map leaves the orientation-preserving class on triangles {bad}")

    dh = derivatives(h)
    gam = gamma_field(dh)
    w = weight_at_centroids(h, phi, order=order)
    areas = h.reference.areas

    bracket = np.abs(df.fz - gam * df.fzb) ** 2 / df.J - 1.0
    term1 = 4.0 * float(np.sum(bracket * w * np.abs(dh.fz * dh.fzb) * areas))
    term2 = 4.0 * float(np.sum(
        w * (np.abs(dh.fz) - np.abs(dh.fzb)) ** 2 * np.abs(df.fzb) ** 2 / df.J
        * areas))
    gap = abs(lhs - (term1 + term2))
    scale = max(abs(lhs), abs(term1) + abs(term2), 1e-300)
    return IdentityReport(lhs=lhs, rhs_term1=term1, rhs_term2=term2,
                          gap=gap, rel_gap=gap / scale,
                          f_min_J=float(df.J.min()))
