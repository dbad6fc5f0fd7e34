"""Pure-numpy reference implementations of the hot kernels.

Same contracts as the numba backend; selected with HOPFMIN_BACKEND=numpy.
"""

from __future__ import annotations

import numpy as np

KIND_DIRICHLET = 0
KIND_DISTORTION = 1


def deriv_coeffs(tris, zref):
    """Per-triangle linear forms: fz = sum A[i] w[i], fzb = sum B[i] w[i]."""
    z1, z2, z3 = (zref[tris[:, k]] for k in range(3))
    z21, z31 = z2 - z1, z3 - z1
    D = z21 * np.conj(z31) - z31 * np.conj(z21)
    A = np.stack([(np.conj(z21) - np.conj(z31)) / D,
                  np.conj(z31) / D,
                  -np.conj(z21) / D], axis=1)
    B = np.stack([(z31 - z21) / D, -z31 / D, z21 / D], axis=1)
    return A, B


def tri_derivs(tris, zref, w):
    """Wirtinger derivatives (fz, fzb) and Jacobian of the affine pieces."""
    z1, z2, z3 = (zref[tris[:, k]] for k in range(3))
    w1, w2, w3 = (w[tris[:, k]] for k in range(3))
    z21, z31 = z2 - z1, z3 - z1
    w21, w31 = w2 - w1, w3 - w1
    D = z21 * np.conj(z31) - z31 * np.conj(z21)
    fz = (w21 * np.conj(z31) - w31 * np.conj(z21)) / D
    fzb = (w31 * z21 - w21 * z31) / D
    J = (fz * np.conj(fz)).real - (fzb * np.conj(fzb)).real
    return fz, fzb, J


def energy_grad(tris, A, B, areas, w, kind, p, phi, dphi, compute_grad=True):
    """Energy, gradient and min Jacobian of a per-triangle density.

    kind 0: 2 * phi * (|fz|^2 + |fzb|^2), externally supplied phi/dphi at
            image centroids.
    kind 1: K^(p-1) * (|fz|^2 + |fzb|^2), infinite if any J <= 0.
    Gradient is returned as complex (d/dx + i d/dy) per vertex.
    """
    wt = w[tris]                                     # (T,3) complex
    fz = np.einsum("tk,tk->t", A, wt)
    fzb = np.einsum("tk,tk->t", B, wt)
    s = (fz * np.conj(fz)).real + (fzb * np.conj(fzb)).real
    J = (fz * np.conj(fz)).real - (fzb * np.conj(fzb)).real
    min_J = float(J.min()) if len(J) else np.inf

    grad = np.zeros(len(w), dtype=complex)
    if kind == KIND_DISTORTION:
        if min_J <= 0.0:
            return np.inf, grad, min_J
        K = s / J
        dens = K ** (p - 1.0) * s
        E = float(np.sum(dens * areas))
        if compute_grad:
            # d(dens) = K^(p-1) * (p ds - (p-1) K dJ)
            Gs = 2.0 * (fz[:, None] * np.conj(A) + fzb[:, None] * np.conj(B))
            GJ = 2.0 * (fz[:, None] * np.conj(A) - fzb[:, None] * np.conj(B))
            coef = (K ** (p - 1.0) * areas)[:, None]
            contrib = coef * (p * Gs - ((p - 1.0) * K)[:, None] * GJ)
            np.add.at(grad, tris.ravel(), contrib.ravel())
    else:
        E = float(np.sum(2.0 * phi * s * areas))
        if compute_grad:
            Gs = 2.0 * (fz[:, None] * np.conj(A) + fzb[:, None] * np.conj(B))
            contrib = (2.0 * phi * areas)[:, None] * Gs
            contrib = contrib + ((2.0 / 3.0) * s * areas)[:, None] * dphi[:, None]
            np.add.at(grad, tris.ravel(), contrib.ravel())
    return E, grad, min_J


def flip_cap(tris, w, d, keep):
    """Largest step a with area(w + t*d) >= keep*area(w) for t in [0, a]."""
    wa, wb, wc = (w[tris[:, k]] for k in range(3))
    da, db, dc = (d[tris[:, k]] for k in range(3))
    u, v = wb - wa, wc - wa
    s, t = db - da, dc - da

    def cross(a, b):
        return (np.conj(a) * b).imag

    A0 = 0.5 * cross(u, v)
    A1 = 0.5 * (cross(u, t) + cross(s, v))
    A2 = 0.5 * cross(s, t)
    # roots of A2 a^2 + A1 a + (1-keep) A0 = 0
    c0 = (1.0 - keep) * A0
    cap = np.inf
    quad = np.abs(A2) > 1e-300
    lin = ~quad & (A1 < 0)
    if np.any(lin):
        cap = min(cap, float(np.min(-c0[lin] / A1[lin])))
    if np.any(quad):
        a2, a1, a0 = A2[quad], A1[quad], c0[quad]
        disc = a1 * a1 - 4.0 * a2 * a0
        ok = disc >= 0.0
        if np.any(ok):
            sq = np.sqrt(disc[ok])
            r1 = (-a1[ok] - sq) / (2.0 * a2[ok])
            r2 = (-a1[ok] + sq) / (2.0 * a2[ok])
            lo = np.minimum(r1, r2)
            hi = np.maximum(r1, r2)
            pos = np.where(lo > 0, lo, np.where(hi > 0, hi, np.inf))
            cap = min(cap, float(np.min(pos)))
    return cap


def _bary_all(points, tris, verts):
    a = verts[tris[:, 0]]
    u = verts[tris[:, 1]] - a
    v = verts[tris[:, 2]] - a
    den = (np.conj(u) * v).imag
    pa = points[:, None] - a[None, :]
    l1 = (np.conj(pa) * v[None, :]).imag / den[None, :]
    l2 = (np.conj(u[None, :]) * pa).imag / den[None, :]
    l0 = 1.0 - l1 - l2
    return np.stack([l0, l1, l2], axis=2)


def locate(points, tris, neighbors, verts, tol=1e-12):
    """Containing triangle and barycentric coordinates for each point.

    Brute force over all triangles (first containing index wins); points
    more than ``tol`` outside every triangle get the best-fitting triangle
    so the caller can measure the violation.
    """
    P = len(points)
    idx = np.full(P, -1, dtype=np.int64)
    bary = np.zeros((P, 3), dtype=float)
    chunk = max(1, int(4e6 // max(len(tris), 1)))
    for lo in range(0, P, chunk):
        hi = min(P, lo + chunk)
        lam = _bary_all(points[lo:hi], tris, verts)    # (p, T, 3)
        minl = lam.min(axis=2)
        okmask = minl >= -tol
        first = np.argmax(okmask, axis=1)
        found = okmask[np.arange(hi - lo), first]
        best = np.argmax(minl, axis=1)
        pick = np.where(found, first, best)
        idx[lo:hi] = pick
        bary[lo:hi] = lam[np.arange(hi - lo), pick]
    return idx, bary
