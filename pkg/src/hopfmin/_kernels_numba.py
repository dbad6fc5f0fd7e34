"""Numba-compiled kernels (default backend).

Explicit loops, no parallelism and no fastmath: summation order is fixed
so repeated runs are bit-identical.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._kernels_numpy import deriv_coeffs  # pure setup work, not a hot loop

KIND_DIRICHLET = 0
KIND_DISTORTION = 1

_OPTS = {"cache": True, "nogil": True}


@njit(**_OPTS)
def _tri_derivs_impl(tris, zref, w):
    T = tris.shape[0]
    fz = np.empty(T, dtype=np.complex128)
    fzb = np.empty(T, dtype=np.complex128)
    J = np.empty(T, dtype=np.float64)
    for t in range(T):
        z1 = zref[tris[t, 0]]
        z21 = zref[tris[t, 1]] - z1
        z31 = zref[tris[t, 2]] - z1
        w1 = w[tris[t, 0]]
        w21 = w[tris[t, 1]] - w1
        w31 = w[tris[t, 2]] - w1
        D = z21 * np.conj(z31) - z31 * np.conj(z21)
        a = (w21 * np.conj(z31) - w31 * np.conj(z21)) / D
        b = (w31 * z21 - w21 * z31) / D
        fz[t] = a
        fzb[t] = b
        J[t] = (a.real * a.real + a.imag * a.imag) - (b.real * b.real + b.imag * b.imag)
    return fz, fzb, J


def tri_derivs(tris, zref, w):
    return _tri_derivs_impl(tris, np.ascontiguousarray(zref),
                            np.ascontiguousarray(w))


@njit(**_OPTS)
def _energy_grad_impl(tris, A, B, areas, w, kind, p, phi, dphi, compute_grad):
    T = tris.shape[0]
    V = w.shape[0]
    grad = np.zeros(V, dtype=np.complex128)
    E = 0.0
    min_J = np.inf
    for t in range(T):
        i0, i1, i2 = tris[t, 0], tris[t, 1], tris[t, 2]
        fz = A[t, 0] * w[i0] + A[t, 1] * w[i1] + A[t, 2] * w[i2]
        fzb = B[t, 0] * w[i0] + B[t, 1] * w[i1] + B[t, 2] * w[i2]
        s = fz.real * fz.real + fz.imag * fz.imag + fzb.real * fzb.real + fzb.imag * fzb.imag
        J = (fz.real * fz.real + fz.imag * fz.imag) - (fzb.real * fzb.real + fzb.imag * fzb.imag)
        if J < min_J:
            min_J = J
        a = areas[t]
        if kind == 1:
            if J <= 0.0:
                return np.inf, grad, min_J
            K = s / J
            Kp = K ** (p - 1.0)
            E += Kp * s * a
            if compute_grad:
                coef = Kp * a
                for k in range(3):
                    i = tris[t, k]
                    Gs = 2.0 * (fz * np.conj(A[t, k]) + fzb * np.conj(B[t, k]))
                    GJ = 2.0 * (fz * np.conj(A[t, k]) - fzb * np.conj(B[t, k]))
                    grad[i] += coef * (p * Gs - (p - 1.0) * K * GJ)
        else:
            E += 2.0 * phi[t] * s * a
            if compute_grad:
                for k in range(3):
                    i = tris[t, k]
                    Gs = 2.0 * (fz * np.conj(A[t, k]) + fzb * np.conj(B[t, k]))
                    grad[i] += 2.0 * phi[t] * a * Gs + (2.0 / 3.0) * s * a * dphi[t]
    return E, grad, min_J


def energy_grad(tris, A, B, areas, w, kind, p, phi, dphi, compute_grad=True):
    E, grad, min_J = _energy_grad_impl(
        tris, A, B, areas, np.ascontiguousarray(w),
        kind, float(p), phi, dphi, compute_grad)
    return float(E), grad, float(min_J)


@njit(**_OPTS)
def _flip_cap_impl(tris, w, d, keep):
    cap = np.inf
    for t in range(tris.shape[0]):
        wa, wb, wc = w[tris[t, 0]], w[tris[t, 1]], w[tris[t, 2]]
        da, db, dc = d[tris[t, 0]], d[tris[t, 1]], d[tris[t, 2]]
        u = wb - wa
        v = wc - wa
        su = db - da
        sv = dc - da
        A0 = 0.5 * (u.real * v.imag - u.imag * v.real)
        A1 = 0.5 * ((u.real * sv.imag - u.imag * sv.real)
                    + (su.real * v.imag - su.imag * v.real))
        A2 = 0.5 * (su.real * sv.imag - su.imag * sv.real)
        c0 = (1.0 - keep) * A0
        if abs(A2) <= 1e-300:
            if A1 < 0.0:
                r = -c0 / A1
                if r < cap:
                    cap = r
        else:
            disc = A1 * A1 - 4.0 * A2 * c0
            if disc >= 0.0:
                sq = np.sqrt(disc)
                r1 = (-A1 - sq) / (2.0 * A2)
                r2 = (-A1 + sq) / (2.0 * A2)
                lo = min(r1, r2)
                hi = max(r1, r2)
                if lo > 0.0:
                    r = lo
                elif hi > 0.0:
                    r = hi
                else:
                    r = np.inf
                if r < cap:
                    cap = r
    return cap


def flip_cap(tris, w, d, keep):
    return float(_flip_cap_impl(tris, np.ascontiguousarray(w),
                                np.ascontiguousarray(d), float(keep)))


@njit(**_OPTS)
def _bary_in(pt, t, tris, verts):
    a = verts[tris[t, 0]]
    u = verts[tris[t, 1]] - a
    v = verts[tris[t, 2]] - a
    den = u.real * v.imag - u.imag * v.real
    pa = pt - a
    l1 = (pa.real * v.imag - pa.imag * v.real) / den
    l2 = (u.real * pa.imag - u.imag * pa.real) / den
    return 1.0 - l1 - l2, l1, l2


@njit(**_OPTS)
def _locate_impl(points, tris, neighbors, verts, tol):
    P = points.shape[0]
    T = tris.shape[0]
    idx = np.empty(P, dtype=np.int64)
    bary = np.empty((P, 3), dtype=np.float64)
    start = 0
    for pi in range(P):
        pt = points[pi]
        t = start
        found = -1
        for _ in range(4 * T + 4):
            l0, l1, l2 = _bary_in(pt, t, tris, verts)
            if l0 >= -tol and l1 >= -tol and l2 >= -tol:
                found = t
                break
            # step across the most negative side; sides (k)->(k+1) oppose
            # barycentric coordinate (k+2)
            worst = 0
            lmin = l0
            if l1 < lmin:
                worst = 1
                lmin = l1
            if l2 < lmin:
                worst = 2
                lmin = l2
            nxt = neighbors[t, (worst + 1) % 3]
            if nxt < 0:
                break
            t = nxt
        if found < 0:
            # brute force: first triangle containing the point, else the
            # best-fitting one
            best_t = 0
            best_m = -np.inf
            for tt in range(T):
                l0, l1, l2 = _bary_in(pt, tt, tris, verts)
                m = min(l0, min(l1, l2))
                if m >= -tol:
                    found = tt
                    break
                if m > best_m:
                    best_m = m
                    best_t = tt
            if found < 0:
                found = best_t
        else:
            # deterministic tie-break toward the lower index on shared edges
            for k in range(3):
                nb = neighbors[found, k]
                if 0 <= nb < found:
                    l0, l1, l2 = _bary_in(pt, nb, tris, verts)
                    if l0 >= -tol and l1 >= -tol and l2 >= -tol:
                        found = nb
        l0, l1, l2 = _bary_in(pt, found, tris, verts)
        idx[pi] = found
        bary[pi, 0] = l0
        bary[pi, 1] = l1
        bary[pi, 2] = l2
        start = found
    return idx, bary


def locate(points, tris, neighbors, verts, tol=1e-12):
    return _locate_impl(np.ascontiguousarray(points), tris, neighbors,
                        np.ascontiguousarray(verts), float(tol))
