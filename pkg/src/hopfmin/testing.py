"""Smooth reference maps for verification studies.

These provide analytically differentiable planar diffeomorphisms (affine
plus Gaussian bumps damped to vanish on the domain boundary), exact
Wirtinger derivatives, and Newton inversion.  They serve as independent
oracles: discrete quantities computed from their vertex samples can be
compared against smooth-side quadratures.
"""

from __future__ import annotations

import numpy as np

from .geometry import as_xy
from .mapping import DiscreteMap


class SmoothMap:
    """Map z -> base(z) + sum_j c_j * cutoff(z) * gaussian_j(z).

    ``cutoff`` and the gaussians are real-valued; the complex coefficients
    c_j displace both coordinates.  All Wirtinger derivatives are exact.
    """

    def __init__(self, a=1.0, b=0.0, c0=0.0, bumps=(), cutoff=None):
        self.a = complex(a)
        self.b = complex(b)
        self.c0 = complex(c0)
        self.bumps = list(bumps)           # (center q, width sigma, coeff c)
        self.cutoff = cutoff               # None, ("disk", R), ("square", L)

    # -- cutoff chi and its Wirtinger derivatives ---------------------------

    def _chi(self, z):
        if self.cutoff is None:
            one = np.ones_like(z, dtype=float)
            return one, np.zeros_like(z), np.zeros_like(z)
        kind, size = self.cutoff
        if kind == "disk":
            r2 = (z * np.conj(z)).real
            chi = (size ** 2 - r2) / size ** 2
            dz = -np.conj(z) / size ** 2
            dzb = -z / size ** 2
            return chi, dz.astype(complex), dzb.astype(complex)
        if kind == "square":
            x, y = z.real, z.imag
            sx, sy = np.sin(np.pi * x / size), np.sin(np.pi * y / size)
            cx, cy = np.cos(np.pi * x / size), np.cos(np.pi * y / size)
            chi = sx * sy
            gx = (np.pi / size) * cx * sy
            gy = (np.pi / size) * sx * cy
            return chi, 0.5 * (gx - 1j * gy), 0.5 * (gx + 1j * gy)
        raise ValueError(f"unknown cutoff {kind}")

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.a * z + self.b * np.conj(z) + self.c0
        if self.bumps:
            chi, _, _ = self._chi(z)
            for q, sig, c in self.bumps:
                g = np.exp(-np.abs(z - q) ** 2 / sig ** 2)
                out = out + c * chi * g
        return out

    def wirtinger(self, z):
        """Exact (f_z, f_zb) at the given points."""
        z = np.asarray(z, dtype=complex)
        fz = np.full_like(z, self.a)
        fzb = np.full_like(z, self.b)
        if self.bumps:
            chi, chi_z, chi_zb = self._chi(z)
            for q, sig, c in self.bumps:
                d = z - q
                g = np.exp(-(d * np.conj(d)).real / sig ** 2)
                g_z = -np.conj(d) / sig ** 2 * g
                g_zb = -d / sig ** 2 * g
                fz = fz + c * (chi_z * g + chi * g_z)
                fzb = fzb + c * (chi_zb * g + chi * g_zb)
        return fz, fzb

    def jacobian(self, z):
        fz, fzb = self.wirtinger(z)
        return np.abs(fz) ** 2 - np.abs(fzb) ** 2

    def distortion(self, z):
        fz, fzb = self.wirtinger(z)
        J = np.abs(fz) ** 2 - np.abs(fzb) ** 2
        return (np.abs(fz) ** 2 + np.abs(fzb) ** 2) / J

    def invert(self, w, z0=None, iters=60, tol=1e-14):
        """Newton inversion of the smooth map at points ``w``."""
        w = np.asarray(w, dtype=complex)
        z = (w.copy() if z0 is None else np.asarray(z0, dtype=complex).copy())
        for _ in range(iters):
            r = self.value(z) - w
            if np.max(np.abs(r)) < tol:
                break
            fz, fzb = self.wirtinger(z)
            J = np.abs(fz) ** 2 - np.abs(fzb) ** 2
            z = z - (np.conj(fz) * r - fzb * np.conj(r)) / J
        return z

    def sample(self, mesh) -> DiscreteMap:
        return DiscreteMap(mesh, as_xy(self.value(mesh.vertices_z)))

    def min_jacobian_on_grid(self, lo, hi, n=80):
        gx = np.linspace(lo[0], hi[0], n)
        gy = np.linspace(lo[1], hi[1], n)
        X, Y = np.meshgrid(gx, gy)
        return float(self.jacobian((X + 1j * Y).ravel()).min())


def random_disk_diffeo(seed, radius=1.0, amp=0.12, n_bumps=3, affine=None):
    """Random diffeomorphism of the disk, identity (or affine) plus bumps
    damped by (R^2 - |z|^2); bump amplitudes shrink until the Jacobian is
    positive on a grid covering the disk."""
    rng = np.random.default_rng(seed)
    a, b = (1.0, 0.0) if affine is None else affine
    geom = []
    for _ in range(n_bumps):
        q = rng.uniform(0.0, 0.6) * radius * np.exp(1j * rng.uniform(0, 2 * np.pi))
        sig = rng.uniform(0.35, 0.6) * radius
        c = rng.normal() + 1j * rng.normal()
        geom.append((q, sig, c))
    scale = amp
    for _ in range(40):
        f = SmoothMap(a=a, b=b,
                      bumps=[(q, s, scale * radius * c) for q, s, c in geom],
                      cutoff=("disk", radius))
        if f.min_jacobian_on_grid((-radius, -radius), (radius, radius)) > 0.05:
            return f
        scale *= 0.7
    raise RuntimeError("could not build an injective disk diffeomorphism")


def random_square_diffeo(seed, side=1.0, amp=0.1, n_bumps=3):
    """Random diffeomorphism of the square fixing the whole boundary
    (sine cutoff vanishes on all four sides)."""
    rng = np.random.default_rng(seed)
    geom = []
    for _ in range(n_bumps):
        q = complex(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)) * side
        sig = rng.uniform(0.3, 0.55) * side
        c = rng.normal() + 1j * rng.normal()
        geom.append((q, sig, c))
    scale = amp
    for _ in range(40):
        f = SmoothMap(bumps=[(q, s, scale * side * c) for q, s, c in geom],
                      cutoff=("square", side))
        if f.min_jacobian_on_grid((0, 0), (side, side)) > 0.05:
            return f
        scale *= 0.7
    raise RuntimeError("could not build an injective square diffeomorphism")
