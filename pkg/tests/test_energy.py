import math

import numpy as np
import pytest

from hopfmin import (DiscreteMap, EnergyError, WeightFn, holder_check,
                     inverse_energy, invert, mean_distortion, triangulate,
                     weighted_dirichlet)
from hopfmin.geometry import as_complex, make_domain
from hopfmin.testing import random_square_diffeo


def shear(mesh, b):
    return DiscreteMap.from_callable(mesh, lambda z: z + b * np.conj(z))


def exact_abs2_integral(domain):
    """Closed form of the integral of |z|^2 over a polygon star-shaped
    around 0, via simplex moments of each fan triangle."""
    v = as_complex(domain.vertices)
    w = np.roll(v, -1)
    cross = (np.conj(v) * w).imag        # 2 * fan triangle area
    return float(np.sum(cross * (np.abs(v) ** 2 + np.abs(w) ** 2
                                 + (np.conj(v) * w).real) / 12.0))


class TestMeanDistortion:
    def test_identity_any_p(self, square_mesh):
        for p in (1.0, 1.5, 2.0, 3.0):
            e = mean_distortion(DiscreteMap.identity(square_mesh), p)
            assert abs(e.total - 1.0) <= 1e-12

    def test_constant_shear_on_disk(self, disk, disk_mesh):
        f = shear(disk_mesh, 0.5)
        area = disk.area
        e1 = mean_distortion(f, 1.0)
        assert abs(e1.total - (5.0 / 3.0) * area) <= 1e-10
        assert abs(e1.total - 5.227580817576565) <= 1e-3
        e2 = mean_distortion(f, 2.0)
        assert abs(e2.total - (25.0 / 9.0) * area) <= 1e-10

    def test_barrier_mode(self, square_mesh):
        flip = DiscreteMap.from_callable(square_mesh, np.conj)
        assert mean_distortion(flip, 2.0, barrier=True).total == np.inf

    def test_monotone_in_p(self, square_mesh):
        f = random_square_diffeo(0).sample(square_mesh)
        vals = [mean_distortion(f, p).total for p in (1.0, 1.5, 2.0, 3.0)]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_breakdown_sums(self, square_mesh):
        f = random_square_diffeo(1).sample(square_mesh)
        e = mean_distortion(f, 2.0)
        assert abs(e.total - e.per_triangle.sum()) <= 1e-12 * abs(e.total)


class TestInverseEnergy:
    def test_identity_disk(self, disk, disk_mesh):
        e = inverse_energy(DiscreteMap.identity(disk_mesh), 2.0)
        assert abs(e.total - disk.area) <= 1e-12

    def test_conformal_scaling(self):
        big = make_domain("disk-polygon", n=64, radius=2.0)
        unit = make_domain("disk-polygon", n=64, radius=1.0)
        mesh = triangulate(big, 0.3)
        h = DiscreteMap.from_callable(mesh, lambda z: z / 2.0)
        e = inverse_energy(h, 2.0)
        assert abs(e.total - unit.area) <= 1e-12

    def test_equals_mean_distortion_of_inverse(self, disk_mesh):
        # exact per-triangle algebra, any p
        f = shear(disk_mesh, 0.5)
        h = invert(f)
        for p in (1.5, 2.0, 3.0):
            assert abs(inverse_energy(h, p).total
                       - mean_distortion(f, p).total) <= 1e-8

    def test_flip_gives_infinity_with_offenders(self, square_mesh):
        e = inverse_energy(DiscreteMap.from_callable(square_mesh, np.conj), 2.0)
        assert e.total == np.inf
        assert len(e.offenders) == square_mesh.n_triangles


class TestWeightedDirichlet:
    def test_identity_constant_weight(self, square_mesh):
        e = weighted_dirichlet(DiscreteMap.identity(square_mesh), 1.0)
        assert abs(e.total - 2.0) <= 1e-12
        assert e.convention_constant == 2.0

    def test_shear_constant_weight(self, square_mesh):
        e = weighted_dirichlet(shear(square_mesh, 0.5), 1.0)
        assert abs(e.total - 2.5) <= 1e-12

    def test_abs2_weight_on_disk(self, disk):
        mesh = triangulate(disk, 0.1)
        iden = DiscreteMap.identity(mesh)
        phi = WeightFn.from_callable(lambda x, y: x * x + y * y,
                                     grad=lambda x, y: (2 * x, 2 * y))
        exact = 2.0 * exact_abs2_integral(disk)
        assert abs(exact - math.pi) <= 0.01 * math.pi
        # centroid rule lands within 1% of the smooth-disk value pi
        e1 = weighted_dirichlet(iden, phi, order=1)
        assert abs(e1.total - math.pi) <= 0.01 * math.pi
        # edge-midpoint rule integrates the quadratic weight exactly
        e3 = weighted_dirichlet(iden, phi, order=3)
        assert abs(e3.total - exact) <= 1e-12 * exact

    def test_nonpositive_weight_rejected(self, square_mesh):
        phi = WeightFn.from_callable(lambda x, y: x - 10.0)
        with pytest.raises(EnergyError, match="nonpositive"):
            weighted_dirichlet(DiscreteMap.identity(square_mesh), phi)

    def test_vertex_sample_weight(self, square_mesh):
        vals = 1.0 + square_mesh.vertices[:, 0]
        phi = WeightFn.from_vertex_samples(square_mesh, vals)
        iden = DiscreteMap.identity(square_mesh)
        e = weighted_dirichlet(iden, phi)
        # PL weight of a linear function is that function; centroid rule is
        # exact for linear integrands
        assert abs(e.total - 2.0 * 1.5) <= 1e-10


class TestDuality:
    def test_pullback_duality_exact(self, disk_mesh):
        # weighted Dirichlet of the inverse with weight K_f^(p-1) equals
        # twice the mean distortion, triangle by triangle
        from hopfmin.testing import random_disk_diffeo
        f = random_disk_diffeo(7).sample(disk_mesh)
        for p in (1.5, 2.0, 3.0):
            phi = WeightFn.distortion_pullback(f, p)
            lhs = weighted_dirichlet(invert(f), phi).total
            rhs = 2.0 * mean_distortion(f, p).total
            assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


class TestHolder:
    def test_identity_pair(self, square_mesh):
        iden = DiscreteMap.identity(square_mesh)
        rep = holder_check(iden, iden, 2.0)
        assert abs(rep.lhs - 2.0) <= 1e-12
        assert abs(rep.rhs - 2.0) <= 1e-12
        assert abs(rep.gap) <= 1e-12

    def test_equality_at_inverse(self, square_mesh):
        f = random_square_diffeo(2).sample(square_mesh)
        for p in (1.5, 2.0, 3.0):
            rep = holder_check(f, invert(f), p)
            assert abs(rep.gap) <= 1e-6 * abs(rep.rhs)

    def test_random_pairs_never_violate(self, square):
        # seeded sweep; tolerance -1e-9 * rhs.  Rough, well-separated pairs:
        # near-identity pairs sit close to the equality case, where the
        # piecewise-constant weight sampling error can exceed the margin.
        mesh = triangulate(square, 0.1)
        for seed in range(30):
            f = random_square_diffeo(1000 + seed, amp=0.35, n_bumps=3).sample(mesh)
            g = random_square_diffeo(5000 + seed, amp=0.25, n_bumps=4).sample(mesh)
            for p in (1.5, 2.0, 3.0):
                rep = holder_check(f, g, p)
                assert rep.gap >= -1e-9 * rep.rhs
