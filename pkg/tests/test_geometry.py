import math

import numpy as np
import pytest

from hopfmin import (BoundaryMap, GeometryError, boundary_targets, make_domain,
                     triangulate)
from hopfmin.geometry import (as_complex, distance_to_polygon,
                              point_at_fraction, fraction_of_point,
                              points_in_polygon, polygon_area, triangle_areas,
                              winding_number)


class TestMakeDomain:
    def test_unit_square(self):
        d = make_domain("rectangle", w=1, h=1)
        assert d.convex
        assert abs(d.area - 1.0) < 1e-15
        assert len(d.vertices) == 4

    def test_disk_polygon_area(self):
        # regular n-gon area (n/2) r^2 sin(2 pi / n)
        d = make_domain("disk-polygon", n=64, radius=1.0)
        expected = 0.5 * 64 * math.sin(2 * math.pi / 64)
        assert d.convex
        assert abs(d.area - expected) <= 1e-12
        assert abs(expected - 3.1365) < 1e-4

    def test_lshape(self, lshape):
        assert not lshape.convex
        assert abs(lshape.area - 3.0) <= 1e-12

    def test_clockwise_input_reversed(self):
        d = make_domain("polygon", vertices=[(0, 0), (0, 1), (1, 1), (1, 0)])
        assert polygon_area(d.vertices) > 0

    def test_self_intersection_rejected(self):
        with pytest.raises(GeometryError, match="edge 0 crosses edge 2"):
            make_domain("polygon", vertices=[(0, 0), (1, 1), (1, 0), (0, 1)])

    def test_degenerate_rejected(self):
        with pytest.raises(GeometryError):
            make_domain("polygon", vertices=[(0, 0), (1, 0), (2, 0)])


class TestTriangulate:
    def test_square_exact_cover(self, square):
        m = triangulate(square, 0.5)
        assert abs(m.total_area - 1.0) <= 1e-12
        assert np.all(m.areas > 0)

    def test_disk_area_close_to_pi(self, disk):
        m = triangulate(disk, 0.2)
        assert abs(m.total_area - math.pi) <= 0.01 * math.pi
        # and exactly the polygon area
        assert abs(m.total_area - disk.area) <= 1e-12

    def test_lshape_cover_and_boundary_count(self, lshape):
        m = triangulate(lshape, 0.25)
        assert abs(m.total_area - 3.0) <= 1e-12
        # perimeter 8 at edge 0.25 -> 32 boundary vertices
        assert len(m.boundary_loop) == 32

    def test_max_edge_bound(self, disk):
        for edge in (0.2, 0.1):
            m = triangulate(disk, edge)
            assert m.edge_lengths.max() <= 1.5 * edge + 1e-12

    def test_deterministic(self, disk):
        m1 = triangulate(disk, 0.17)
        m2 = triangulate(disk, 0.17)
        assert np.array_equal(m1.vertices, m2.vertices)
        assert np.array_equal(m1.triangles, m2.triangles)

    def test_bad_edge(self, disk):
        with pytest.raises(GeometryError):
            triangulate(disk, 0.0)

    def test_boundary_loop_is_ccw_boundary(self, disk_mesh):
        loop = disk_mesh.vertices[disk_mesh.boundary_loop]
        assert polygon_area(loop) > 0
        probe = loop.mean(axis=0)
        assert abs(winding_number(loop, probe) - 1.0) < 1e-9


class TestBoundaryTargets:
    def test_identity_square(self, square):
        m = triangulate(square, 0.25)
        bm = BoundaryMap.identity(square)
        targets = boundary_targets(m, bm, square)
        assert np.abs(targets - m.vertices[m.boundary_loop]).max() <= 1e-12

    def test_rotation_on_disk(self, disk):
        m = triangulate(disk, 0.2)
        # rotation by pi/2 is an arclength shift by a quarter
        from hopfmin.geometry import _cumulative_fractions
        s = _cumulative_fractions(disk.vertices)[:-1]
        w = np.roll(disk.vertices, -16, axis=0)
        bm = BoundaryMap(s, w)
        targets = boundary_targets(m, bm, disk)
        z = as_complex(m.vertices[m.boundary_loop])
        expected = 1j * z
        got = as_complex(targets)
        assert np.abs(got - expected).max() <= 1e-12

    def test_monotonicity_violation(self):
        with pytest.raises(GeometryError, match="monotonicity violated"):
            BoundaryMap(np.array([0.0, 0.5, 0.25]),
                        np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]))

    def test_image_winding(self, disk, square):
        # map disk boundary onto the square boundary, check cyclic order
        m = triangulate(disk, 0.2)
        bm = BoundaryMap.from_function(
            disk, square, lambda s: point_at_fraction(square.vertices, s))
        targets = boundary_targets(m, bm, square)
        assert abs(winding_number(targets, (0.5, 0.5)) - 1.0) < 1e-9


class TestHelpers:
    def test_point_in_polygon(self, lshape):
        pts = np.array([[0.5, 0.5], [1.5, 1.5], [0.5, 1.5], [1.5, 0.5]])
        got = points_in_polygon(pts, lshape.vertices)
        assert got.tolist() == [True, False, True, True]

    def test_distance_to_polygon(self, square):
        d = distance_to_polygon(np.array([[0.5, 0.5], [0.5, 0.1]]),
                                square.vertices)
        assert np.allclose(d, [0.5, 0.1])

    def test_fraction_roundtrip(self, disk):
        t = np.array([0.0, 0.1, 0.37, 0.9])
        pts = point_at_fraction(disk.vertices, t)
        back = fraction_of_point(disk.vertices, pts)
        assert np.allclose(back, t, atol=1e-12)

    def test_triangle_areas_sign(self):
        v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert triangle_areas(v, np.array([[0, 1, 2]]))[0] == pytest.approx(0.5)
        assert triangle_areas(v, np.array([[0, 2, 1]]))[0] == pytest.approx(-0.5)
