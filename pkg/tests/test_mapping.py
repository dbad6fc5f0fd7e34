import numpy as np
import pytest

from hopfmin import DiscreteMap, MapError, compose, derivatives, invert
from hopfmin.mapping import evaluate, locate_points
from hopfmin.testing import random_disk_diffeo


def affine(mesh, a, b, c=0.0):
    return DiscreteMap.from_callable(
        mesh, lambda z: a * z + b * np.conj(z) + c)


class TestDerivatives:
    def test_identity(self, disk_mesh):
        d = derivatives(DiscreteMap.identity(disk_mesh))
        assert np.abs(d.fz - 1.0).max() <= 1e-14
        assert np.abs(d.fzb).max() <= 1e-14
        assert np.abs(d.J - 1.0).max() <= 1e-14
        assert np.abs(d.K - 1.0).max() <= 1e-14

    def test_shear(self, disk_mesh):
        d = derivatives(affine(disk_mesh, 1.0, 0.5))
        assert np.abs(d.fz - 1.0).max() <= 1e-12
        assert np.abs(d.fzb - 0.5).max() <= 1e-12
        assert np.abs(d.J - 0.75).max() <= 1e-12
        assert np.abs(d.K - 5.0 / 3.0).max() <= 1e-12

    def test_reflection_flagged(self, disk_mesh):
        d = derivatives(DiscreteMap.from_callable(disk_mesh, np.conj))
        assert np.abs(d.J + 1.0).max() <= 1e-12
        assert not d.orientation_ok.any()
        assert len(d.flipped) == disk_mesh.n_triangles
        assert np.isnan(d.K).all()

    def test_conformal_distortion_exactly_one(self, disk_mesh):
        d = derivatives(affine(disk_mesh, 0.7 + 0.4j, 0.0, 1.0 - 2.0j))
        assert np.all(d.K == 1.0)

    def test_jacobian_consistency(self, disk_mesh):
        # J equals |fz|^2 - |fzb|^2 by construction; check against image
        # area ratios, the geometric definition
        f = random_disk_diffeo(1).sample(disk_mesh)
        d = derivatives(f)
        from hopfmin.geometry import triangle_areas
        img = triangle_areas(f.targets, disk_mesh.triangles)
        assert np.abs(d.J - img / disk_mesh.areas).max() <= 1e-10


class TestInvert:
    def test_identity(self, disk_mesh):
        h = invert(DiscreteMap.identity(disk_mesh))
        assert np.abs(h.targets - disk_mesh.vertices).max() == 0.0

    def test_inverse_derivative_formulas(self, disk_mesh):
        f = affine(disk_mesh, 1.0, 0.5)
        df = derivatives(f)
        h = invert(f)
        dh = derivatives(h)
        # per matching triangle: h_w = conj(f_z)/J and h_wb = -f_zb/J
        assert np.abs(dh.fz - np.conj(df.fz) / df.J).max() <= 1e-12
        assert np.abs(dh.fzb + df.fzb / df.J).max() <= 1e-12

    def test_roundtrip(self, disk_mesh):
        f = random_disk_diffeo(3).sample(disk_mesh)
        rt = compose(invert(f), f)
        assert np.abs(rt.targets - disk_mesh.vertices).max() <= 1e-10

    def test_distortion_inversion_invariant(self, disk_mesh):
        f = random_disk_diffeo(4).sample(disk_mesh)
        df = derivatives(f)
        dh = derivatives(invert(f))
        assert np.abs(df.K - dh.K).max() <= 1e-10

    def test_flip_rejected(self, disk_mesh):
        with pytest.raises(MapError, match="not invertible"):
            invert(DiscreteMap.from_callable(disk_mesh, np.conj))


class TestCompose:
    def test_identity_outer(self, disk_mesh):
        f = random_disk_diffeo(5).sample(disk_mesh)
        c = compose(DiscreteMap.identity(disk_mesh), f)
        assert np.abs(c.targets - f.targets).max() <= 1e-13

    def test_rotation_group_law(self, disk_mesh):
        # rotations by multiples of the polygon step map the 64-gon onto
        # itself, so the composition stays inside the reference region
        a = np.exp(1j * 2.0 * np.pi * 5 / 64)
        b = np.exp(1j * 2.0 * np.pi * 9 / 64)
        ra = affine(disk_mesh, a, 0.0)
        rb = affine(disk_mesh, b, 0.0)
        c = compose(ra, rb)
        expected = affine(disk_mesh, a * b, 0.0)
        assert np.abs(c.targets - expected.targets).max() <= 1e-12

    def test_affine_algebra(self, disk_mesh):
        # compose(invert(H), h) for affine h, H matches the closed form;
        # h contracts so its image stays inside H's image
        ah, bh = 0.5 + 0.05j, 0.1
        aH, bH = 0.9, 0.2j
        h = affine(disk_mesh, ah, bh)
        H = affine(disk_mesh, aH, bH)
        got = compose(invert(H), h)
        # invert of w = aH z + bH conj(z): z = (conj(aH) w - bH conj(w))/J
        JH = abs(aH) ** 2 - abs(bH) ** 2

        def Hinv(w):
            return (np.conj(aH) * w - bH * np.conj(w)) / JH

        expected = DiscreteMap.from_callable(
            disk_mesh, lambda z: Hinv(ah * z + bh * np.conj(z)))
        assert np.abs(got.targets - expected.targets).max() <= 1e-10

    def test_outside_point_rejected(self, disk_mesh):
        far = DiscreteMap.from_callable(disk_mesh, lambda z: z + 10.0)
        with pytest.raises(MapError, match="outside"):
            compose(DiscreteMap.identity(disk_mesh), far)


class TestLocate:
    def test_roundtrip_interpolation(self, disk_mesh):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-0.5, 0.5, size=(200, 2))
        idx, bary = locate_points(disk_mesh, pts)
        rec = np.einsum("pk,pkj->pj", bary,
                        disk_mesh.vertices[disk_mesh.triangles[idx]])
        assert np.abs(rec - pts).max() <= 1e-12

    def test_evaluate_matches_vertices(self, disk_mesh):
        f = random_disk_diffeo(6).sample(disk_mesh)
        got = evaluate(f, disk_mesh.vertices[:50])
        assert np.abs(got - f.targets[:50]).max() <= 1e-12
