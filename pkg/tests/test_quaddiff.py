import numpy as np
import pytest

from hopfmin import (QuadraticDifferential, fubini_check, make_domain,
                     minimality_check, natural_parameter, phi_length, trace,
                     triangulate, vertical_family)
from hopfmin.quaddiff import TraceError, Trajectory


@pytest.fixture(scope="module")
def big_square():
    return make_domain("polygon", vertices=[(-3, -3), (3, -3), (3, 3), (-3, 3)])


@pytest.fixture(scope="module")
def qd_z(big_square):
    return QuadraticDifferential.polynomial([0.0, 1.0], big_square)


def oracle_z_vertical(s):
    """Vertical trajectory of phi(z) = z through z = 1: in the coordinate
    zeta = (2/3) z^(3/2) it is the vertical line Re zeta = 2/3."""
    return (1.0 + 1.5j * np.asarray(s)) ** (2.0 / 3.0)


def max_dist_to_polyline(P, Q):
    """max over points P of the distance to the polyline with nodes Q."""
    A, B = Q[:-1], Q[1:]
    out = np.empty(len(P))
    ab = B - A
    for i in range(0, len(P), 256):
        p = P[i:i + 256, None]
        t = np.clip(((p - A[None]) * np.conj(ab[None])).real
                    / np.abs(ab[None]) ** 2, 0.0, 1.0)
        proj = A[None] + t * ab[None]
        out[i:i + 256] = np.abs(p - proj).min(axis=1)
    return float(out.max())


class TestConstruction:
    def test_polynomial_critical_points(self, big_square):
        qd = QuadraticDifferential.polynomial([0.0, 1.0], big_square)
        assert np.abs(qd.critical_points - 0.0).max() <= 1e-12
        qd2 = QuadraticDifferential.polynomial([-0.25, 0.0, 1.0], big_square)
        assert sorted(np.round(qd2.critical_points.real, 6)) == [-0.5, 0.5]

    def test_callable_form(self, big_square):
        qd = QuadraticDifferential.from_callable(np.exp, big_square)
        assert np.abs(qd.phi(np.array([0.0])) - 1.0).max() <= 1e-15


class TestTrace:
    def test_constant_vertical(self, square):
        qd = QuadraticDifferential.polynomial([1.0], square)
        t = trace(qd, (0.5, 0.2), "vertical", step=1e-3)
        assert t.termination == "boundary"
        assert np.abs(t.points[:, 0] - 0.5).max() <= 1e-12
        assert t.points[:, 1].min() <= 1e-12
        assert t.points[:, 1].max() >= 1.0 - 1e-12
        assert abs(t.phi_length - 1.0) <= 1e-12

    def test_negative_constant_swaps_roles(self, square):
        qd = QuadraticDifferential.polynomial([-1.0], square)
        t = trace(qd, (0.5, 0.5), "vertical", step=1e-3)
        assert np.abs(t.points[:, 1] - 0.5).max() <= 1e-12
        h = trace(qd, (0.5, 0.5), "horizontal", step=1e-3)
        assert np.abs(h.points[:, 0] - 0.5).max() <= 1e-12

    def test_linear_coefficient_matches_oracle(self, qd_z):
        t = trace(qd_z, (1.0, 0.0), "vertical", step=1e-3)
        oz = oracle_z_vertical(np.linspace(-3, 3, 60001))
        oz = oz[np.abs(oz) <= 2.5]
        mine = t.points_z
        mine = mine[np.abs(mine) <= 2.5]
        # traced vertices against the analytic curve
        assert max_dist_to_polyline(mine, oz) <= 1e-4
        # and the analytic samples against the traced polyline (symmetric)
        inside = np.abs(oz) <= 2.4
        assert max_dist_to_polyline(oz[inside], t.points_z) <= 1e-4

    def test_fourth_order_convergence(self, qd_z):
        oz = oracle_z_vertical(np.linspace(-3, 3, 200001))
        devs = {}
        for step in (0.1, 0.05):
            t = trace(qd_z, (1.0, 0.0), "vertical", step=step)
            mine = t.points_z
            mine = mine[np.abs(mine) <= 2.5]
            devs[step] = max_dist_to_polyline(mine, oz)
        assert devs[0.1] / devs[0.05] >= 8.0

    def test_tangent_condition(self, qd_z):
        t = trace(qd_z, (1.0, 0.0), "vertical", step=5e-3)
        z = t.points_z
        mid = 0.5 * (z[:-1] + z[1:])
        tang = np.diff(z)
        val = qd_z.phi(mid)
        ratio = (val * tang ** 2).real / (np.abs(val) * np.abs(tang) ** 2)
        assert ratio.max() <= -1.0 + 1e-6

    def test_critical_start_rejected(self, qd_z):
        with pytest.raises(TraceError, match="critical"):
            trace(qd_z, (0.0, 0.0), "vertical")

    def test_critical_termination(self, big_square):
        # phi = z^2 - 0.25 has zeros at +-0.5; the vertical trajectory
        # started between them runs into a critical ball
        qd = QuadraticDifferential.polynomial([-0.25, 0.0, 1.0], big_square)
        t = trace(qd, (0.0, 0.0), "vertical", step=1e-3)
        assert t.termination in ("critical-point", "boundary")

    def test_natural_parameter_straightness(self, qd_z):
        t = trace(qd_z, (1.0, 0.0), "vertical", step=1e-3)
        zeta = natural_parameter(qd_z, t.points)
        span = np.abs(zeta[-1] - zeta[0])
        assert np.abs(zeta.real - zeta.real[0]).max() <= 1e-6 * span
        h = trace(qd_z, (1.0, 0.0), "horizontal", step=1e-3)
        zeta_h = natural_parameter(qd_z, h.points)
        assert np.abs(zeta_h.imag - zeta_h.imag[0]).max() \
            <= 1e-6 * np.abs(zeta_h[-1] - zeta_h[0])


class TestPhiLength:
    def test_constant(self, square):
        qd = QuadraticDifferential.polynomial([4.0], square)
        L = phi_length(qd, np.array([[0.1, 0.1], [0.9, 0.1]]))
        assert abs(L - 2 * 0.8) <= 1e-14

    def test_sqrt_integral(self, big_square):
        qd = QuadraticDifferential.polynomial([0.0, 1.0], big_square)
        t = np.linspace(0.0, 1.0, 1001)
        curve = np.stack([t, np.zeros_like(t)], axis=1)
        assert abs(phi_length(qd, curve) - 2.0 / 3.0) <= 1e-6

    def test_traced_unit_segment(self, square):
        qd = QuadraticDifferential.polynomial([1.0], square)
        t = trace(qd, (0.5, 0.4), "vertical", step=1e-3)
        assert abs(t.phi_length - 1.0) <= 1e-12


class TestMinimality:
    def test_straight_line_euclidean(self, square):
        qd = QuadraticDifferential.polynomial([1.0], square)
        t = trace(qd, (0.5, 0.3), "vertical", step=1e-3)
        rep = minimality_check(qd, t, competitors=200, seed=0)
        assert rep.margin >= 0.0
        assert rep.n_competitors == 200

    def test_linear_coefficient(self, qd_z):
        t = trace(qd_z, (1.0, 0.0), "vertical", step=1e-3)
        rep = minimality_check(qd_z, t, competitors=200, seed=1)
        assert rep.margin >= -1e-9

    def test_degenerate(self, square):
        qd = QuadraticDifferential.polynomial([1.0], square)
        t = Trajectory(points=np.array([[0.3, 0.3], [0.3, 0.3]]),
                       kind="vertical", termination="step-limit",
                       phi_length=0.0)
        rep = minimality_check(qd, t, competitors=10, seed=2)
        assert rep.degenerate
        assert rep.margin >= 0.0


def sector_region():
    """Preimage of a natural-parameter rectangle under zeta = (2/3) z^(3/2):
    a curvilinear sector avoiding the critical point at 0."""
    def zinv(zeta):
        return (1.5 * zeta) ** (2.0 / 3.0)

    xs = np.linspace(0.4, 1.0, 60)
    ys = np.linspace(-0.25, 0.25, 30)
    bd = np.concatenate([xs + 1j * ys[0], (xs[-1] + 1j * ys)[1:],
                         (xs[::-1] + 1j * ys[-1])[1:],
                         (xs[0] + 1j * ys[::-1])[1:-1]])
    v = zinv(bd)
    return make_domain("polygon",
                       vertices=np.stack([v.real, v.imag], axis=1)), zinv


class TestFubini:
    def test_classical_unit_square(self, square):
        qd = QuadraticDifferential.polynomial([1.0], square)
        fam, seeds, h = vertical_family(qd, (0.5, 0.5), spacing=0.1, step=0.02)
        assert len(fam) == 10
        one = lambda z: np.ones_like(z.real)
        rep = fubini_check(qd, one, one, fam, h, region=square, mesh_edge=0.1)
        assert np.abs(rep.line_F - 1.0).max() <= 1e-12
        assert abs(rep.domain_F - 1.0) <= 1e-12
        assert abs(rep.recon_F - 1.0) <= 1e-12

    def test_classical_linear_density(self, square):
        qd = QuadraticDifferential.polynomial([1.0], square)
        fam, seeds, h = vertical_family(qd, (0.5, 0.5), spacing=0.1, step=0.02)
        F = lambda z: z.real
        G = lambda z: np.ones_like(z.real)
        rep = fubini_check(qd, F, G, fam, h, region=square, mesh_edge=0.1)
        # line integral over the line x = c is exactly c
        assert np.abs(rep.line_F - seeds.real).max() <= 1e-12
        assert rep.min_slack >= 0.0
        assert abs(rep.domain_F - 0.5) <= 1e-12
        assert abs(rep.recon_F - 0.5) <= 1e-12
        assert rep.domain_F <= rep.domain_G

    def test_sector_inequality(self):
        region, zinv = sector_region()
        qd = QuadraticDifferential.polynomial([0.0, 1.0], region)
        anchor = zinv(0.7 + 0j)
        fam, _, h = vertical_family(qd, (anchor.real, anchor.imag),
                                    spacing=1e-2, step=2e-3)
        F = lambda z: 0.5 + 0.3 * np.sin(z.real + 2 * z.imag)
        G = lambda z: F(z) + 0.15 + 0.1 * np.cos(z.real - z.imag)
        rep = fubini_check(qd, F, G, fam, h, region=region, mesh_edge=0.02)
        assert rep.min_slack >= 0.0
        assert rep.domain_F <= rep.domain_G
        # stripe reconstruction consistent with independent quadrature
        assert abs(rep.recon_F - rep.domain_F) <= 1e-3 * abs(rep.domain_F)
        assert abs(rep.recon_G - rep.domain_G) <= 1e-3 * abs(rep.domain_G)

    def test_coverage_gap_detected(self, square):
        qd = QuadraticDifferential.polynomial([1.0], square)
        fam, seeds, h = vertical_family(qd, (0.5, 0.5), spacing=0.1, step=0.02)
        sparse = fam[:3] + fam[7:]
        one = lambda z: np.ones_like(z.real)
        with pytest.raises(TraceError, match="uncovered"):
            fubini_check(qd, one, one, sparse, h, region=square, mesh_edge=0.1)
