import csv

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from platelab.errors import InvalidInputError, OutOfPositivityWindowError, OutOfRangeError
from platelab.limacon import (A_BAR, LimaconDomain, boundary_curve, boundary_point, curvature,
                              dist_to_boundary, green_bound, is_convex, limacon_ground_state,
                              pullback_energy, pullback_forms, pullback_quadratic,
                              steklov_threshold, transported_values, write_boundary_csv)
from platelab.shooting import SteklovParams
from platelab.spectral import (SpectralBasis, SpectralField, assemble_hsigma_form, energy,
                               ground_state)

shape_param = st.floats(0.0, 0.45)


def curve_curvature(a, theta):
    """Curvature of θ ↦ h(e^{iθ}) from complex derivatives, independent of the polar formula."""
    z = np.exp(1j * theta)
    dz = 1j * z * (1 + 2 * a * z)
    d2z = -z * (1 + 2 * a * z) - 2 * a * z * z
    return np.imag(np.conj(dz) * d2z) / np.abs(dz) ** 3


@pytest.fixture(scope="module")
def mid_basis():
    return SpectralBasis(M=6, K=16)


def random_field(basis, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(basis.shape) / (1 + np.arange(basis.n_rad)) ** 3
    return SpectralField(basis, c / (1 + basis.ang_m[:, None]) ** 2)


class TestDomain:
    @pytest.mark.parametrize("a", [-0.1, 0.5, 0.7, np.nan])
    def test_invalid(self, a):
        with pytest.raises(InvalidInputError):
            LimaconDomain(a)

    def test_unit_circle(self):
        phi = np.linspace(0, 2 * np.pi, 13)
        x, y = boundary_point(LimaconDomain(0.0), phi)
        np.testing.assert_allclose(x, np.cos(phi), atol=1e-15)
        np.testing.assert_allclose(y, np.sin(phi), atol=1e-15)

    @given(shape_param)
    def test_rightmost_point(self, a):
        x, y = boundary_point(LimaconDomain(a), 0.0)
        assert (x, y) == (pytest.approx(1 + 2 * a), 0.0)

    @given(shape_param)
    def test_conformal_and_polar_boundaries_agree(self, a):
        dom = LimaconDomain(a)
        theta = 2 * np.pi * np.arange(1024) / 1024
        w = dom.h(np.exp(1j * theta))
        x, y = boundary_point(dom, theta)
        assert np.max(np.abs(w - (x + 1j * y))) <= 1e-12

    @given(shape_param, st.floats(0, 0.99), st.floats(0, 2 * np.pi))
    def test_inverse(self, a, r, t):
        dom = LimaconDomain(a)
        z = r * np.exp(1j * t)
        back = dom.inverse(dom.h(z))
        assert abs(back - z) <= 1e-10

    def test_containment(self):
        dom = LimaconDomain(0.3)
        assert dom.contains(0.0, 0.0)
        assert dom.contains(1.5, 0.0)
        assert not dom.contains(-0.5, 0.0)


class TestCurvature:
    def test_disc(self):
        np.testing.assert_allclose(curvature(LimaconDomain(0.0), np.linspace(0, 6, 7)), 1.0)

    def test_threshold_touches_zero(self):
        assert abs(curvature(LimaconDomain(0.25), np.pi)) <= 1e-12

    def test_nonconvex_inner_point(self):
        assert curvature(LimaconDomain(0.3), np.pi) < 0

    @given(shape_param)
    def test_matches_parametric_formula(self, a):
        theta = np.linspace(0, 2 * np.pi, 257)
        np.testing.assert_allclose(curvature(LimaconDomain(a), theta), curve_curvature(a, theta),
                                   atol=1e-11)

    @pytest.mark.parametrize("a", [0.0, 0.1, 0.2, 0.25, 0.3, 0.4])
    def test_convexity_law(self, a):
        rep = is_convex(LimaconDomain(a))
        assert rep.convex == (a <= 0.25)
        assert LimaconDomain(a).convex == rep.convex

    def test_threshold_min_curvature(self):
        assert abs(is_convex(LimaconDomain(0.25)).min_curvature) <= 1e-8

    def test_total_curvature(self):
        # ∮κ ds = 2π for a simple closed curve
        dom = LimaconDomain(0.4)
        theta = 2 * np.pi * np.arange(4096) / 4096
        ds = np.abs(dom.dh(np.exp(1j * theta)))
        assert np.sum(curvature(dom, theta) * ds) * 2 * np.pi / 4096 == pytest.approx(2 * np.pi)


class TestBoundaryExport:
    def test_curve_columns(self):
        phi, x, y, k = boundary_curve(LimaconDomain(0.3), 64)
        assert phi.shape == x.shape == y.shape == k.shape == (64,)

    def test_csv(self, tmp_path):
        path = tmp_path / "curve.csv"
        write_boundary_csv(LimaconDomain(0.2), path, 32)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["phi", "x", "y", "kappa"]
        assert len(rows) == 33
        assert float(rows[1][1]) == 1.4


class TestDistance:
    @pytest.mark.parametrize("a,point,expected", [(0.0, (0.0, 0.0), 1.0), (0.0, (0.5, 0.0), 0.5),
                                                  (0.3, (0.0, 0.0), 0.4)])
    def test_examples(self, a, point, expected):
        assert dist_to_boundary(LimaconDomain(a), point) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("point", [(2.0, 0.0), (1.5, 0.0), (-0.5, 0.0), (-0.6, 0.0)])
    def test_exterior_and_boundary_rejected(self, point):
        with pytest.raises(InvalidInputError):
            dist_to_boundary(LimaconDomain(0.25), point)

    @given(shape_param, st.floats(0, 0.95), st.floats(0, 2 * np.pi))
    def test_against_brute_force(self, a, s, t):
        dom = LimaconDomain(a)
        point = (s * dom.rho(t) * np.cos(t), s * dom.rho(t) * np.sin(t))
        assume(dom.contains(*point))
        phi = np.linspace(0, 2 * np.pi, 400_001)
        bx, by = boundary_point(dom, phi)
        brute = np.min(np.hypot(bx - point[0], by - point[1]))
        got = dist_to_boundary(dom, point)
        assert got <= brute + 1e-12
        assert got >= brute - 1e-9


class TestGreenBound:
    def test_coincident(self):
        dom = LimaconDomain(0.2)
        d = dist_to_boundary(dom, (0.1, 0.2))
        assert green_bound(dom, (0.1, 0.2), (0.1, 0.2)) == pytest.approx(d ** 2, rel=1e-14)

    def test_disc_pair(self):
        assert green_bound(LimaconDomain(0.0), (0.5, 0.0), (-0.5, 0.0)) == pytest.approx(0.0625)

    def test_far_branch(self):
        dom = LimaconDomain(0.0)
        x, y = (0.9, 0.0), (-0.9, 0.0)
        assert green_bound(dom, x, y) == pytest.approx(0.1 ** 4 / 1.8 ** 2)

    @given(shape_param, st.floats(0, 0.9), st.floats(0, 6.28), st.floats(0, 0.9),
           st.floats(0, 6.28))
    def test_symmetric_positive(self, a, s1, t1, s2, t2):
        dom = LimaconDomain(a)
        x = (s1 * dom.rho(t1) * np.cos(t1), s1 * dom.rho(t1) * np.sin(t1))
        y = (s2 * dom.rho(t2) * np.cos(t2), s2 * dom.rho(t2) * np.sin(t2))
        assume(dom.contains(*x) and dom.contains(*y))
        g = green_bound(dom, x, y)
        assert g > 0
        assert g == green_bound(dom, y, x)

    def test_exterior_rejected(self):
        with pytest.raises(InvalidInputError):
            green_bound(LimaconDomain(0.0), (0.0, 0.0), (1.5, 0.0))


class TestPullback:
    def test_identity_at_zero(self, mid_basis):
        dom = LimaconDomain(0.0)
        f = random_field(mid_basis, 1)
        for sigma in (-0.5, 1.0, 3.0):
            params = SteklovParams(3.0, sigma)
            assert pullback_energy(f, dom, params) == pytest.approx(energy(f, params), rel=1e-10)
            dense = pullback_forms(dom, mid_basis).hsigma(sigma).dense()
            disc = assemble_hsigma_form(mid_basis, sigma).dense()
            assert np.max(np.abs(dense - disc)) <= 1e-10 * np.max(np.abs(disc))

    def test_form_matches_direct_quadrature(self, mid_basis):
        dom = LimaconDomain(0.1)
        f = random_field(mid_basis, 2)
        fine = SpectralBasis(M=6, K=16, n_r=256, n_theta=512)
        assembled = pullback_forms(dom, mid_basis).hsigma(0.3).value(f.coeffs)
        direct = pullback_quadratic(SpectralField(fine, f.coeffs), dom, 0.3)
        assert assembled == pytest.approx(direct, rel=1e-7)

    def test_conformal_laplacian(self, mid_basis):
        # Δ_w u = |h'|⁻² Δ_z ũ, checked with a five-point stencil in the w plane
        dom = LimaconDomain(0.3)
        f = random_field(mid_basis, 3)
        z0 = 0.4 * np.exp(0.7j)
        w0 = dom.h(z0)
        h = 1e-3
        pts = w0 + h * np.array([0, 1, -1, 1j, -1j])
        u = transported_values(f, dom, pts.real, pts.imag)
        fd = (u[1:].sum() - 4 * u[0]) / h ** 2
        lap_z = f.polar_derivatives([abs(z0)], [np.angle(z0)], keys=["lap"])["lap"][0, 0]
        assert fd == pytest.approx(lap_z / abs(dom.dh(z0)) ** 2, rel=1e-5)

    @pytest.mark.parametrize("a", [0.1, 0.3, 0.45])
    def test_vanishes_on_boundary(self, mid_basis, a):
        dom = LimaconDomain(a)
        x, y = boundary_point(dom, np.linspace(0, 2 * np.pi, 50))
        assert np.max(np.abs(transported_values(random_field(mid_basis, 4), dom, x, y))) <= 1e-12

    def test_rejects_scaled_basis(self):
        with pytest.raises(InvalidInputError):
            pullback_forms(LimaconDomain(0.1), SpectralBasis(R=2.0, M=2, K=4))


class TestThreshold:
    def test_disc(self):
        assert steklov_threshold(LimaconDomain(0.0)).nu_star == pytest.approx(-1.0, abs=1e-8)

    def test_nonconvex_below_one(self):
        res = steklov_threshold(LimaconDomain(0.3))
        assert res.nu_star < 1
        assert res.delta > 0 and res.condition > 1

    @pytest.mark.parametrize("a", [0.0, 0.1, 0.2, 0.25, 0.3, 0.32])
    def test_continuity(self, a):
        lo = steklov_threshold(LimaconDomain(a)).nu_star
        hi = steklov_threshold(LimaconDomain(a + 1e-3)).nu_star
        assert abs(hi - lo) <= 1e-2

    def test_resolved_near_steep_end(self):
        # slope of ν* passes 10 near a = 0.33; the value itself is resolution independent
        dom = LimaconDomain(0.35)
        coarse = steklov_threshold(dom).nu_star
        fine = steklov_threshold(dom, SpectralBasis(M=14, K=32)).nu_star
        assert abs(coarse - fine) <= 1e-3
        assert abs(steklov_threshold(LimaconDomain(0.3501)).nu_star - coarse) <= 1e-2

    def test_pullback_form_positive_above_threshold(self, mid_basis):
        dom = LimaconDomain(0.3)
        nu = steklov_threshold(dom, mid_basis).nu_star
        assert pullback_forms(dom, mid_basis).hsigma(nu + 0.05).min_eigenvalue() > 0
        assert pullback_forms(dom, mid_basis).hsigma(1.0).min_eigenvalue() > 0


class TestLimaconGroundState:
    def test_matches_disc_at_zero(self, mid_basis):
        params = SteklovParams(3.0, 1.0)
        disc = ground_state(params, mid_basis)
        lim = limacon_ground_state(LimaconDomain(0.0), params, mid_basis)
        assert lim.energy == pytest.approx(disc.energy, rel=1e-8)

    def test_nonconvex_positive(self, mid_basis):
        gs = limacon_ground_state(LimaconDomain(0.3), SteklovParams(3.0, 1.0), mid_basis)
        assert gs.converged
        assert gs.min_value >= -1e-6 * gs.max_abs
        assert np.all(np.diff(gs.history) <= 0)

    def test_beyond_admissible_shape(self, mid_basis):
        assert A_BAR == 0.4
        with pytest.raises(OutOfRangeError):
            limacon_ground_state(LimaconDomain(0.45), SteklovParams(3.0, 1.0), mid_basis)

    def test_below_threshold(self, mid_basis):
        with pytest.raises(OutOfPositivityWindowError):
            limacon_ground_state(LimaconDomain(0.3), SteklovParams(3.0, -0.95), mid_basis)

    def test_radius_must_be_one(self, mid_basis):
        with pytest.raises(InvalidInputError):
            limacon_ground_state(LimaconDomain(0.3), SteklovParams(3.0, 1.0, 2.0), mid_basis)
