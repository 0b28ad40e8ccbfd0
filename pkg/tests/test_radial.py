import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from platelab.errors import InvalidInputError
from platelab.radial import (RadialGrid, RadialProfile, check_monotonicity,
                             green_log_reconstruct, laplacian_to_gradient, radial_laplacian)


def grid(n=513, R=1.0):
    return RadialGrid.uniform(R, n)


class TestRadialGrid:
    def test_rejects_short_grid(self):
        with pytest.raises(InvalidInputError):
            RadialGrid.uniform(1.0, 7)

    def test_rejects_nonzero_start(self):
        with pytest.raises(InvalidInputError):
            RadialGrid(np.linspace(0.1, 1.0, 10), 1.0)

    def test_rejects_wrong_end(self):
        with pytest.raises(InvalidInputError):
            RadialGrid(np.linspace(0.0, 0.9, 10), 1.0)

    def test_rejects_non_increasing(self):
        nodes = np.linspace(0.0, 1.0, 10)
        nodes[4] = nodes[3]
        with pytest.raises(InvalidInputError):
            RadialGrid(nodes, 1.0)

    def test_nodes_are_read_only(self):
        g = grid(9)
        with pytest.raises(ValueError):
            g.nodes[1] = 0.5


class TestLaplacianToGradient:
    def test_constant_laplacian(self):
        g = grid()
        du = laplacian_to_gradient(np.full(len(g), 4.0), g)
        assert du[g.nodes == 0.5][0] == pytest.approx(1.0, abs=1e-12)
        assert du[0] == 0.0

    def test_quadratic_laplacian(self):
        g = grid()
        du = laplacian_to_gradient(g.nodes ** 2, g)
        assert du[-1] == pytest.approx(0.25, abs=1e-6)

    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_cubic_polynomials_match_antiderivative(self, c):
        g = grid(512)
        r = g.nodes
        lap = c[0] + c[1] * r + c[2] * r ** 2 + c[3] * r ** 3
        du = laplacian_to_gradient(lap, g)
        # (1/t) ∫ s Σ c_k s^k ds = Σ c_k t^{k+1}/(k+2)
        exact = sum(ck * r ** (k + 1) / (k + 2) for k, ck in enumerate(c))
        assert np.max(np.abs(du - exact)) <= 1e-10

    def test_three_dimensional_weight(self):
        g = grid()
        du = laplacian_to_gradient(np.full(len(g), 6.0), g, N=3)
        np.testing.assert_allclose(du, 2 * g.nodes, atol=1e-12)

    def test_rejects_wrong_length(self):
        g = grid(32)
        with pytest.raises(InvalidInputError):
            laplacian_to_gradient(np.ones(31), g)

    def test_matches_shooting_gradient(self):
        from platelab.shooting import SteklovParams, solve_radial
        res = solve_radial(SteklovParams(3.0, 1.0))
        pr = res.profile
        du = laplacian_to_gradient(pr.lap, pr.grid)
        assert np.max(np.abs(du - pr.du)) <= 1e-8 * max(1.0, np.max(np.abs(pr.du)))


class TestGreenLogReconstruct:
    def test_constant(self):
        g = grid()
        u = green_log_reconstruct(np.full(len(g), 4.0), g)
        assert u[-1] == pytest.approx(1.0, abs=1e-12)
        assert u[0] == 0.0

    def test_quadratic(self):
        g = grid()
        u = green_log_reconstruct(g.nodes ** 2, g)
        assert u[-1] == pytest.approx(1 / 16, abs=1e-10)

    def test_round_trip(self):
        g = grid(2048)
        r = g.nodes
        u = r ** 2 - r ** 4
        back = green_log_reconstruct(radial_laplacian(u, g), g)
        assert np.max(np.abs(back - u)) <= 1e-6

    def test_fubini_nested_quadrature(self):
        g = grid(257)

        def lap(s):
            return np.cos(3 * s) + s ** 2 * np.exp(-s)

        u = green_log_reconstruct(lap(g.nodes), g)
        for i in (64, 154, 256):
            t = g.nodes[i]
            inner = lambda tau: quad(lambda s: s * lap(s), 0, tau, epsabs=1e-14)[0] / tau  # noqa: E731
            ref = quad(inner, 0, t, epsabs=1e-13, epsrel=1e-13)[0]
            got = u[i]
            assert got == pytest.approx(ref, abs=1e-8)

    def test_laplacian_of_reconstruction_converges_at_second_order(self):
        errors = []
        for n in (65, 129, 257):
            g = grid(n)
            # smooth radial functions on the disc have even profiles
            lap = np.exp(g.nodes ** 2)
            back = radial_laplacian(green_log_reconstruct(lap, g), g)
            errors.append(np.max(np.abs(back - lap)))
        slopes = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all(slopes >= 1.9), slopes


class TestRadialLaplacian:
    def test_r_squared(self):
        g = grid(65)
        np.testing.assert_allclose(radial_laplacian(g.nodes ** 2, g), 4.0, atol=1e-9)

    def test_r_fourth(self):
        g = grid(513)
        lap = radial_laplacian(g.nodes ** 4, g)
        h = g.nodes[1]
        value = lap[g.nodes == 0.5][0]
        assert value == pytest.approx(4.0, abs=3e-5)
        # truncation error of the central stencils on r⁴: h²u''''/12 + h²u'''/(6r) = 6h²
        assert (value - 4.0) / h ** 2 == pytest.approx(6.0, rel=1e-6)

    def test_origin_uses_symmetric_limit(self):
        g = grid(129)
        lap = radial_laplacian(1 - g.nodes ** 2, g)
        assert lap[0] == pytest.approx(-4.0, abs=1e-10)

    def test_matches_shooting_laplacian(self):
        from platelab.shooting import SteklovParams, solve_radial
        pr = solve_radial(SteklovParams(3.0, 1.0)).profile
        lap = radial_laplacian(pr.u, pr.grid)
        assert np.max(np.abs(lap - pr.lap)) <= 1e-6 * max(1.0, np.max(np.abs(pr.lap)))


class TestMonotonicity:
    def _profile(self, u, du, lap, dlap, n=257):
        return RadialProfile(grid(n), u, du, lap, dlap)

    def test_downward_parabola(self):
        r = grid(257).nodes
        rep = check_monotonicity(self._profile(1 - r ** 2, -2 * r, np.full_like(r, -4.0),
                                               np.zeros_like(r)))
        assert rep.u_strictly_decreasing
        assert not rep.lap_strictly_increasing

    def test_upward_parabola(self):
        r = grid(257).nodes
        rep = check_monotonicity(self._profile(r ** 2, 2 * r, np.full_like(r, 4.0),
                                               np.zeros_like(r)))
        assert not rep.u_strictly_decreasing
        assert rep.worst_du > 0

    def test_reports_worst_location(self):
        r = grid(257).nodes
        du = -r.copy()
        du[100] = 1e-3
        rep = check_monotonicity(self._profile(1 - r ** 2 / 2, du, np.full_like(r, -2.0), r))
        assert not rep.u_strictly_decreasing
        assert rep.worst_du_at == pytest.approx(r[100])
        assert rep.lap_strictly_increasing

    def test_profile_length_mismatch(self):
        r = grid(33).nodes
        with pytest.raises(InvalidInputError):
            RadialProfile(grid(33), r, r, r, r[:-1])

    def test_converged_solution(self):
        from platelab.shooting import SteklovParams, solve_radial
        rep = check_monotonicity(solve_radial(SteklovParams(3.0, 1.0)).profile)
        assert rep.u_strictly_decreasing and rep.lap_strictly_increasing
