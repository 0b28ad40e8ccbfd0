import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from platelab.errors import InvalidInputError, OutOfRangeError
from platelab.rearrange import (ChainRelation, MeasuredSamples, PolarCells,
                                RadialDecreasingProfile, boundary_chain_check,
                                radial_poisson_from_profile, schwarz_rearrange, talenti_compare)
from platelab.shooting import SteklovParams
from platelab.spectral import SpectralBasis, SpectralField, ground_state

finite = st.floats(-1e3, 1e3, allow_nan=False)


def uniform_samples(values, R=1.0):
    values = np.asarray(values, dtype=float)
    return MeasuredSamples(values, np.full(values.size, np.pi * R ** 2 / values.size), R)


class TestMeasuredSamples:
    def test_rejects_nonpositive_measure(self):
        with pytest.raises(InvalidInputError):
            MeasuredSamples([1.0, 2.0], [np.pi, 0.0], 1.0)

    def test_rejects_wrong_total(self):
        with pytest.raises(InvalidInputError):
            MeasuredSamples([1.0, 2.0], [1.0, 1.0], 1.0)

    def test_rejects_mismatch(self):
        with pytest.raises(InvalidInputError):
            MeasuredSamples([1.0], [np.pi / 2, np.pi / 2], 1.0)

    def test_rejects_nan(self):
        with pytest.raises(InvalidInputError):
            uniform_samples([1.0, np.nan])

    def test_cells_cover_disc(self):
        for cells in (PolarCells.equal_area(2.0, 16, 8), PolarCells.graded(2.0, 64, 8)):
            s = cells.sample(lambda r, t: r)
            assert s.total_measure == pytest.approx(4 * np.pi, rel=1e-12)
            assert len(s.cells) == cells.areas.size


class TestSchwarzRearrange:
    def test_constant(self):
        prof = schwarz_rearrange(PolarCells.graded(1.0, 64, 16).sample(lambda r, t: 3.5 + 0 * r))
        assert np.all(prof.values == 3.5)
        assert prof.at_radius(0.7) == 3.5

    @pytest.mark.parametrize("make", [lambda: PolarCells.graded(1.0, 256, 32),
                                      lambda: PolarCells.equal_area(1.0, 128, 32)])
    def test_radial_decreasing_input_reproduced(self, make):
        cells = make()
        prof = schwarz_rearrange(cells.sample(lambda r, t: 1 - r ** 2 + 0 * t))
        np.testing.assert_allclose(prof.at_radius(cells.radii), 1 - cells.radii ** 2, atol=1e-12)

    def test_idempotent_on_radial_decreasing_input(self):
        cells = PolarCells.graded(1.0, 128, 16)
        samples = cells.sample(lambda r, t: np.exp(-3 * r ** 2) + 0 * t)
        first = schwarz_rearrange(samples)
        again = schwarz_rearrange(cells.sample(lambda r, t: first.at_radius(r) + 0 * t))
        np.testing.assert_array_equal(again.values, first.values)
        np.testing.assert_allclose(again.breakpoints, first.breakpoints, rtol=1e-14)

    def test_right_continuous(self):
        prof = RadialDecreasingProfile(np.array([1.0, 2.0, np.pi]), np.array([3.0, 2.0, 1.0]), 1.0)
        assert prof.at_measure(0.5) == 3.0
        assert prof.at_measure(1.0) == 2.0
        assert prof.at_measure(np.pi) == 1.0
        assert prof(np.array([[0.0, 0.0], [0.0, 1.0]])).tolist() == [3.0, 1.0]

    def test_ties_keep_input_order(self):
        s = MeasuredSamples([1.0, 2.0, 1.0], [1.0, 1.0, np.pi - 2.0], 1.0)
        prof = schwarz_rearrange(s)
        np.testing.assert_allclose(prof.breakpoints, [1.0, 2.0, np.pi])

    @given(arrays(float, st.integers(1, 200), elements=finite), st.sampled_from([1.5, 2.0, 4.0]))
    def test_lp_norm_preserved(self, values, q):
        s = uniform_samples(values)
        assert schwarz_rearrange(s).lp_norm(q) == pytest.approx(s.lp_norm(q), rel=1e-12, abs=1e-300)

    def test_field_norm_preserved(self):
        cells = PolarCells.graded(1.0, 512, 64)
        s = cells.sample(lambda r, t: (1 - r ** 2) * (1 + 0.5 * np.cos(t) * r))
        assert schwarz_rearrange(s).lp_norm(4) == pytest.approx(s.lp_norm(4), rel=1e-12)

    def test_equimeasurable_on_ladder(self):
        cells = PolarCells.graded(1.0, 256, 64)
        s = cells.sample(lambda r, t: np.sin(2 * t) * r ** 2 + (1 - r) * np.cos(t))
        prof = schwarz_rearrange(s)
        ladder = np.linspace(s.values.min(), s.values.max(), 64)
        # exact distribution of the step profile vs the samples
        assert np.max(np.abs(prof.distribution(ladder) - s.distribution(ladder))) <= cells.areas.max()
        # and the profile sampled back on the cells
        back = cells.sample(lambda r, t: prof.at_radius(r) + 0 * t)
        assert np.max(np.abs(back.distribution(ladder) - s.distribution(ladder))) <= \
            cells.areas.max() * cells.shape[1]

    @given(arrays(float, 50, elements=finite), arrays(float, 50, elements=st.floats(0, 100)))
    def test_monotone(self, u, bump):
        w = u + bump
        us = schwarz_rearrange(uniform_samples(u))
        ws = schwarz_rearrange(uniform_samples(w))
        a = np.linspace(0, np.pi, 201)
        assert np.all(us.at_measure(a) <= ws.at_measure(a))

    @given(arrays(float, 40, elements=finite))
    def test_profile_non_increasing(self, u):
        assert np.all(np.diff(schwarz_rearrange(uniform_samples(u)).values) <= 0)


class TestRadialPoisson:
    def test_constant_source(self):
        prof = RadialDecreasingProfile(np.array([np.pi]), np.array([1.0]), 1.0)
        r = np.linspace(0, 1, 11)
        np.testing.assert_allclose(radial_poisson_from_profile(prof, r), (1 - r ** 2) / 4, atol=1e-15)

    def test_step_source(self):
        # f = 1 on r < 1/2, 0 outside
        prof = RadialDecreasingProfile(np.array([np.pi / 4, np.pi]), np.array([1.0, 0.0]), 1.0)
        r = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        ref = np.where(r < 0.5, np.log(2) / 8 + (0.25 - r ** 2) / 4,
                       -np.log(np.maximum(r, 1e-300)) / 8)
        np.testing.assert_allclose(radial_poisson_from_profile(prof, r), ref, atol=1e-15)


class TestTalenti:
    def test_constant_source_equality(self, basis):
        rep = talenti_compare(lambda r, t: np.ones_like(r), basis)
        assert abs(rep.max_excess) <= 1e-6
        assert abs(rep.max_gap) <= 1e-6

    def test_bump_source(self, basis):
        def f(r, t):
            x, y = r * np.cos(t), r * np.sin(t)
            return 1 + 5 * np.exp(-30 * ((x - 0.4) ** 2 + y ** 2))

        rep = talenti_compare(f, basis)
        assert rep.max_excess <= 1e-6
        assert rep.max_gap > 1e-3

    def test_negative_source_rejected(self, small_basis):
        with pytest.raises(InvalidInputError):
            talenti_compare(lambda r, t: r - 0.5, small_basis, PolarCells.graded(1.0, 64, 16))

    def test_sampled_source_on_gauss_cells(self, small_basis):
        cells = PolarCells.gauss(small_basis)
        samples = cells.sample(lambda r, t: 1 + 0 * r)
        rep = talenti_compare(samples, small_basis, cells)
        assert rep.max_excess <= 1e-6

    def test_sampled_source_needs_gauss_cells(self, small_basis):
        cells = PolarCells.graded(1.0, 64, 16)
        with pytest.raises(InvalidInputError):
            talenti_compare(cells.sample(lambda r, t: 1 + 0 * r), small_basis, cells)


class TestBoundaryChain:
    def test_refused_below_one(self, small_basis):
        f = SpectralField(small_basis, np.ones(small_basis.shape))
        with pytest.raises(OutOfRangeError):
            boundary_chain_check(f, SteklovParams(3.0, 0.5))

    def test_without_boundary_below_one(self, small_basis):
        c = np.zeros(small_basis.shape)
        c[0, 1] = 1.0
        rep = boundary_chain_check(SpectralField(small_basis, c), SteklovParams(3.0, 0.5),
                                   PolarCells.graded(1.0, 1024, 16), include_boundary=False)
        assert rep.boundary is None
        assert [x.name for x in rep.relations()] == ["lebesgue", "laplacian"]

    def test_radial_field_equalities(self):
        b = SpectralBasis(M=2, K=8)
        c = np.zeros(b.shape)
        c[0, 1] = 1.0  # J_0(j r) is an eigenfunction, so -Δu is radial decreasing
        rep = boundary_chain_check(SpectralField(b, c), SteklovParams(3.0, 2.0))
        for rel in rep.relations():
            assert abs(rel.slack) <= 1e-6 * max(1.0, abs(rel.rhs)), rel

    def test_navier_boundary_is_zero(self, basis):
        gs = ground_state(SteklovParams(3.0, 1.0), basis)
        rep = boundary_chain_check(gs, SteklovParams(3.0, 1.0))
        assert rep.boundary.lhs == 0.0 and rep.boundary.rhs == 0.0

    def test_ground_state_chain(self, basis):
        params = SteklovParams(3.0, 2.0)
        rep = boundary_chain_check(ground_state(params, basis), params)
        assert rep.holds()
        assert abs(rep.laplacian.slack) <= 1e-6 * rep.laplacian.rhs

    def test_relation_tolerance(self):
        assert ChainRelation("x", 1.0, 1.0 - 1e-7).holds()
        assert not ChainRelation("x", 1.0, 1.0 - 1e-5).holds()
        assert not ChainRelation("x", 1.0, 1.0 + 1e-5, equality=True).holds()
