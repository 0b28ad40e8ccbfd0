"""Schwarz symmetrisation of sampled fields on the disc and comparison checks.

A field is represented by values on cells of known area.  Its symmetric
decreasing rearrangement is the step function obtained by sorting the values
in descending order and laying the cells out as concentric annuli of the
same areas.

The default cells are polar rings graded towards the boundary circle (edges
R sin(πi/2n_r)), each sampled at the radius that splits its area in half.
Evaluated at such a radius the rearranged step profile lands in the middle
of a step, so radial decreasing inputs are reproduced exactly there.  Near
the boundary u grows linearly with the distance to it and its level lines
run parallel to the rings; thin outer rings keep the resulting sorting error
small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, OutOfRangeError
from .spectral import SpectralBasis, SpectralField, normal_derivative_trace, poisson_solve
from .shooting import SteklovParams


@dataclass(frozen=True)
class PolarCells:
    """Tensor polar cells: sample radii, angles and cell areas (n_r, n_theta)."""

    R: float
    radii: np.ndarray
    angles: np.ndarray
    areas: np.ndarray

    @classmethod
    def equal_area(cls, R: float = 1.0, n_r: int = 512, n_theta: int = 256) -> "PolarCells":
        if R <= 0 or n_r < 1 or n_theta < 1:
            raise InvalidInputError("need R > 0 and positive cell counts")
        radii = R * np.sqrt((np.arange(n_r) + 0.5) / n_r)
        angles = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        areas = np.full((n_r, n_theta), np.pi * R ** 2 / (n_r * n_theta))
        return cls(float(R), radii, angles, areas)

    @classmethod
    def graded(cls, R: float = 1.0, n_r: int = 4096, n_theta: int = 256) -> "PolarCells":
        """Rings with edges R sin(πi/2n_r), thin next to the boundary circle.

        Each ring is sampled at the radius enclosing half of its area.
        """
        if R <= 0 or n_r < 1 or n_theta < 1:
            raise InvalidInputError("need R > 0 and positive cell counts")
        edges = R * np.sin(0.5 * np.pi * np.arange(n_r + 1) / n_r)
        edges[-1] = R
        radii = np.sqrt(0.5 * (edges[:-1] ** 2 + edges[1:] ** 2))
        angles = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        ring = np.pi * np.diff(edges ** 2)
        areas = np.repeat(ring[:, None] / n_theta, n_theta, axis=1)
        return cls(float(R), radii, angles, areas)

    @classmethod
    def gauss(cls, basis: SpectralBasis) -> "PolarCells":
        """Cells whose areas are the spectral quadrature weights."""
        return cls(basis.R, basis.r_nodes.copy(), basis.theta_nodes.copy(), basis.weights.copy())

    @property
    def shape(self):
        return self.areas.shape

    def mesh(self):
        return np.meshgrid(self.radii, self.angles, indexing="ij")

    def sample(self, fn) -> "MeasuredSamples":
        rr, tt = self.mesh()
        vals = np.broadcast_to(np.asarray(fn(rr, tt), dtype=float), rr.shape)
        return MeasuredSamples(vals.ravel(), self.areas.ravel(), self.R)

    def sample_field(self, field: SpectralField, key: str = "u") -> "MeasuredSamples":
        vals = field.polar_derivatives(self.radii, self.angles, keys=[key])[key]
        return MeasuredSamples(vals.ravel(), self.areas.ravel(), self.R)


@dataclass(frozen=True)
class MeasuredSamples:
    """Values with cell measures covering the disc of radius R."""

    values: np.ndarray
    measures: np.ndarray
    R: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        m = np.asarray(self.measures, dtype=float).ravel()
        if v.shape != m.shape or v.size == 0:
            raise InvalidInputError("values and measures must be non-empty and of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(m))):
            raise InvalidInputError("samples must be finite")
        if np.any(m <= 0):
            raise InvalidInputError("cell measures must be positive")
        area = math.pi * self.R ** 2
        if abs(m.sum() - area) > 1e-8 * max(1.0, area):
            raise InvalidInputError(f"measures sum to {m.sum():.12g}, disc area is {area:.12g}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "measures", m)

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())

    @property
    def cells(self):
        return list(zip(self.values.tolist(), self.measures.tolist()))

    def distribution(self, t) -> np.ndarray:
        """μ(t) = |{u > t}|."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([self.measures[self.values > ti].sum() for ti in t])

    def lp_norm(self, q: float) -> float:
        return float(np.sum(self.measures * np.abs(self.values) ** q) ** (1.0 / q))


@dataclass(frozen=True)
class RadialDecreasingProfile:
    """Right-continuous decreasing step function of the enclosed area.

    ``breakpoints[k]`` is the area enclosed by the first k+1 steps; the value
    on [breakpoints[k-1], breakpoints[k]) is ``values[k]``.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    R: float

    def at_measure(self, a):
        a = np.asarray(a, dtype=float)
        idx = np.searchsorted(self.breakpoints, a, side="right")
        return self.values[np.minimum(idx, self.values.size - 1)]

    def at_radius(self, r):
        return self.at_measure(np.pi * np.asarray(r, dtype=float) ** 2)

    def __call__(self, x):
        """Evaluate at Cartesian points x with trailing dimension 2."""
        x = np.asarray(x, dtype=float)
        return self.at_radius(np.hypot(x[..., 0], x[..., 1]))

    def distribution(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        widths = np.diff(self.breakpoints, prepend=0.0)
        return np.array([widths[self.values > ti].sum() for ti in t])

    def lp_norm(self, q: float) -> float:
        widths = np.diff(self.breakpoints, prepend=0.0)
        return float(np.sum(widths * np.abs(self.values) ** q) ** (1.0 / q))


def schwarz_rearrange(samples: MeasuredSamples) -> RadialDecreasingProfile:
    # stable sort on the negated values keeps ties in input order
    order = np.argsort(-samples.values, kind="stable")
    return RadialDecreasingProfile(np.cumsum(samples.measures[order]),
                                   samples.values[order], samples.R)


def radial_poisson_from_profile(source: RadialDecreasingProfile, r) -> np.ndarray:
    """v(r) for -Δv = f* on the disc, v(R) = 0, with f* a step profile.

    With A = πt² and F(A) the integral of f* over the central disc of area
    A, v(t) = (1/4π) ∫_{πt²}^{πR²} F(A)/A dA.  F is piecewise linear, so
    every step contributes α log(A1/A0) + s (A1 - A0) with F = α + sA.
    """
    r = np.asarray(r, dtype=float)
    A_hi = source.breakpoints
    A_lo = np.concatenate([[0.0], A_hi[:-1]])
    s = source.values
    F_lo = np.concatenate([[0.0], np.cumsum(s * (A_hi - A_lo))[:-1]])
    alpha = F_lo - s * A_lo

    def segment(lo, hi, k):
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.where(alpha[k] == 0, 0.0, alpha[k] * np.log(hi / lo))
        return log_term + s[k] * (hi - lo)

    full = segment(A_lo, A_hi, np.arange(s.size))
    tail = np.concatenate([np.cumsum(full[::-1])[::-1], [0.0]])
    a = np.pi * r ** 2
    k = np.minimum(np.searchsorted(A_hi, a, side="right"), s.size - 1)
    a = np.minimum(a, A_hi[-1])
    partial = segment(np.maximum(a, 1e-300), A_hi[k], k)
    return (partial + tail[k + 1]) / (4 * np.pi)


@dataclass
class TalentiReport:
    radii: np.ndarray
    u_star: np.ndarray
    v: np.ndarray
    max_excess: float
    max_gap: float
    u: SpectralField


def _source_samples(f, cells: PolarCells):
    if callable(f):
        return cells.sample(f)
    if isinstance(f, MeasuredSamples):
        if f.values.size != cells.areas.size:
            raise InvalidInputError("samples do not match the cell layout")
        return f
    raise InvalidInputError("source must be callable or MeasuredSamples")


def talenti_compare(f, basis: SpectralBasis, cells: PolarCells | None = None) -> TalentiReport:
    """Compare u* with v where -Δu = f, -Δv = f*, both zero on the boundary.

    ``f`` is a callable f(r, θ) or MeasuredSamples laid out on ``cells``;
    in the latter case ``cells`` must be the Gauss cells of ``basis`` so
    that the spectral solve can use the samples directly.
    """
    cells = cells or PolarCells.graded(basis.R)
    fs = _source_samples(f, cells)
    if fs.values.min() < -1e-12:
        raise InvalidInputError(f"source has negative samples (min {fs.values.min():.3e})")
    if callable(f):
        u = poisson_solve(basis, f)
    else:
        if cells.areas.shape != basis.weights.shape or not np.allclose(cells.areas, basis.weights):
            raise InvalidInputError("sampled sources must live on the basis quadrature cells")
        u = poisson_solve(basis, fs.values.reshape(cells.shape))
    u_star = schwarz_rearrange(cells.sample_field(u))
    v = radial_poisson_from_profile(schwarz_rearrange(fs), cells.radii)
    us = u_star.at_radius(cells.radii)
    diff = us - v
    return TalentiReport(cells.radii, us, v, float(diff.max()), float(-diff.min()), u)


@dataclass(frozen=True)
class ChainRelation:
    """lhs ≤ rhs (or lhs = rhs for an equality) with slack = rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    equality: bool = False

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def holds(self, tol: float = 1e-6) -> bool:
        scale = max(1.0, abs(self.lhs), abs(self.rhs))
        if self.equality:
            return abs(self.slack) <= tol * scale
        return self.slack >= -tol * scale


@dataclass
class BoundaryChainReport:
    lp: ChainRelation
    laplacian: ChainRelation
    boundary: ChainRelation | None

    def relations(self):
        return [x for x in (self.lp, self.laplacian, self.boundary) if x is not None]

    def holds(self, tol: float = 1e-6) -> bool:
        return all(x.holds(tol) for x in self.relations())


def boundary_chain_check(ground, params: SteklovParams, cells: PolarCells | None = None,
                         include_boundary: bool = True) -> BoundaryChainReport:
    """Evaluate the norm comparisons between u and v with -Δv = (-Δu)*.

    * Lebesgue: ‖u‖_{p+1} ≤ ‖v‖_{p+1}
    * Laplacian: ‖Δu‖₂ = ‖(Δu)*‖₂ = ‖Δv‖₂
    * boundary: (1-σ)∮u_n² ≤ (1-σ)∮v_n², only meaningful for σ ≥ 1
    """
    if include_boundary and params.sigma < 1:
        raise OutOfRangeError(
            f"the boundary comparison needs sigma >= 1, got sigma={params.sigma}")
    field = getattr(ground, "field", ground)
    basis = field.basis
    cells = cells or PolarCells.graded(basis.R)
    q = params.p + 1

    minus_lap = cells.sample_field(field, "lap")
    minus_lap = MeasuredSamples(-minus_lap.values, minus_lap.measures, minus_lap.R)
    g_star = schwarz_rearrange(minus_lap)
    v = radial_poisson_from_profile(g_star, cells.radii)
    u = cells.sample_field(field, "u")

    v_norm = float(np.sum(cells.areas * np.abs(v)[:, None] ** q) ** (1 / q))
    lp = ChainRelation("lebesgue", u.lp_norm(q), v_norm)
    # -Δv = g* exactly, so ‖Δv‖₂ is the L² norm of the rearranged samples
    lap = ChainRelation("laplacian", minus_lap.lp_norm(2), g_star.lp_norm(2), equality=True)

    bnd = None
    if include_boundary:
        theta = basis.theta_nodes
        un = normal_derivative_trace(field, theta)
        lhs = (1 - params.sigma) * basis.R * float(np.sum(un ** 2)) * basis.theta_weight
        flux = float(np.sum(minus_lap.values * minus_lap.measures))
        vn = -flux / (2 * np.pi * basis.R)
        rhs = (1 - params.sigma) * 2 * np.pi * basis.R * vn ** 2
        bnd = ChainRelation("boundary", lhs, rhs)
    return BoundaryChainReport(lp, lap, bnd)
