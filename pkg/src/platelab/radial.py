"""Radial calculus on [0, R] for radially symmetric functions.

Everything here works on sampled data: a strictly increasing grid of radii
starting at the origin, and arrays of values at those radii.  The integral
identities use a degree-5 interpolating spline so that the cumulative
integrals are exact for polynomial integrands up to degree 5.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import InvalidInputError

_SPLINE_DEGREE = 5
# truncation point for the exponential change of variables in the log kernel
_LOG_KERNEL_XMAX = 40.0
_LOG_KERNEL_ORDER = 200


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radii with ``nodes[0] == 0`` and ``nodes[-1] == R``."""

    nodes: np.ndarray
    R: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 8:
            raise InvalidInputError("a radial grid needs at least 8 nodes")
        if not np.all(np.isfinite(nodes)):
            raise InvalidInputError("grid nodes must be finite")
        if self.R <= 0:
            raise InvalidInputError(f"outer radius must be positive, got {self.R}")
        if nodes[0] != 0.0:
            raise InvalidInputError("first grid node must be 0")
        if not np.isclose(nodes[-1], self.R, rtol=1e-14, atol=0.0):
            raise InvalidInputError("last grid node must equal R")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidInputError("grid nodes must be strictly increasing")
        nodes = nodes.copy()
        nodes[-1] = float(self.R)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "R", float(self.R))

    @classmethod
    def uniform(cls, R: float, n: int) -> "RadialGrid":
        return cls(np.linspace(0.0, R, n), R)

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True)
class RadialProfile:
    """Samples of u, u', Δu and (Δu)' on a radial grid."""

    grid: RadialGrid
    u: np.ndarray
    du: np.ndarray
    lap: np.ndarray
    dlap: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        for name in ("u", "du", "lap", "dlap"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise InvalidInputError(
                    f"profile array {name!r} has shape {arr.shape}, expected ({n},)")
            object.__setattr__(self, name, arr)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def consistency_error(self, N: int = 2) -> float:
        """Max deviation of ``du`` from the integral reconstruction out of ``lap``."""
        return float(np.max(np.abs(self.du - laplacian_to_gradient(self.lap, self.grid, N))))

    def is_consistent(self, tol: float = 1e-8, N: int = 2) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.du))))
        return self.consistency_error(N) <= tol * scale


def _check_samples(samples, grid, name="samples"):
    if not isinstance(grid, RadialGrid):
        raise InvalidInputError("grid must be a RadialGrid")
    arr = np.asarray(samples, dtype=float)
    if arr.shape != grid.nodes.shape:
        raise InvalidInputError(f"{name} has shape {arr.shape}, grid has {grid.nodes.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


def _cumulative_integral(values, nodes):
    spline = make_interp_spline(nodes, values, k=_SPLINE_DEGREE)
    anti = spline.antiderivative()
    return anti(nodes) - anti(nodes[0])


def laplacian_to_gradient(lap_samples, grid: RadialGrid, N: int = 2) -> np.ndarray:
    """Recover u' from Δu through t^(N-1) u'(t) = ∫_0^t s^(N-1) Δu(s) ds."""
    if N < 2:
        raise InvalidInputError(f"dimension N must be >= 2, got {N}")
    lap = _check_samples(lap_samples, grid, "lap_samples")
    t = grid.nodes
    weight = t ** (N - 1)
    cumulative = _cumulative_integral(weight * lap, t)
    du = np.zeros_like(t)
    du[1:] = cumulative[1:] / weight[1:]
    return du


def _log_kernel_rule():
    x, w = np.polynomial.legendre.leggauss(_LOG_KERNEL_ORDER)
    x = 0.5 * _LOG_KERNEL_XMAX * (x + 1.0)
    w = 0.5 * _LOG_KERNEL_XMAX * w
    return x, w * x * np.exp(-2.0 * x)


def green_log_reconstruct(lap_samples, grid: RadialGrid) -> np.ndarray:
    """Planar radial function with u(0) = 0 from its Laplacian.

    Evaluates u(t) = ∫_0^t s log(t/s) Δu(s) ds.  With s = t e^{-x} the
    integral becomes t² ∫_0^∞ x e^{-2x} Δu(t e^{-x}) dx, which has a smooth
    integrand and is handled by Gauss-Legendre on a truncated interval.
    """
    lap = _check_samples(lap_samples, grid, "lap_samples")
    spline = make_interp_spline(grid.nodes, lap, k=_SPLINE_DEGREE)
    x, w = _log_kernel_rule()
    t = grid.nodes
    s = t[:, None] * np.exp(-x)[None, :]
    return t ** 2 * (spline(s) @ w)


def _fd_weights(x0, xs, order):
    """Finite-difference weights for derivative ``order`` at x0 on stencil xs."""
    n = len(xs)
    dx = np.asarray(xs, dtype=float) - x0
    V = np.vander(dx, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


def radial_laplacian(u_samples, grid: RadialGrid, N: int = 2) -> np.ndarray:
    """Second-order finite-difference radial Laplacian u'' + (N-1) u'/r.

    The origin uses the symmetric limit Δu(0) = N u''(0) with an even
    extension of u; the outer node uses one-sided stencils.
    """
    if len(grid) < 3:
        raise InvalidInputError("radial_laplacian needs at least 3 nodes")
    u = _check_samples(u_samples, grid, "u_samples")
    r = grid.nodes
    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    um, u0, up = u[:-2], u[1:-1], u[2:]
    d2 = 2.0 * (um / (h1 * (h1 + h2)) - u0 / (h1 * h2) + up / (h2 * (h1 + h2)))
    d1 = (-h2 / (h1 * (h1 + h2)) * um + (h2 - h1) / (h1 * h2) * u0
          + h1 / (h2 * (h1 + h2)) * up)

    lap = np.empty_like(u)
    lap[1:-1] = d2 + (N - 1) * d1 / r[1:-1]
    lap[0] = N * 2.0 * (u[1] - u[0]) / r[1] ** 2

    tail = slice(len(r) - 4, len(r))
    w2 = _fd_weights(r[-1], r[tail], 2)
    w1 = _fd_weights(r[-1], r[-3:], 1)
    lap[-1] = w2 @ u[tail] + (N - 1) * (w1 @ u[-3:]) / r[-1]
    return lap


@dataclass(frozen=True)
class MonotonicityReport:
    u_strictly_decreasing: bool
    lap_strictly_increasing: bool
    worst_du: float
    worst_du_at: float
    worst_dlap: float
    worst_dlap_at: float
    tol: float = field(default=1e-10)


def _strict_sign(values, tol):
    # all entries above -tol, and not identically zero up to tol
    return bool(np.all(values > -tol) and np.any(values > tol))


def check_monotonicity(profile: RadialProfile, tol: float = 1e-10) -> MonotonicityReport:
    """Check u' < 0 on (0, R) and (Δu)' > 0 on (0, R] at the grid nodes.

    A node violates a strict condition when the signed quantity is below
    ``-tol``.  An identically vanishing quantity is never strict.
    """
    r = profile.r
    neg_du = -profile.du[1:-1]
    dlap = profile.dlap[1:]
    i_du = int(np.argmin(neg_du))
    i_dl = int(np.argmin(dlap))
    return MonotonicityReport(
        u_strictly_decreasing=_strict_sign(neg_du, tol),
        lap_strictly_increasing=_strict_sign(dlap, tol),
        worst_du=float(profile.du[1:-1][i_du]),
        worst_du_at=float(r[1:-1][i_du]),
        worst_dlap=float(dlap[i_dl]),
        worst_dlap_at=float(r[1:][i_dl]),
        tol=tol,
    )
