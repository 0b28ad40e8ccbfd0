"""Limaçon domains Ω_a = {ρ < 1 + 2a cos φ} and problems pulled back to the disc.

Ω_a is the image of the unit disc under h(z) = a + z + a z², whose
derivative 1 + 2az does not vanish on the closed disc for a < 1/2.  Since
h(e^{iθ}) = e^{iθ}(1 + 2a cos θ), the boundary angle on the disc equals the
polar angle of the image point.  A function ũ on the disc defines u = ũ∘h⁻¹
on Ω_a with

    ∫_Ω (Δu)²       = ∫_D |h'|⁻² (Δũ)²
    ∫_Ω |u|^{p+1}   = ∫_D |h'|² |ũ|^{p+1}
    ∮_∂Ω κ u_n² ds  = ∫ κ(θ) |h'(e^{iθ})|⁻¹ (∂_r ũ)² dθ,

so the disc basis can be reused, with forms that couple angular modes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar

from .errors import InvalidInputError, NumericalError, OutOfPositivityWindowError, OutOfRangeError
from .shooting import SteklovParams
from .spectral import (DenseForm, DescentOptions, GroundStateReport, SpectralBasis,
                       SpectralField, _boundary_matrix, _PowerTerm, descend,
                       initial_coefficients, normal_derivative_trace, power_integral,
                       radial_fraction)

# largest shape parameter accepted for ground states; nonconvex, well below 1/2
A_BAR = 0.4


@dataclass(frozen=True)
class LimaconDomain:
    a: float

    def __post_init__(self):
        a = float(self.a)
        if not (0.0 <= a < 0.5) or not math.isfinite(a):
            raise InvalidInputError(f"limaçon parameter must lie in [0, 1/2), got {self.a}")
        object.__setattr__(self, "a", a)

    @property
    def convex(self) -> bool:
        return self.a <= 0.25

    def rho(self, phi):
        return 1.0 + 2.0 * self.a * np.cos(phi)

    def h(self, z):
        return self.a + z + self.a * z * z

    def dh(self, z):
        return 1.0 + 2.0 * self.a * z

    def inverse(self, w):
        """z in the closed unit disc with h(z) = w."""
        w = np.asarray(w, dtype=complex)
        if self.a == 0:
            return w
        disc = np.sqrt(1.0 - 4.0 * self.a * (self.a - w))
        # rationalized root avoids cancellation for small a; the other root has |z| > 1
        return 2.0 * (w - self.a) / (1.0 + disc)

    def contains(self, x, y) -> bool:
        r = math.hypot(x, y)
        return r == 0.0 or r < self.rho(math.atan2(y, x))


def boundary_point(domain: LimaconDomain, phi):
    rho = domain.rho(phi)
    return rho * np.cos(phi), rho * np.sin(phi)


def curvature(domain: LimaconDomain, phi):
    """Signed curvature of the boundary, positive where it is convex."""
    a = domain.a
    rho = domain.rho(phi)
    d1 = -2.0 * a * np.sin(phi)
    d2 = -2.0 * a * np.cos(phi)
    return (rho ** 2 + 2 * d1 ** 2 - rho * d2) / (rho ** 2 + d1 ** 2) ** 1.5


@dataclass(frozen=True)
class ConvexityReport:
    convex: bool
    min_curvature: float
    phi_min: float


def is_convex(domain: LimaconDomain, n: int = 4096) -> ConvexityReport:
    phi = 2 * np.pi * np.arange(n) / n
    k = curvature(domain, phi)
    i = int(np.argmin(k))
    return ConvexityReport(bool(k[i] >= -1e-12), float(k[i]), float(phi[i]))


def boundary_curve(domain: LimaconDomain, n: int = 1024):
    """(φ, x, y, κ) on a uniform grid of n polar angles."""
    phi = 2 * np.pi * np.arange(n) / n
    x, y = boundary_point(domain, phi)
    return phi, x, y, curvature(domain, phi)


def write_boundary_csv(domain: LimaconDomain, path, n: int = 1024):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "x", "y", "kappa"])
        for row in zip(*boundary_curve(domain, n)):
            w.writerow([repr(float(v)) for v in row])


def _require_interior(domain, point):
    x, y = map(float, point)
    if not domain.contains(x, y):
        raise InvalidInputError(f"point ({x}, {y}) is not inside the limaçon a={domain.a}")
    return x, y


def dist_to_boundary(domain: LimaconDomain, point, n: int = 4096) -> float:
    x, y = _require_interior(domain, point)

    def dist(phi):
        bx, by = boundary_point(domain, phi)
        return np.hypot(bx - x, by - y)

    phi = 2 * np.pi * np.arange(n) / n
    d = dist(phi)
    h = 2 * np.pi / n
    local = np.flatnonzero((d <= np.roll(d, 1)) & (d <= np.roll(d, -1)))
    best = float(d.min())
    for i in local:
        if d[i] > best + 4 * h:
            continue
        res = minimize_scalar(dist, bounds=(phi[i] - h, phi[i] + h), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def green_bound(domain: LimaconDomain, x, y) -> float:
    """d(x) d(y) min{1, d(x) d(y) / |x - y|²}."""
    dx = dist_to_boundary(domain, x)
    dy = dist_to_boundary(domain, y)
    sep2 = (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2
    prod = dx * dy
    if sep2 == 0.0:
        return prod
    return prod * min(1.0, prod / sep2)


# --------------------------------------------------------------- pullback
class PullbackForms:
    """Dense Galerkin matrices of the pulled-back problem on a unit-disc basis."""

    def __init__(self, domain: LimaconDomain, basis: SpectralBasis):
        if abs(basis.R - 1.0) > 1e-14:
            raise InvalidInputError("the pullback uses a basis on the unit disc")
        self.domain, self.basis = domain, basis
        z = basis.r_nodes[:, None] * np.exp(1j * basis.theta_nodes[None, :])
        self.jacobian = np.abs(domain.dh(z)) ** 2

    @cached_property
    def gram(self) -> np.ndarray:
        """∫_D |h'|⁻² Δφ_i Δφ_j over flattened coefficients."""
        b = self.basis
        ang = b.ang_table * b.theta_weight
        T = np.einsum("qt,at,bt->qab", 1.0 / self.jacobian, ang, b.ang_table)
        T *= b.r_weights[:, None, None]
        Y = np.transpose(b.rad_lap_ang, (2, 0, 1))          # (q, α, k)
        G = np.empty((b.n_ang, b.n_rad, b.n_ang, b.n_rad))
        for beta in range(b.n_ang):
            Z = T[:, :, beta, None] * Y                       # (q, α, k)
            G[:, :, beta, :] = np.tensordot(Z, Y[:, beta, :], axes=(0, 0))
        G = G.reshape(b.size, b.size)
        return 0.5 * (G + G.T)

    def boundary(self, absolute: bool = False) -> np.ndarray:
        """∫ κ(θ)|h'(e^{iθ})|⁻¹ ∂_rφ_i ∂_rφ_j dθ (|κ| when ``absolute``)."""
        key = "_b_abs" if absolute else "_b"
        if not hasattr(self, key):
            dom = self.domain

            def weight(theta):
                k = curvature(dom, theta)
                return (np.abs(k) if absolute else k) / np.abs(dom.dh(np.exp(1j * theta)))

            setattr(self, key, _boundary_matrix(self.basis, weight))
        return getattr(self, key)

    def hsigma(self, sigma: float) -> DenseForm:
        return DenseForm(self.gram - (1.0 - sigma) * self.boundary(), self.basis.shape)


_FORMS: dict = {}


def pullback_forms(domain: LimaconDomain, basis: SpectralBasis) -> PullbackForms:
    key = (domain.a, id(basis))
    cached = _FORMS.get(key)
    if cached is None or cached.basis is not basis:
        cached = _FORMS[key] = PullbackForms(domain, basis)
    return cached


def pullback_quadratic(field: SpectralField, domain: LimaconDomain, sigma: float) -> float:
    """‖Δu‖² - (1-σ)∮κu_n² on Ω_a by direct quadrature of the transported field."""
    b = field.basis
    z = b.r_nodes[:, None] * np.exp(1j * b.theta_nodes[None, :])
    jac = np.abs(domain.dh(z)) ** 2
    lap = b.laplacian_values(field.coeffs)
    interior = float(np.sum(b.weights * lap ** 2 / jac))
    theta = b.theta_nodes
    un = normal_derivative_trace(field, theta)
    weight = curvature(domain, theta) / np.abs(domain.dh(np.exp(1j * theta)))
    boundary = float(np.sum(weight * un ** 2) * b.theta_weight)
    return interior - (1.0 - sigma) * boundary


def pullback_energy(field: SpectralField, domain: LimaconDomain, params: SteklovParams) -> float:
    """J_σ on Ω_a of the function transported from the unit disc by h."""
    b = field.basis
    z = b.r_nodes[:, None] * np.exp(1j * b.theta_nodes[None, :])
    jac = np.abs(domain.dh(z)) ** 2
    total, _ = power_integral(b, field.coeffs, params.p, jac)
    return 0.5 * pullback_quadratic(field, domain, params.sigma) - total / (params.p + 1)


def transported_values(field: SpectralField, domain: LimaconDomain, x, y):
    """u = ũ∘h⁻¹ at points (x, y) of the closed limaçon."""
    from .spectral import evaluate

    z = domain.inverse(np.asarray(x) + 1j * np.asarray(y))
    r = np.minimum(np.abs(z), 1.0)
    return evaluate(field, r, np.angle(z))


@dataclass(frozen=True)
class ThresholdResult:
    nu_star: float
    delta: float
    condition: float


def steklov_threshold(domain: LimaconDomain, basis: SpectralBasis | None = None) -> ThresholdResult:
    """ν_* = 1 - δ, δ the smallest eigenvalue of ‖Δu‖² = δ ∮|κ| u_n² on Ω_a."""
    basis = basis or threshold_basis()
    forms = pullback_forms(domain, basis)
    G = forms.gram
    B = forms.boundary(absolute=True)
    try:
        L = linalg.cholesky(G, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"Laplacian Gram matrix not positive definite (cond {np.linalg.cond(G):.3e})") from exc
    X = linalg.solve_triangular(L, B, lower=True)
    X = linalg.solve_triangular(L, X.T, lower=True)
    mu = np.linalg.eigvalsh(0.5 * (X + X.T))
    cond = float(np.linalg.cond(L) ** 2)
    if not mu[-1] > 0 or not np.isfinite(mu[-1]):
        raise NumericalError(f"boundary form has no positive eigenvalue (cond {cond:.3e})")
    delta = 1.0 / mu[-1]
    return ThresholdResult(1.0 - delta, delta, cond)


_THRESHOLD_BASIS = {}


def threshold_basis() -> SpectralBasis:
    if "default" not in _THRESHOLD_BASIS:
        _THRESHOLD_BASIS["default"] = SpectralBasis(R=1.0, M=10, K=24)
    return _THRESHOLD_BASIS["default"]


def _sample_grid(n_r: int = 96, n_theta: int = 256):
    r = np.linspace(0.0, 1.0, n_r)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    return r, theta


def limacon_ground_state(domain: LimaconDomain, params: SteklovParams,
                         basis: SpectralBasis | None = None,
                         options: DescentOptions | None = None,
                         threshold: ThresholdResult | None = None) -> GroundStateReport:
    """Least-energy solution on Ω_a, computed on the disc through h.

    ``min_value`` and ``max_abs`` are taken over the image of a uniform polar
    grid of the disc, which includes the boundary circle.
    """
    if domain.a > A_BAR:
        raise OutOfRangeError(f"a={domain.a} exceeds the admissible {A_BAR}")
    if abs(params.R - 1.0) > 1e-14:
        raise InvalidInputError("limaçon problems are posed with R = 1")
    threshold = threshold or steklov_threshold(domain)
    if params.sigma <= threshold.nu_star:
        raise OutOfPositivityWindowError(
            f"sigma={params.sigma} is not above the threshold nu_*={threshold.nu_star:.6g}")
    opts = options or DescentOptions()
    basis = basis or SpectralBasis()
    forms = pullback_forms(domain, basis)
    form = forms.hsigma(params.sigma)
    form.factor()
    p = params.p
    term = _PowerTerm(basis, p, forms.jacobian)
    c0 = initial_coefficients(basis, opts.seed, opts.init)
    c, it, conv, res, hist = descend(form, term, p, c0, opts)
    if np.sum(term.w * basis.values(c)) < 0:
        c = -c
    t = None
    if p > 1:
        n, _ = term(c)
        t = (form.value(c) / n) ** (1.0 / (p - 1.0))
        c = t * c
    fld = SpectralField(basis, c)
    r, theta = _sample_grid()
    u = fld.polar_derivatives(r, theta, keys=["u"])["u"]
    return GroundStateReport(field=fld, energy=pullback_energy(fld, domain, params), nehari_t=t,
                             min_value=float(u.min()), max_abs=float(np.abs(u).max()),
                             radial_fraction=radial_fraction(fld), iterations=it,
                             converged=conv, residual=res, history=hist)
