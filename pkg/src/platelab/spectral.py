"""Fourier-Bessel Galerkin machinery on the disc of radius R.

Trial functions are products of a radial function and cos(mθ) or sin(mθ).
For every angular order m the radial functions are

* the polynomial x^m (x² - 1), x = r/R, which is the exact first Steklov
  eigenfunction of order m, and
* the Dirichlet-Laplacian modes J_m(j_{m,k} x), k = 1..K.

All of them vanish on the boundary circle.  The Bessel modes alone
diagonalise ‖Δu‖², but their expansions of functions with Δu ≠ 0 on the
boundary converge only algebraically; the polynomial restores fast
convergence for the Steklov conditions.  Bilinear forms are assembled in
closed form; nonlinear integrals use Gauss-Legendre in r times the uniform
rule in θ.

Coefficient arrays have shape ``(n_ang, n_rad)``: angular functions ordered
(0,cos), (1,cos), (1,sin), ..., (M,cos), (M,sin); radial index 0 is the
polynomial when enrichment is on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg
from scipy.special import jn_zeros, jv, jvp

from .errors import (InvalidInputError, NumericalError, OutOfPositivityWindowError,
                     RangeError)
from .shooting import SteklovParams

MAX_ORDER = 60
MAX_INDEX = 200


@lru_cache(maxsize=None)
def _zero_table(m: int) -> np.ndarray:
    z = jn_zeros(m, MAX_INDEX).astype(float)
    for _ in range(2):
        z = z - jv(m, z) / jvp(m, z)
    z.setflags(write=False)
    return z


def bessel_zero(m: int, k: int) -> float:
    """k-th positive zero of J_m."""
    if not (0 <= m <= MAX_ORDER and 1 <= k <= MAX_INDEX):
        raise RangeError(f"bessel_zero({m}, {k}) outside table m<={MAX_ORDER}, k<={MAX_INDEX}")
    return float(_zero_table(m)[k - 1])


def bessel_zeros(m: int, K: int) -> np.ndarray:
    if not (0 <= m <= MAX_ORDER and 1 <= K <= MAX_INDEX):
        raise RangeError(f"bessel_zeros({m}, {K}) outside table")
    return np.array(_zero_table(m)[:K])


def _power(x, n, coef=1.0):
    """coef * x**n, returning zeros when coef == 0 (so negative n is harmless)."""
    x = np.asarray(x, dtype=float)
    if coef == 0:
        return np.zeros_like(x)
    return coef * x ** n


class SpectralBasis:
    """Truncated trial space for H² ∩ H¹₀ of the disc of radius R."""

    def __init__(self, R: float = 1.0, M: int = 12, K: int = 40, n_r: int = 128,
                 n_theta: int = 256, enrich: bool = True):
        if R <= 0:
            raise InvalidInputError("R must be positive")
        if M < 0 or K < 1:
            raise InvalidInputError("need M >= 0 and K >= 1")
        if n_theta <= 2 * M:
            raise InvalidInputError("angular quadrature too coarse for M")
        self.R, self.M, self.K = float(R), int(M), int(K)
        self.n_r, self.n_theta = int(n_r), int(n_theta)
        self.enrich = bool(enrich)
        self.n_rad = self.K + int(self.enrich)

        ms, par = [0], [0]
        for m in range(1, self.M + 1):
            ms += [m, m]
            par += [0, 1]
        self.ang_m = np.array(ms)
        self.ang_par = np.array(par)
        self.n_ang = len(ms)
        self.ang_weight = np.where(self.ang_m == 0, 2 * np.pi, np.pi)
        self.zeros = np.array([bessel_zeros(m, self.K) for m in range(self.M + 1)])

        self._build_closed_forms()
        self._build_quadrature()
        self._forms = {}

    # ------------------------------------------------------------------ setup
    @property
    def shape(self):
        return (self.n_ang, self.n_rad)

    @property
    def size(self):
        return self.n_ang * self.n_rad

    def _build_closed_forms(self):
        R = self.R
        n = self.n_rad
        e = int(self.enrich)
        M1 = self.M + 1
        self.lap_gram = np.zeros((M1, n, n))
        self.mass = np.zeros((M1, n, n))
        self.stiff = np.zeros((M1, n, n))
        self.trace = np.zeros((M1, n))
        self.norms = np.zeros((M1, self.K))
        for m in range(M1):
            j = self.zeros[m]
            lam = (j / R) ** 2
            jm1 = jv(m + 1, j)
            nk = R ** 2 / 2 * jm1 ** 2
            self.norms[m] = nk * (2 * np.pi if m == 0 else np.pi)
            ib = slice(e, n)
            self.lap_gram[m, ib, ib] = np.diag(lam ** 2 * nk)
            self.mass[m, ib, ib] = np.diag(nk)
            self.stiff[m, ib, ib] = np.diag(lam * nk)
            self.trace[m, ib] = (j / R) * jvp(m, j)
            if self.enrich:
                a = 4.0 * (m + 1)
                # ∫ x^m J_m(j x) x dx = J_{m+1}(j)/j on [0, 1]
                moment = R ** 2 * jm1 / j
                mass_pk = -a / R ** 2 * moment / lam
                self.lap_gram[m, 0, 0] = 8.0 * (m + 1) / R ** 2
                self.lap_gram[m, 0, ib] = self.lap_gram[m, ib, 0] = -lam * a / R ** 2 * moment
                self.mass[m, 0, 0] = R ** 2 * (1 / (2 * m + 6) - 2 / (2 * m + 4) + 1 / (2 * m + 2))
                self.mass[m, 0, ib] = self.mass[m, ib, 0] = mass_pk
                self.stiff[m, 0, 0] = 2.0 / (m + 2)
                self.stiff[m, 0, ib] = self.stiff[m, ib, 0] = lam * mass_pk
                self.trace[m, 0] = 2.0 / R

    def _build_quadrature(self):
        x, w = np.polynomial.legendre.leggauss(self.n_r)
        r = 0.5 * self.R * (x + 1.0)
        self.r_nodes = r
        self.r_weights = 0.5 * self.R * w * r
        self.theta_nodes = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        self.theta_weight = 2 * np.pi / self.n_theta
        self.weights = np.outer(self.r_weights, np.full(self.n_theta, self.theta_weight))
        tabs = [self.radial_table(m, r, False) for m in range(self.M + 1)]
        self.rad_val = np.array([t[0] for t in tabs])
        self.rad_lap = np.array([t[3] for t in tabs])
        self.rad_val_ang = self.rad_val[self.ang_m]
        self.rad_lap_ang = self.rad_lap[self.ang_m]
        self.ang_table = self.angular_table(self.theta_nodes)

    # ------------------------------------------------------------ evaluation
    def radial_table(self, m: int, r, derivatives: bool = True):
        """Radial functions of order m at radii r: (value, d/dr, d²/dr², Laplacian part).

        The last entry is g'' + g'/r - m² g/r², the radial factor of Δ(g cos mθ).
        With ``derivatives=False`` the two derivative entries are None.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        R = self.R
        x = r / R
        j = self.zeros[m][:, None]
        arg = j * x[None, :]
        val = jv(m, arg)
        lap = -(j / R) ** 2 * val
        d1 = d2 = None
        if derivatives:
            d1 = (j / R) * jvp(m, arg, 1)
            d2 = (j / R) ** 2 * jvp(m, arg, 2)
        if self.enrich:
            pv = _power(x, m + 2) - _power(x, m)
            pl = _power(x, m, 4.0 * (m + 1)) / R ** 2
            val = np.vstack([pv, val])
            lap = np.vstack([pl, lap])
            if derivatives:
                p1 = (_power(x, m + 1, m + 2) - _power(x, m - 1, m)) / R
                p2 = (_power(x, m, (m + 2) * (m + 1)) - _power(x, m - 2, m * (m - 1))) / R ** 2
                d1 = np.vstack([p1, d1])
                d2 = np.vstack([p2, d2])
        return val, d1, d2, lap

    def angular_table(self, theta, derivative: int = 0):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        mt = self.ang_m[:, None] * theta[None, :]
        m = self.ang_m[:, None].astype(float)
        cos_rows = self.ang_par[:, None] == 0
        if derivative == 0:
            return np.where(cos_rows, np.cos(mt), np.sin(mt))
        if derivative == 1:
            return np.where(cos_rows, -m * np.sin(mt), m * np.cos(mt))
        if derivative == 2:
            return -m ** 2 * np.where(cos_rows, np.cos(mt), np.sin(mt))
        raise InvalidInputError("angular derivative order must be 0, 1 or 2")

    def synthesize(self, coeffs, radial):
        """Grid values Σ_α (c_α · radial_α)(r) Θ_α(θ) on the quadrature grid."""
        rad = np.einsum("ak,akr->ar", coeffs, radial)
        return rad.T @ self.ang_table

    def project(self, grid_values, radial):
        """Adjoint of :meth:`synthesize` including quadrature weights."""
        g = (grid_values * self.weights) @ self.ang_table.T
        return np.einsum("akr,ra->ak", radial, g)

    def values(self, coeffs):
        return self.synthesize(coeffs, self.rad_val_ang)

    def laplacian_values(self, coeffs):
        return self.synthesize(coeffs, self.rad_lap_ang)

    def block(self, name):
        """Per-angular-function blocks (n_ang, n_rad, n_rad) of a closed-form matrix."""
        mats = {"lap": self.lap_gram, "mass": self.mass, "stiff": self.stiff}[name]
        return mats[self.ang_m] * self.ang_weight[:, None, None]

    def boundary_traces(self):
        """Normal-derivative traces b per angular function, shape (n_ang, n_rad)."""
        return self.trace[self.ang_m]

    def zero_field(self) -> "SpectralField":
        return SpectralField(self, np.zeros(self.shape))


@dataclass
class SpectralField:
    basis: SpectralBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != self.basis.shape:
            raise InvalidInputError(f"coefficients have shape {c.shape}, basis needs {self.basis.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("coefficients must be finite")
        self.coeffs = c

    def __add__(self, other):
        return SpectralField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def grid_values(self):
        return self.basis.values(self.coeffs)

    _DERIVATIVES = {"u": (0, 0), "u_r": (1, 0), "u_rr": (2, 0), "u_t": (0, 1),
                    "u_tt": (0, 2), "u_rt": (1, 1), "lap": (3, 0)}

    def polar_derivatives(self, r, theta, keys=None):
        """u and its polar derivatives on the tensor grid r × θ.

        Keys: u, u_r, u_rr, u_t, u_tt, u_rt and lap (the Laplacian).
        """
        b = self.basis
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < 0) or np.any(r > b.R * (1 + 1e-14)):
            raise InvalidInputError("evaluation radius outside [0, R]")
        keys = keys or list(self._DERIVATIVES)
        need = any(self._DERIVATIVES[k][0] in (1, 2) for k in keys)
        tabs = [b.radial_table(m, r, need) for m in range(b.M + 1)]
        ang = [b.angular_table(theta, d) for d in (0, 1, 2)]
        out = {}
        for key in keys:
            ti, ai = self._DERIVATIVES[key]
            rad = np.array([self.coeffs[a] @ tabs[b.ang_m[a]][ti] for a in range(b.n_ang)])
            out[key] = rad.T @ ang[ai]
        return out


def evaluate(field: SpectralField, r, theta):
    """Field values at points (r, θ); arrays broadcast against each other."""
    b = field.basis
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    if np.any(r < 0) or np.any(r > b.R * (1 + 1e-14)):
        raise InvalidInputError("evaluation radius outside [0, R]")
    flat_r, flat_t = r.ravel(), theta.ravel()
    out = np.zeros(flat_r.size)
    ang = b.angular_table(flat_t)
    for m in range(b.M + 1):
        val = b.radial_table(m, flat_r, False)[0]
        for a in np.flatnonzero(b.ang_m == m):
            out += (field.coeffs[a] @ val) * ang[a]
    return out.reshape(r.shape)


def normal_derivative_trace(field: SpectralField, theta):
    """u_n = ∂_r u on the boundary circle at angles θ."""
    b = field.basis
    amp = np.einsum("ak,ak->a", field.coeffs, b.boundary_traces())
    return amp @ b.angular_table(theta)


def radial_fraction(field: SpectralField) -> float:
    """Share of the squared L² norm carried by the m = 0 coefficients."""
    b = field.basis
    mass = b.block("mass")
    parts = np.einsum("ak,akl,al->a", field.coeffs, mass, field.coeffs)
    total = parts.sum()
    if not total > 0:
        raise InvalidInputError("radial_fraction of the zero field")
    return float(min(1.0, max(0.0, parts[b.ang_m == 0].sum() / total)))


# ------------------------------------------------------------------ forms
class BlockForm:
    """Symmetric form that is block diagonal over angular functions."""

    def __init__(self, blocks):
        self.blocks = np.asarray(blocks, dtype=float)
        self._chol = None

    @property
    def shape(self):
        return self.blocks.shape[:2]

    def apply(self, c):
        return np.einsum("akl,al->ak", self.blocks, c)

    def value(self, c):
        return float(np.einsum("ak,ak->", c, self.apply(c)))

    def eigenvalues(self):
        return np.concatenate([np.linalg.eigvalsh(b) for b in self.blocks])

    def min_eigenvalue(self):
        return float(self.eigenvalues().min())

    def factor(self):
        if self._chol is None:
            try:
                self._chol = [linalg.cho_factor(b) for b in self.blocks]
            except linalg.LinAlgError as exc:
                raise OutOfPositivityWindowError(
                    f"form is not positive definite (min eigenvalue {self.min_eigenvalue():.3e})"
                ) from exc
        return self._chol

    def solve(self, g):
        return np.array([linalg.cho_solve(f, gi) for f, gi in zip(self.factor(), g)])

    def dense(self):
        return linalg.block_diag(*self.blocks)


class DenseForm:
    """Symmetric form acting on flattened coefficient arrays of a given shape."""

    def __init__(self, matrix, shape):
        self.matrix = np.asarray(matrix, dtype=float)
        self._shape = tuple(shape)
        self._chol = None

    @property
    def shape(self):
        return self._shape

    def apply(self, c):
        return (self.matrix @ c.ravel()).reshape(self._shape)

    def value(self, c):
        v = c.ravel()
        return float(v @ self.matrix @ v)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def min_eigenvalue(self):
        return float(self.eigenvalues()[0])

    def factor(self):
        if self._chol is None:
            try:
                self._chol = linalg.cho_factor(self.matrix)
            except linalg.LinAlgError as exc:
                raise OutOfPositivityWindowError(
                    f"form is not positive definite (min eigenvalue {self.min_eigenvalue():.3e})"
                ) from exc
        return self._chol

    def solve(self, g):
        return linalg.cho_solve(self.factor(), g.ravel()).reshape(self._shape)

    def dense(self):
        return self.matrix


@dataclass
class HSigmaForm(BlockForm):
    """‖u‖²_{H_σ} = Σ_α w_α [cᵀ G c - (1 - σ)(b·c)²] on the disc.

    ``gram`` holds the ‖Δ·‖² blocks (diagonal on the Bessel modes), ``traces``
    the rank-one boundary vectors b and ``weights`` the angular weights w_α.
    """

    gram: np.ndarray
    traces: np.ndarray
    weights: np.ndarray
    sigma: float
    boundary_coef: float = field(init=False)

    def __post_init__(self):
        self.boundary_coef = 1.0 - self.sigma
        rank_one = np.einsum("ak,al->akl", self.traces, self.traces)
        blocks = self.gram - self.boundary_coef * self.weights[:, None, None] * rank_one
        BlockForm.__init__(self, blocks)

    def boundary_value(self, c):
        """∮ κ u_n² ds = Σ_α w_α (b·c)²."""
        return float(np.sum(self.weights * np.einsum("ak,ak->a", self.traces, c) ** 2))


def assemble_hsigma_form(basis: SpectralBasis, sigma: float) -> HSigmaForm:
    if sigma <= -1:
        raise InvalidInputError(f"sigma must exceed -1, got {sigma}")
    key = ("hsigma", float(sigma))
    if key not in basis._forms:
        basis._forms[key] = HSigmaForm(basis.block("lap"), basis.boundary_traces(),
                                       basis.ang_weight.astype(float), float(sigma))
    return basis._forms[key]


def _boundary_matrix(basis: SpectralBasis, weight_fn, n_theta=None):
    """Dense matrix of R ∫ β(θ) u_r v_r dθ over flattened coefficients."""
    n_theta = n_theta or max(basis.n_theta, 4 * basis.M + 64)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    beta = np.broadcast_to(np.asarray(weight_fn(theta), dtype=float), theta.shape)
    ang = basis.angular_table(theta)
    T = ang * (2 * np.pi / n_theta)
    A = basis.R * (T * beta) @ ang.T
    tr = basis.boundary_traces()
    full = np.einsum("ab,ak,bl->akbl", A, tr, tr)
    return full.reshape(basis.size, basis.size)


@dataclass(frozen=True)
class SteklovEigenResult:
    delta: float
    m_min: int | None
    per_mode: dict


def steklov_eigenvalue(basis: SpectralBasis, beta_weight=None, m: int | None = None):
    """Smallest δ with ‖Δu‖²₂ = δ ∮ β u_n² over the trial space.

    ``beta_weight`` is a non-negative constant (default κ = 1/R) or a
    callable of the boundary angle.  For a constant weight the problem splits
    by angular order; ``per_mode`` maps m to its smallest eigenvalue and
    ``m`` restricts the computation to one order.
    """
    if beta_weight is None:
        beta_weight = 1.0 / basis.R
    if callable(beta_weight):
        B = _boundary_matrix(basis, beta_weight)
        if not np.any(np.abs(B) > 0):
            raise InvalidInputError("boundary weight vanishes identically")
        G = linalg.block_diag(*basis.block("lap"))
        L = linalg.cholesky(G, lower=True)
        X = linalg.solve_triangular(L, B, lower=True)
        X = linalg.solve_triangular(L, X.T, lower=True)
        mu = np.linalg.eigvalsh(0.5 * (X + X.T))[-1]
        if not mu > 0:
            raise NumericalError("boundary form has no positive eigenvalue")
        return SteklovEigenResult(float(1.0 / mu), None, {})

    beta = float(beta_weight)
    if not beta > 0:
        raise InvalidInputError("boundary weight must be positive somewhere")
    modes = range(basis.M + 1) if m is None else [m]
    per_mode = {}
    for mm in modes:
        if not 0 <= mm <= basis.M:
            raise RangeError(f"angular order {mm} outside basis (M={basis.M})")
        G = basis.lap_gram[mm]
        b = basis.trace[mm]
        per_mode[mm] = float(1.0 / (basis.R * beta * (b @ linalg.solve(G, b, assume_a="pos"))))
    m_min = min(per_mode, key=per_mode.get)
    return SteklovEigenResult(per_mode[m_min], m_min, per_mode)


# --------------------------------------------------------------- linear solves
def _load_vector(basis: SpectralBasis, f):
    if isinstance(f, SpectralField):
        return np.einsum("akl,al->ak", basis.block("mass"), f.coeffs)
    if callable(f):
        rr, tt = np.meshgrid(basis.r_nodes, basis.theta_nodes, indexing="ij")
        vals = np.broadcast_to(np.asarray(f(rr, tt), dtype=float), rr.shape)
    else:
        vals = np.asarray(f, dtype=float)
        if vals.shape != (basis.n_r, basis.n_theta):
            raise InvalidInputError("sampled source must live on the basis quadrature grid")
    return basis.project(vals, basis.rad_val_ang)


def linear_steklov_solve(basis: SpectralBasis, f, alpha=0.0) -> SpectralField:
    """Galerkin solution of Δ²u = f, u = 0, Δu = α u_n on the boundary circle.

    ``alpha`` is a constant or a callable of the boundary angle; the source is
    a SpectralField, a callable f(r, θ) or samples on the quadrature grid.
    """
    load = _load_vector(basis, f)
    if callable(alpha):
        G = linalg.block_diag(*basis.block("lap"))
        form = DenseForm(G - _boundary_matrix(basis, alpha), basis.shape)
        label = "alpha(theta)"
    else:
        a = float(alpha)
        form = HSigmaForm(basis.block("lap"), basis.boundary_traces(),
                          basis.ang_weight.astype(float), 1.0 - a * basis.R)
        label = f"alpha={a:g} (sigma={1.0 - a * basis.R:g})"
    try:
        form.factor()
    except OutOfPositivityWindowError as exc:
        raise OutOfPositivityWindowError(f"{label}: {exc}") from exc
    if not np.any(load):
        return basis.zero_field()
    return SpectralField(basis, form.solve(load))


def poisson_solve(basis: SpectralBasis, f) -> SpectralField:
    """Galerkin solution of -Δu = f with u = 0 on the boundary circle."""
    form = BlockForm(basis.block("stiff"))
    return SpectralField(basis, form.solve(_load_vector(basis, f)))


# ------------------------------------------------------------- nonlinear terms
def power_integral(basis: SpectralBasis, coeffs, p: float, weight=None):
    """∫ |u|^{p+1} and its gradient ∂/∂c [∫ |u|^{p+1}/(p+1)]."""
    u = basis.values(coeffs)
    w = basis.weights if weight is None else basis.weights * weight
    au = np.abs(u)
    total = float(np.sum(w * au ** (p + 1)))
    dens = np.sign(u) * au ** p
    grad = basis.project(dens if weight is None else dens * weight, basis.rad_val_ang)
    return total, grad


def energy(field: SpectralField, params: SteklovParams) -> float:
    """J_σ(u) = ½‖u‖²_{H_σ} - ∫|u|^{p+1}/(p+1)."""
    basis = field.basis
    form = assemble_hsigma_form(basis, params.sigma)
    total, _ = power_integral(basis, field.coeffs, params.p)
    return 0.5 * form.value(field.coeffs) - total / (params.p + 1)


def nehari_scale(field: SpectralField, params: SteklovParams, form=None, weight=None) -> float:
    """t* > 0 with t*·u on the Nehari manifold (p > 1)."""
    if params.p <= 1:
        raise InvalidInputError("the Nehari scale is defined for p > 1")
    if not np.any(field.coeffs):
        raise InvalidInputError("nehari_scale of the zero field")
    form = form or assemble_hsigma_form(field.basis, params.sigma)
    q = form.value(field.coeffs)
    if not q > 0:
        raise OutOfPositivityWindowError(f"H_sigma form value {q:.3e} is not positive")
    n, _ = power_integral(field.basis, field.coeffs, params.p, weight)
    if not n > 0:
        raise InvalidInputError("∫|u|^{p+1} vanishes")
    return (q / n) ** (1.0 / (params.p - 1.0))


# ------------------------------------------------------------- ground states
@dataclass(frozen=True)
class DescentOptions:
    max_iter: int = 10_000
    gtol: float = 1e-9
    seed: int = 0
    init: str = "random"
    armijo: float = 1e-4
    min_step: float = 1e-12


@dataclass
class GroundStateReport:
    field: SpectralField
    energy: float
    nehari_t: float | None
    min_value: float
    max_abs: float
    radial_fraction: float
    iterations: int
    converged: bool
    residual: float
    history: list = field(repr=False, default_factory=list)


def initial_coefficients(basis: SpectralBasis, seed: int = 0, kind: str = "random"):
    """Random smooth start; ``asymmetric`` puts most of the mass off m = 0."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(basis.shape)
    decay = 1.0 / (1.0 + np.arange(basis.n_rad)) ** 2
    c *= decay[None, :] / (1.0 + basis.ang_m[:, None]) ** 2
    if kind == "asymmetric":
        c[basis.ang_m == 0] *= 0.05
        c[basis.ang_m == 1] *= 20.0
        c[basis.ang_m == 2] *= 5.0
    elif kind != "random":
        raise InvalidInputError(f"unknown initialisation {kind!r}")
    return c


def power_difference(u, du, p):
    """Pointwise |u + du|^{p+1} - |u|^{p+1} without cancellation."""
    a = u + du
    out = np.abs(a) ** (p + 1) - np.abs(u) ** (p + 1)
    # cancellation only bites for small relative steps
    small = np.abs(du) < 0.5 * np.abs(u)
    ratio = du[small] / u[small]
    out[small] = np.abs(u[small]) ** (p + 1) * np.expm1((p + 1) * np.log1p(ratio))
    return out


def descend(form, nonlinear, p: float, c0, options: DescentOptions):
    """Preconditioned descent for the ground state.

    For p > 1 the scale-invariant quotient ‖u‖²_{H_σ} / (∫|u|^{p+1})^{2/(p+1)}
    is minimised; for p < 1 the functional itself.  The preconditioner is the
    H_σ form, so the trial step τ = 1 is the normalised fixed-point map
    c ↦ A⁻¹ g(c).

    ``nonlinear(c)`` returns ``(∫|u|^{p+1}, gradient)`` and
    ``nonlinear.change(c, d)`` the exact change of the integral along d.
    Objective changes are computed directly from these differences, so the
    sufficient-decrease test stays meaningful close to the minimiser where
    the objective itself is flat to round-off.

    Returns ``(c, iterations, converged, residual, history)``.
    """
    superlinear = p > 1
    e = 2.0 / (p + 1.0)

    def objective(q, n):
        return q / n ** e if superlinear else 0.5 * q - n / (p + 1)

    def change(c, d, tau, q, n, f):
        dq = 2 * tau * float(np.sum(c * form.apply(d))) + tau ** 2 * form.value(d)
        dn = nonlinear.change(c, tau * d)
        if superlinear:
            return f * np.expm1(np.log1p(dq / q) - e * np.log1p(dn / n))
        return 0.5 * dq - dn / (p + 1)

    c = np.array(c0, dtype=float)
    if superlinear:
        c /= math.sqrt(form.value(c))
    q = form.value(c)
    n, g = nonlinear(c)
    f = objective(q, n)
    history = [f]
    converged, residual, it = False, np.inf, 0
    for it in range(1, options.max_iter + 1):
        target = form.solve(g)
        d = (q / n) * target - c if superlinear else target - c
        dAd = form.value(d)
        residual = math.sqrt(max(dAd, 0.0) / q)
        if residual <= options.gtol:
            converged = True
            break
        slope = -(2.0 / n ** e) * dAd if superlinear else -dAd
        tau = 1.0
        while True:
            df = change(c, d, tau, q, n, f)
            if df <= options.armijo * tau * slope:
                break
            tau *= 0.5
            if tau < options.min_step:
                return c, it - 1, False, residual, history
        c = c + tau * d
        f = f + df
        q = form.value(c)
        n, g = nonlinear(c)
        if superlinear:
            s = 1.0 / math.sqrt(q)
            c, q, n, g = c * s, 1.0, n * s ** (p + 1), g * s ** p
        history.append(f)
    return c, it, converged, residual, history


class _PowerTerm:
    """∫ w |u|^{p+1} over the basis quadrature grid with an optional weight."""

    def __init__(self, basis, p, weight=None):
        self.basis, self.p = basis, p
        self.w = basis.weights if weight is None else basis.weights * weight
        self.weight = weight

    def __call__(self, c):
        return power_integral(self.basis, c, self.p, self.weight)

    def change(self, c, d):
        u = self.basis.values(c)
        du = self.basis.values(d)
        return float(np.sum(self.w * power_difference(u, du, self.p)))


def _orient(basis, c, weight=None):
    u = basis.values(c)
    w = basis.weights if weight is None else basis.weights * weight
    return -c if np.sum(w * u) < 0 else c


def ground_state(params: SteklovParams, basis: SpectralBasis,
                 options: DescentOptions | None = None, c0=None) -> GroundStateReport:
    """Least-energy solution of the Steklov problem on the disc."""
    opts = options or DescentOptions()
    if abs(params.R - basis.R) > 1e-14 * basis.R:
        raise InvalidInputError("params.R does not match the basis radius")
    form = assemble_hsigma_form(basis, params.sigma)
    form.factor()
    p = params.p
    if c0 is None:
        c0 = initial_coefficients(basis, opts.seed, opts.init)

    c, it, conv, res, hist = descend(form, _PowerTerm(basis, p), p, c0, opts)
    c = _orient(basis, c)
    t = None
    if p > 1:
        t = nehari_scale(SpectralField(basis, c), params, form)
        c = t * c
    fld = SpectralField(basis, c)
    u = basis.values(c)
    return GroundStateReport(field=fld, energy=energy(fld, params), nehari_t=t,
                             min_value=float(u.min()), max_abs=float(np.abs(u).max()),
                             radial_fraction=radial_fraction(fld), iterations=it,
                             converged=conv, residual=res, history=hist)


# ----------------------------------------------------------- Hessian identity
@dataclass(frozen=True)
class HessianIdentity:
    interior: float
    boundary: float

    @property
    def difference(self) -> float:
        return self.interior - self.boundary


def hessian_identity_check(field, R: float | None = None, n_r: int | None = None,
                           n_theta: int | None = None) -> HessianIdentity:
    """Compare ∫ det ∇²u with ½ ∮ κ u_n² on the disc.

    ``field`` is any object with ``polar_derivatives(r, theta)`` returning the
    keys u_r, u_rr, u_t, u_tt, u_rt on the tensor grid.
    """
    basis = getattr(field, "basis", None)
    R = R if R is not None else basis.R
    n_r = n_r or (basis.n_r if basis is not None else 128)
    n_theta = n_theta or (basis.n_theta if basis is not None else 256)
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * R * (x + 1.0)
    wr = 0.5 * R * w * r
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    dth = 2 * np.pi / n_theta
    d = field.polar_derivatives(r, theta)
    rc = r[:, None]
    det = d["u_rr"] * (d["u_r"] / rc + d["u_tt"] / rc ** 2) - (d["u_rt"] / rc - d["u_t"] / rc ** 2) ** 2
    interior = float(np.sum(wr[:, None] * det) * dth)
    un = field.polar_derivatives(np.array([R]), theta)["u_r"][0]
    boundary = 0.5 * float(np.sum(un ** 2) * dth)
    return HessianIdentity(interior, boundary)
