"""Radial shooting for Δ²u = |u|^{p-1}u with Steklov boundary conditions.

The planar radial equation is integrated as a first-order system in
(u, u', v, v') with v = Δu, starting from u(0) = 1 and a trial value
β = Δu(0).  The first zero r₀ of u defines a ball on which the normalized
profile satisfies u = 0; the Steklov condition is then a scalar equation
Q(β) = 0 in the shooting parameter.  Any other radius follows from the
scaling w(r) = λ^{4/(p-1)} u(λ r).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import DOP853, OdeSolution
from scipy.optimize import brentq, minimize_scalar

from .errors import (DivergenceError, InvalidInputError, NoDataError,
                     NoSolutionError, NoZeroError)
from .radial import RadialGrid, RadialProfile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SteklovParams:
    """Exponent p, boundary parameter sigma and disc radius R."""

    p: float
    sigma: float
    R: float = 1.0

    def __post_init__(self):
        p, sigma, R = float(self.p), float(self.sigma), float(self.R)
        problems = []
        if not math.isfinite(p) or p <= 0 or p == 1:
            problems.append(f"p must lie in (0,1) or (1,inf), got {p}")
        if not math.isfinite(sigma) or sigma <= -1:
            problems.append(f"sigma must satisfy sigma > -1, got {sigma}")
        if not math.isfinite(R) or R <= 0:
            problems.append(f"R must be positive, got {R}")
        if problems:
            raise InvalidInputError("; ".join(problems))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "R", R)

    @property
    def kappa(self) -> float:
        return 1.0 / self.R

    @property
    def scale_exponent(self) -> float:
        """The exponent 4/(p-1) of the amplitude scaling."""
        return 4.0 / (self.p - 1.0)


@dataclass(frozen=True)
class IntegratorOptions:
    eps: float = 1e-4
    rtol: float = 1e-11
    atol: float = 1e-11
    r_max: float = 50.0
    bisect_iter: int = 60


@dataclass(frozen=True)
class ShootingState:
    r: float
    u: float
    du: float
    v: float
    dv: float


def nonlinearity(u, p):
    """|u|^{p-1} u, written as sign(u)|u|^p so that p < 1 stays finite at 0."""
    return np.sign(u) * np.abs(u) ** p


def taylor_state(r, p, alpha, beta):
    """Fourth-order Taylor data (u, u', v, v') of the regular solution near 0."""
    r = np.asarray(r, dtype=float)
    fa = float(nonlinearity(alpha, p))
    u = alpha + beta * r ** 2 / 4 + fa * r ** 4 / 64
    du = beta * r / 2 + fa * r ** 3 / 16
    v = beta + fa * r ** 2 / 4
    dv = fa * r / 2
    return np.array([u, du, v, dv])


@dataclass
class RadialTrajectory:
    """Dense solution of the radial initial value problem.

    ``r0`` is the first zero of u when ``hit_zero`` is true; otherwise
    ``reason`` says why integration stopped ("certificate" when u' >= 0 and
    Δu >= 0, after which u can never return to zero, or "r_max").
    """

    p: float
    alpha: float
    beta: float
    eps: float
    ts: np.ndarray
    ys: np.ndarray
    solution: OdeSolution
    hit_zero: bool
    r0: float | None
    reason: str
    nfev: int = 0

    @property
    def r_end(self) -> float:
        return float(self.ts[-1]) if self.r0 is None else self.r0

    def __call__(self, r) -> np.ndarray:
        """State (u, u', v, v') at radii r; Taylor data below the start radius."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((4, r.size))
        inner = r < self.eps
        if np.any(inner):
            out[:, inner] = taylor_state(r[inner], self.p, self.alpha, self.beta)
        if np.any(~inner):
            rr = np.clip(r[~inner], self.ts[0], self.ts[-1])
            out[:, ~inner] = self.solution(rr)
        return out

    def state(self, r: float) -> ShootingState:
        u, du, v, dv = self(r)[:, 0]
        return ShootingState(float(r), u, du, v, dv)


def _rhs(p):
    def rhs(r, y):
        u, du, v, dv = y
        return np.array([du, v - du / r, dv, nonlinearity(u, p) - dv / r])
    return rhs


def _dip_below_zero(dense, t_old, t_new, du_old, du_new):
    """Radius in (t_old, t_new] where u <= 0 although both step ends are positive.

    Only a sign change of u' inside the step allows such a dip; the interior
    minimum of the dense interpolant is then located and tested.
    """
    if not (du_old < 0.0 < du_new):
        return None
    res = minimize_scalar(lambda r: dense(r)[0], bounds=(t_old, t_new), method="bounded",
                          options={"xatol": 1e-14 * t_new})
    return res.x if dense(res.x)[0] <= 0.0 else None


def integrate_ivp(p: float, alpha: float, beta: float,
                  options: IntegratorOptions | None = None) -> RadialTrajectory:
    """Integrate from the origin until the first zero of u or r_max."""
    opts = options or IntegratorOptions()
    if not alpha > 0:
        raise InvalidInputError(f"alpha = u(0) must be positive, got {alpha}")
    if not (opts.eps > 0 and opts.r_max > opts.eps):
        raise InvalidInputError("need 0 < eps < r_max")
    with np.errstate(over="ignore", invalid="ignore"):
        y0 = taylor_state(opts.eps, p, alpha, beta)
    if not np.all(np.isfinite(y0)):
        raise DivergenceError("non-finite series start", 0.0)
    solver = DOP853(_rhs(p), opts.eps, y0, opts.r_max, rtol=opts.rtol, atol=opts.atol)
    ts, ys, interps = [opts.eps], [y0], []
    hit_zero, r0, reason = False, None, "r_max"

    while solver.status == "running":
        t_old, du_old = solver.t, solver.y[1]
        msg = solver.step()
        if solver.status == "failed" or not np.all(np.isfinite(solver.y)):
            raise DivergenceError(f"integration failed: {msg or 'non-finite state'}", t_old)
        dense = solver.dense_output()
        ts.append(solver.t)
        ys.append(solver.y.copy())
        interps.append(dense)
        u, du, v, _ = solver.y
        hi = solver.t if u <= 0.0 else _dip_below_zero(dense, t_old, solver.t, du_old, du)
        if hi is not None:
            lo = t_old
            for _ in range(opts.bisect_iter):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if dense(mid)[0] > 0.0:
                    lo = mid
                else:
                    hi = mid
            r0 = lo if abs(dense(lo)[0]) <= abs(dense(hi)[0]) else hi
            hit_zero, reason = True, "zero"
            break
        if du >= 0.0 and v >= 0.0:
            reason = "certificate"
            break

    ts = np.asarray(ts)
    sol = OdeSolution(ts, interps) if interps else None
    return RadialTrajectory(p=p, alpha=alpha, beta=beta, eps=opts.eps, ts=ts,
                            ys=np.asarray(ys).T, solution=sol, hit_zero=hit_zero,
                            r0=r0, reason=reason, nfev=solver.nfev)


def steklov_residual(p: float, sigma: float, beta: float,
                     options: IntegratorOptions | None = None):
    """Q(β) = Δu(r₀) - (1 - σ) u'(r₀)/r₀ for the profile with u(0) = 1.

    Returns ``(Q, trajectory)``.
    """
    traj = integrate_ivp(p, 1.0, beta, options)
    if not traj.hit_zero:
        raise NoZeroError(f"no first zero for beta={beta!r} ({traj.reason})",
                          beta=beta, reason=traj.reason)
    _, du, v, _ = traj(traj.r0)[:, 0]
    return float(v - (1.0 - sigma) * du / traj.r0), traj


@dataclass(frozen=True)
class ShootOptions:
    beta_lo: float = -1e4
    beta_hi: float = -1e-3
    n_scan: int = 200
    tol: float = 1e-10
    n_profile: int = 2001
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)

    def beta_grid(self) -> np.ndarray:
        if not (self.beta_lo < self.beta_hi < 0):
            raise InvalidInputError("need beta_lo < beta_hi < 0")
        mags = np.logspace(np.log10(-self.beta_lo), np.log10(-self.beta_hi), self.n_scan)
        return -mags


@dataclass(frozen=True)
class ResidualScan:
    beta: np.ndarray
    q: np.ndarray
    valid: np.ndarray

    @property
    def skipped(self) -> np.ndarray:
        return self.beta[~self.valid]

    def brackets(self) -> list[tuple[float, float]]:
        idx = np.flatnonzero(self.valid)
        out = []
        for i, j in zip(idx[:-1], idx[1:]):
            if self.q[i] == 0.0:
                out.append((self.beta[i], self.beta[i]))
            elif self.q[i] * self.q[j] < 0:
                out.append((self.beta[i], self.beta[j]))
        return out

    @property
    def sign_changes(self) -> int:
        return len(self.brackets())

    def table(self) -> list[tuple[float, float | None]]:
        return [(float(b), float(q) if ok else None)
                for b, q, ok in zip(self.beta, self.q, self.valid)]


def _shootable(p, sigma, beta, options):
    try:
        return steklov_residual(p, sigma, beta, options)[0]
    except (NoZeroError, DivergenceError):
        return None


def _edge_point(p, sigma, good, bad, options, iterations):
    """Bisect between a shootable and an unshootable beta; return the last good one."""
    q_good = None
    for _ in range(iterations):
        mid = 0.5 * (good + bad)
        if mid == good or mid == bad:
            break
        q = _shootable(p, sigma, mid, options)
        if q is None:
            bad = mid
        else:
            good, q_good = mid, q
    return good, q_good


def scan_residual(params: SteklovParams, beta_grid,
                  options: IntegratorOptions | None = None,
                  edge_iterations: int = 60) -> ResidualScan:
    """Tabulate Q on a beta grid.

    Where a shootable grid point neighbours one without a first zero, the
    boundary between them is bisected and the shootable point closest to it
    is added to the table.  For large sigma the root lies in that gap: as
    the first zero turns tangential, u'(r0) -> 0 and Q -> Δu(r0) > 0.
    Pass ``edge_iterations=0`` to tabulate the bare grid.
    """
    beta = np.asarray(beta_grid, dtype=float)
    if beta.ndim != 1 or beta.size == 0:
        raise InvalidInputError("beta_grid must be a non-empty 1-D array")
    if np.any(np.diff(beta) <= 0) or np.any(beta >= 0):
        raise InvalidInputError("beta_grid must be strictly increasing and negative")
    p, sigma = params.p, params.sigma
    q = np.full(beta.size, np.nan)
    for i, b in enumerate(beta):
        qi = _shootable(p, sigma, b, options)
        if qi is not None:
            q[i] = qi
    valid = np.isfinite(q)

    extra_b, extra_q = [], []
    if edge_iterations > 0:
        for i in range(beta.size - 1):
            if valid[i] == valid[i + 1]:
                continue
            good, bad = (beta[i], beta[i + 1]) if valid[i] else (beta[i + 1], beta[i])
            b_edge, q_edge = _edge_point(p, sigma, good, bad, options, edge_iterations)
            if q_edge is not None:
                extra_b.append(b_edge)
                extra_q.append(q_edge)
    if extra_b:
        beta = np.concatenate([beta, extra_b])
        q = np.concatenate([q, extra_q])
        order = np.argsort(beta, kind="stable")
        beta, q = beta[order], q[order]
        valid = np.isfinite(q)
    return ResidualScan(beta, q, valid)


def count_roots(params: SteklovParams, beta_grid,
                options: IntegratorOptions | None = None) -> int:
    """Number of sign changes of Q between consecutive shootable grid points."""
    scan = scan_residual(params, beta_grid, options)
    if not np.any(scan.valid):
        raise NoDataError("no grid point produced a first zero")
    if scan.skipped.size:
        log.debug("count_roots skipped %d grid points without a first zero", scan.skipped.size)
    return scan.sign_changes


@dataclass(frozen=True)
class ShootingResult:
    params: SteklovParams
    beta_star: float
    r0: float
    lam: float
    profile: RadialProfile
    residual: float
    root_count: int
    trajectory: RadialTrajectory = field(repr=False)
    scan: ResidualScan = field(repr=False)

    @property
    def u0(self) -> float:
        return float(self.profile.u[0])

    @property
    def amplitude(self) -> float:
        """Factor λ^{4/(p-1)} mapping the normalized profile to radius R."""
        return self.lam ** self.params.scale_exponent


def rescaled_profile(traj: RadialTrajectory, r0: float, p: float, R: float,
                     n: int) -> RadialProfile:
    """Profile on [0, R] of w(r) = λ^{4/(p-1)} u(λ r) with λ = r₀/R."""
    lam = r0 / R
    amp = lam ** (4.0 / (p - 1.0))
    grid = RadialGrid.uniform(R, n)
    s = np.minimum(lam * grid.nodes, r0)
    s[-1] = r0
    u, du, v, dv = traj(s)
    return RadialProfile(grid, amp * u, amp * lam * du, amp * lam ** 2 * v,
                         amp * lam ** 3 * dv)


def solve_radial(params: SteklovParams, options: ShootOptions | None = None) -> ShootingResult:
    """Positive radial solution of the Steklov problem on the disc of radius R."""
    opts = options or ShootOptions()
    p, sigma = params.p, params.sigma
    scan = scan_residual(params, opts.beta_grid(), opts.integrator)
    brackets = scan.brackets()
    if not brackets:
        raise NoSolutionError(
            f"no sign change of the Steklov residual for p={p}, sigma={sigma} "
            f"on beta in [{opts.beta_lo}, {opts.beta_hi}]", table=scan.table())

    lo, hi = brackets[0]

    def q(b):
        return steklov_residual(p, sigma, b, opts.integrator)[0]

    if lo == hi:
        beta_star = lo
    else:
        beta_star = brentq(q, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    residual, traj = steklov_residual(p, sigma, beta_star, opts.integrator)
    profile = rescaled_profile(traj, traj.r0, p, params.R, opts.n_profile)
    return ShootingResult(params=params, beta_star=float(beta_star), r0=float(traj.r0),
                          lam=float(traj.r0 / params.R), profile=profile,
                          residual=abs(residual), root_count=scan.sign_changes,
                          trajectory=traj, scan=scan)


def rescale(result: ShootingResult, R: float, n: int | None = None) -> ShootingResult:
    """The same normalized solution transported to the disc of radius R."""
    params = replace(result.params, R=R)
    n = n or len(result.profile.grid)
    profile = rescaled_profile(result.trajectory, result.r0, params.p, R, n)
    return replace(result, params=params, lam=result.r0 / R, profile=profile)


@dataclass(frozen=True)
class DeficiencyProfile:
    r: np.ndarray
    f: np.ndarray
    min_f: float
    f_at_one: float
    limit_at_zero: float


def deficiency_profile(result: ShootingResult, sigma: float | None = None,
                       n: int = 4000) -> DeficiencyProfile:
    """f(r) = -w'' - (σ/r) w' for the solution rescaled to the unit disc.

    Using w'' = Δw - w'/r this is f = -Δw + (1 - σ) w'/r, evaluated from the
    integrator state rather than by differencing.
    """
    if sigma is None:
        sigma = result.params.sigma
    p, r0 = result.params.p, result.r0
    amp = r0 ** (4.0 / (p - 1.0))
    r = np.linspace(0.0, 1.0, n + 2)[1:-1]

    def f_at(rr):
        _, du, v, _ = result.trajectory(np.minimum(r0 * rr, r0))
        return -amp * r0 ** 2 * v + (1.0 - sigma) * amp * r0 * du / rr

    f = f_at(r)
    f1 = float(f_at(np.array([1.0]))[0])
    w2_origin = amp * r0 ** 2 * result.beta_star / 2.0
    return DeficiencyProfile(r=r, f=f, min_f=float(f.min()), f_at_one=f1,
                             limit_at_zero=float(-(1.0 + sigma) * w2_origin))
