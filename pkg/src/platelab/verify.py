"""Acceptance checks shared by the ``verify-all`` command and the test suite.

Each check returns a :class:`CriterionResult` with a pass flag, a one-line
detail string and the numbers it was decided on.  Expensive intermediate
results (the radial solution table, the default disc basis) are cached on a
:class:`VerificationSession` so related checks reuse them.
"""
from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PlatelabError
from .limacon import (LimaconDomain, boundary_point, curvature, is_convex,
                      limacon_ground_state, steklov_threshold)
from .radial import check_monotonicity
from .rearrange import boundary_chain_check, schwarz_rearrange, talenti_compare
from .rearrange import PolarCells
from .shooting import SteklovParams, deficiency_profile, solve_radial
from .spectral import (DescentOptions, SpectralBasis, SpectralField, assemble_hsigma_form,
                       evaluate, ground_state, hessian_identity_check, steklov_eigenvalue)

UNIQUENESS_P = (0.5, 2.0, 3.0, 5.0)
UNIQUENESS_SIGMA = (-0.9, -0.5, 0.0, 1.0, 2.0, 10.0)


@dataclass
class CriterionResult:
    id: int
    title: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.id:2d} {self.title}: {self.detail}"


class VerificationSession:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self._radial = None
        self._basis = None

    @property
    def basis(self) -> SpectralBasis:
        if self._basis is None:
            self._basis = SpectralBasis()
        return self._basis

    def radial_solutions(self) -> dict:
        """(p, σ) → ShootingResult, or the exception the solve raised."""
        if self._radial is None:
            table = {}
            for p in UNIQUENESS_P:
                for s in UNIQUENESS_SIGMA:
                    try:
                        table[(p, s)] = solve_radial(SteklovParams(p, s))
                    except PlatelabError as exc:
                        table[(p, s)] = exc
            self._radial = table
        return self._radial


_REGISTRY: dict = {}


def criterion(cid: int, title: str):
    def deco(fn):
        _REGISTRY[cid] = (title, fn)
        return fn
    return deco


def _fmt(x) -> str:
    return f"{x:.3g}"


@criterion(1, "Steklov eigenvalues of the unit disc")
def _steklov(session):
    res = steklov_eigenvalue(session.basis)
    err0 = abs(res.delta - 2.0)
    errs = [abs(res.per_mode[m] - (2 * m + 2)) for m in range(6)]
    nu = 1.0 - res.delta
    ok = err0 <= 1e-8 and max(errs) <= 1e-6 and abs(nu + 1.0) <= 1e-8
    return ok, f"|δ1-2|={_fmt(err0)}, max_m<=5 |δm-(2m+2)|={_fmt(max(errs))}, ν*={nu:.12f}", {
        "delta": res.delta, "mode_error": max(errs), "nu_star": nu}


def _radial_failures(table):
    return {k: v for k, v in table.items() if isinstance(v, Exception)}


@criterion(2, "uniqueness of the radial solution")
def _uniqueness(session):
    table = session.radial_solutions()
    bad = _radial_failures(table)
    counts = {k: v.root_count for k, v in table.items() if k not in bad}
    resid = max((v.residual for k, v in table.items() if k not in bad), default=math.inf)
    ok = not bad and all(c == 1 for c in counts.values()) and resid <= 1e-10
    wrong = sorted(k for k, c in counts.items() if c != 1)
    return ok, (f"{len(counts)}/{len(table)} solved, sign changes != 1 at {wrong}, "
                f"max residual {_fmt(resid)}"), {"max_residual": resid, "failures": len(bad) + len(wrong)}


@criterion(3, "radial monotonicity")
def _monotone(session):
    table = session.radial_solutions()
    worst_du, worst_dl, bad = -math.inf, math.inf, []
    for k, res in table.items():
        if isinstance(res, Exception):
            bad.append(k)
            continue
        rep = check_monotonicity(res.profile, tol=1e-10)
        if not (rep.u_strictly_decreasing and rep.lap_strictly_increasing):
            bad.append(k)
        worst_du = max(worst_du, rep.worst_du)
        worst_dl = min(worst_dl, rep.worst_dlap)
    return not bad, f"violations at {bad}, max u'={_fmt(worst_du)}, min (Δu)'={_fmt(worst_dl)}", {
        "max_du": worst_du, "min_dlap": worst_dl}


@criterion(4, "scale invariance between R = 1 and R = 2")
def _scaling(session):
    worst = 0.0
    for p in (2.0, 3.0):
        for s in (0.0, 1.0, 2.0):
            one = solve_radial(SteklovParams(p, s, 1.0))
            two = solve_radial(SteklovParams(p, s, 2.0))
            # both profiles use the same node count, so node i sits at r_i and 2 r_i
            expected = 2.0 ** (-4.0 / (p - 1.0)) * one.profile.u
            err = np.max(np.abs(two.profile.u - expected)) / np.max(np.abs(two.profile.u))
            worst = max(worst, float(err))
    return worst <= 1e-8, f"max relative deviation {_fmt(worst)}", {"max_relative_error": worst}


@criterion(5, "deficiency inequality")
def _deficiency(session):
    table = session.radial_solutions()
    min_f, worst_end, bad = math.inf, 0.0, []
    for k, res in table.items():
        if isinstance(res, Exception):
            bad.append(k)
            continue
        d = deficiency_profile(res)
        min_f = min(min_f, d.min_f)
        worst_end = max(worst_end, abs(d.f_at_one))
        if d.min_f < -1e-8 or abs(d.f_at_one) > 1e-8:
            bad.append(k)
    return not bad, f"min f={_fmt(min_f)}, max |f(1)|={_fmt(worst_end)}, failures {bad}", {
        "min_f": min_f, "max_f_at_one": worst_end}


@criterion(6, "shooting and spectral ground states agree")
def _cross(session):
    worst = 0.0
    for p, s in ((3.0, 1.0), (3.0, 2.0), (2.0, 5.0)):
        params = SteklovParams(p, s)
        shot = solve_radial(params)
        g = ground_state(params, session.basis, DescentOptions(seed=session.seed))
        r = shot.profile.r
        diff = np.max(np.abs(evaluate(g.field, r, np.zeros_like(r)) - shot.profile.u))
        worst = max(worst, float(diff))
    return worst <= 1e-4, f"max |u_spectral - u_shooting| along θ=0: {_fmt(worst)}", {"max_abs_diff": worst}


@criterion(7, "symmetry from asymmetric seeds")
def _symmetry(session):
    worst_frac, worst_min, ok = 1.0, math.inf, True
    for s in (1.0, 2.0, 5.0):
        for p in (2.0, 3.0):
            g = ground_state(SteklovParams(p, s), session.basis,
                             DescentOptions(seed=session.seed, init="asymmetric"))
            worst_frac = min(worst_frac, g.radial_fraction)
            worst_min = min(worst_min, g.min_value)
            ok &= g.converged and g.radial_fraction >= 1 - 1e-6 and g.min_value > 0
    return ok, f"min radial fraction {worst_frac:.12f}, min u {_fmt(worst_min)}", {
        "min_radial_fraction": worst_frac, "min_value": worst_min}


def random_sources(seed: int, count: int = 20, degree: int = 4):
    """Squares of random trigonometric polynomials: smooth and nonnegative."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        amp = rng.standard_normal((degree, degree))
        phase = rng.uniform(0, 2 * np.pi, degree)

        def f(r, t, amp=amp, phase=phase):
            cosines = [np.cos(k * np.pi * r) for k in range(degree)]
            s = np.zeros(np.broadcast(r, t).shape)
            for m in range(degree):
                radial = sum(amp[m, k] * cosines[k] for k in range(degree))
                s += radial * np.cos(m * t + phase[m])
            return s * s
        out.append(f)
    return out


@criterion(8, "Talenti comparison")
def _talenti(session):
    basis = session.basis
    cells = PolarCells.graded(basis.R)
    excess = -math.inf
    norm_err = 0.0
    for f in random_sources(session.seed):
        rep = talenti_compare(f, basis, cells)
        excess = max(excess, rep.max_excess)
        u = cells.sample_field(rep.u)
        us = schwarz_rearrange(u)
        norm_err = max(norm_err, abs(u.lp_norm(4.0) - us.lp_norm(4.0)) / u.lp_norm(4.0))
    one = talenti_compare(lambda r, t: np.ones_like(r), basis, cells)
    gap = max(abs(one.max_excess), abs(one.max_gap))
    ok = excess <= 1e-6 and gap <= 1e-6 and norm_err <= 1e-6
    return ok, (f"max(u*-v) over random sources {_fmt(excess)}, f=1 gap {_fmt(gap)}, "
                f"norm mismatch {_fmt(norm_err)}"), {"max_excess": excess, "equality_gap": gap,
                                                     "norm_error": norm_err}


@criterion(9, "boundary comparison chain")
def _chain(session):
    params = SteklovParams(3.0, 2.0)
    g = ground_state(params, session.basis, DescentOptions(seed=session.seed))
    rep = boundary_chain_check(g, params)
    ok = rep.holds(1e-6)
    parts = ", ".join(f"{x.name} slack {_fmt(x.slack)}" for x in rep.relations())
    return ok, parts, {x.name: x.slack for x in rep.relations()}


class _PolarPolynomial:
    """Radial test function given by u_r and u_rr as callables of r."""

    def __init__(self, du, d2u):
        self.du, self.d2u = du, d2u

    def polar_derivatives(self, r, theta):
        r = np.asarray(r, dtype=float)[:, None]
        z = np.zeros((r.shape[0], np.size(theta)))
        return {"u_r": self.du(r) + z, "u_rr": self.d2u(r) + z, "u_t": z, "u_tt": z, "u_rt": z}


@criterion(10, "Hessian-determinant identity")
def _hessian(session):
    basis = session.basis
    rng = np.random.default_rng(session.seed)
    worst = 0.0
    for _ in range(10):
        c = np.zeros(basis.shape)
        c[:5, :6] = rng.standard_normal((5, 6))
        worst = max(worst, abs(hessian_identity_check(SpectralField(basis, c)).difference))
    quad = hessian_identity_check(_PolarPolynomial(lambda r: -2 * r, lambda r: -2 + 0 * r), R=1.0)
    bump = hessian_identity_check(_PolarPolynomial(lambda r: -4 * r * (1 - r ** 2),
                                                   lambda r: -4 + 12 * r ** 2), R=1.0)
    analytic = max(abs(quad.interior - 4 * np.pi), abs(quad.boundary - 4 * np.pi),
                   abs(bump.interior), abs(bump.boundary))
    ok = worst <= 1e-6 and analytic <= 1e-6
    return ok, f"random fields max |difference| {_fmt(worst)}, analytic cases {_fmt(analytic)}", {
        "random_max": worst, "analytic_max": analytic}


@criterion(11, "limaçon geometry")
def _geometry(session):
    flags = {}
    for a in (0.0, 0.1, 0.2, 0.25, 0.3, 0.4):
        flags[a] = is_convex(LimaconDomain(a)).convex == (a <= 0.25)
    k_quarter = abs(float(curvature(LimaconDomain(0.25), np.pi)))
    theta = 2 * np.pi * np.arange(1024) / 1024
    param_err = 0.0
    for a in np.linspace(0.0, 0.45, 10):
        d = LimaconDomain(a)
        w = d.h(np.exp(1j * theta))
        x, y = boundary_point(d, theta)
        param_err = max(param_err, float(np.max(np.abs(w - (x + 1j * y)))))
    ok = all(flags.values()) and k_quarter <= 1e-8 and param_err <= 1e-12
    wrong = [a for a, f in flags.items() if not f]
    return ok, (f"convexity mismatches {wrong}, |κ(π)| at a=1/4 {_fmt(k_quarter)}, "
                f"parametrization gap {_fmt(param_err)}"), {"kappa_quarter": k_quarter,
                                                            "param_error": param_err}


@criterion(12, "positivity on a nonconvex limaçon")
def _limacon(session):
    basis = session.basis
    opts = DescentOptions(seed=session.seed)
    dom = LimaconDomain(0.3)
    thr = steklov_threshold(dom)
    ratios = {}
    for s in (1.0, 2.0):
        g = limacon_ground_state(dom, SteklovParams(3.0, s), basis, opts, thr)
        ratios[s] = g.min_value / g.max_abs
    disc = ground_state(SteklovParams(3.0, 1.0), basis, opts).energy
    pulled = limacon_ground_state(LimaconDomain(0.0), SteklovParams(3.0, 1.0), basis, opts).energy
    gap = abs(disc - pulled) / abs(disc)
    ok = all(r >= -1e-6 for r in ratios.values()) and gap <= 1e-8
    return ok, (f"ν*(0.3)={thr.nu_star:.6f}, min u/max|u| at σ=1,2: "
                f"{_fmt(ratios[1.0])}, {_fmt(ratios[2.0])}, a=0 energy gap {_fmt(gap)}"), {
        "nu_star": thr.nu_star, "ratio_sigma1": ratios[1.0], "ratio_sigma2": ratios[2.0],
        "energy_gap": gap}


@criterion(13, "σ-trends of ground states")
def _trends(session):
    sigmas = (-0.9, -0.5, 0.0, 0.5)
    opts = DescentOptions(seed=session.seed)
    peaks, norms = [], []
    for s in sigmas:
        peaks.append(ground_state(SteklovParams(0.5, s), session.basis, opts).max_abs)
        g = ground_state(SteklovParams(3.0, s), session.basis, opts)
        norms.append(assemble_hsigma_form(session.basis, s).value(g.field.coeffs))
    dec = bool(np.all(np.diff(peaks) < 0))
    inc = bool(np.all(np.diff(norms) > 0))
    return dec and inc, (f"p=0.5 max|u| decreasing: {dec}, p=3 H_σ norm increasing: {inc}"), {
        "peaks": peaks, "norms": norms}


@criterion(14, "determinism of verify-all")
def _determinism(session):
    from .lab.config import ExperimentConfig
    from .lab.report import write_report
    from .lab.runner import run_experiment

    cfg = ExperimentConfig(kind="verify-all", seed=session.seed, criteria=(1, 10, 11))
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            out = Path(tmp) / f"run{i}"
            report = run_experiment(cfg)
            write_report(report, out, "csv")
            write_report(report, out, "json")
            blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())
                          if p.name != "timings.json"})
    same = blobs[0] == blobs[1]
    return same, f"two runs of criteria 1, 10, 11 wrote identical files: {same}", {}


def criterion_ids():
    return sorted(_REGISTRY)


def criterion_title(cid: int) -> str:
    return _REGISTRY[cid][0]


def run_criterion(cid: int, session: VerificationSession | None = None) -> CriterionResult:
    session = session or VerificationSession()
    title, fn = _REGISTRY[cid]
    try:
        ok, detail, metrics = fn(session)
    except PlatelabError as exc:
        ok, detail, metrics = False, f"{type(exc).__name__}: {exc}", {}
    return CriterionResult(cid, title, bool(ok), detail, metrics)


def run_criteria(ids=None, seed: int = 0):
    session = VerificationSession(seed)
    return [run_criterion(i, session) for i in (ids or criterion_ids())]
