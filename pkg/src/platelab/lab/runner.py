"""Run experiments: expand the parameter grid, execute every point, collect records."""
from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..limacon import (LimaconDomain, boundary_curve, is_convex, limacon_ground_state,
                       steklov_threshold)
from ..radial import check_monotonicity
from ..rearrange import PolarCells, talenti_compare
from ..shooting import IntegratorOptions, ShootOptions, SteklovParams, solve_radial
from ..spectral import DescentOptions, SpectralBasis, evaluate, ground_state, steklov_eigenvalue
from .config import ExperimentConfig, validate_config

SCHEMA_VERSION = 1


@dataclass
class RunReport:
    kind: str
    config_hash: str
    seed: int
    records: list
    schema_version: int = SCHEMA_VERSION
    # wall-clock seconds per record; kept apart so reports stay reproducible
    timings: list = field(default_factory=list, compare=False)
    # plot-ready tables: file stem -> (column names, rows)
    data: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return all(r["status"] == "pass" for r in self.records)

    def failures(self):
        return [r for r in self.records if r["status"] != "pass"]

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "kind": self.kind,
                "config_hash": self.config_hash, "seed": self.seed, "records": self.records}

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(kind=d["kind"], config_hash=d["config_hash"], seed=d["seed"],
                   records=d["records"], schema_version=d["schema_version"])


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


@lru_cache(maxsize=8)
def _basis(R: float, M: int, K: int) -> SpectralBasis:
    return SpectralBasis(R=R, M=M, K=K)


def _shoot_options(solver):
    return ShootOptions(beta_lo=solver.get("beta_lo", -1e4), beta_hi=solver.get("beta_hi", -1e-3),
                        n_scan=solver.get("n_scan", 200), n_profile=solver.get("n_profile", 2001),
                        integrator=IntegratorOptions())


def _descent_options(solver, seed):
    return DescentOptions(max_iter=solver.get("max_iter", 10_000), gtol=solver.get("gtol", 1e-9),
                          seed=seed, init=solver.get("init", "random"))


def _task_shoot(inputs, solver, seed):
    res = solve_radial(SteklovParams(inputs["p"], inputs["sigma"], inputs["R"]), _shoot_options(solver))
    mono = check_monotonicity(res.profile)
    out = {"beta_star": res.beta_star, "r0": res.r0, "lambda": res.lam, "u0": res.u0,
           "residual": res.residual, "root_count": res.root_count}
    checks = {"single_sign_change": res.root_count == 1, "residual_small": res.residual <= 1e-10,
              "u_decreasing": mono.u_strictly_decreasing,
              "lap_increasing": mono.lap_strictly_increasing,
              "profile_consistent": res.profile.is_consistent()}
    pr = res.profile
    data = {"profile": (["r", "u", "du", "lap"], np.column_stack([pr.r, pr.u, pr.du, pr.lap]))}
    return out, checks, data


def _task_ground_state(inputs, solver, seed):
    params = SteklovParams(inputs["p"], inputs["sigma"], inputs["R"])
    basis = _basis(params.R, solver.get("M", 12), solver.get("K", 40))
    g = ground_state(params, basis, _descent_options(solver, seed))
    out = {"energy": g.energy, "nehari_t": g.nehari_t, "min_value": g.min_value,
           "max_abs": g.max_abs, "radial_fraction": g.radial_fraction,
           "iterations": g.iterations, "converged": g.converged, "residual": g.residual}
    checks = {"converged": g.converged}
    if params.sigma >= 1 and params.p > 1:
        checks["radial"] = g.radial_fraction >= 1 - 1e-6
        checks["positive"] = g.min_value > 0
    r = np.linspace(0.0, params.R, 257)
    data = {"ray": (["r", "u"], np.column_stack([r, evaluate(g.field, r, np.zeros_like(r))]))}
    return out, checks, data


def _task_steklov_disc(inputs, solver, seed):
    basis = _basis(inputs["R"], solver.get("M", 12), solver.get("K", 40))
    m = inputs["m"]
    delta = steklov_eigenvalue(basis, m=m).per_mode[m]
    out = {"delta": delta, "nu_star": None}
    return out, {"closed_form": abs(delta - (2 * m + 2)) <= 1e-6}, {}


def _task_steklov_limacon(inputs, solver, seed):
    thr = steklov_threshold(LimaconDomain(inputs["a"]))
    out = {"delta": thr.delta, "nu_star": thr.nu_star}
    return out, {"below_one": thr.nu_star < 1}, {}


def _task_talenti(inputs, solver, seed):
    from ..verify import random_sources

    basis = _basis(1.0, solver.get("M", 12), solver.get("K", 40))
    src = inputs["source"]
    if src == "constant":
        f = lambda r, t: np.ones_like(r)  # noqa: E731
    else:
        f = random_sources(seed, src + 1)[src]
    rep = talenti_compare(f, basis, PolarCells.graded(1.0))
    out = {"max_excess": rep.max_excess, "max_gap": rep.max_gap}
    checks = {"comparison": rep.max_excess <= 1e-6}
    if src == "constant":
        checks["equality"] = abs(rep.max_gap) <= 1e-6
    sl = slice(None, None, 16)
    data = {"talenti": (["r", "u_star", "v"],
                        np.column_stack([rep.radii[sl], rep.u_star[sl], rep.v[sl]]))}
    return out, checks, data


def _task_limacon(inputs, solver, seed):
    dom = LimaconDomain(inputs["a"])
    conv = is_convex(dom)
    out = {"convex": conv.convex, "min_curvature": conv.min_curvature}
    checks = {"convexity_law": conv.convex == (dom.a <= 0.25)}
    data = {"boundary": (["phi", "x", "y", "kappa"], np.column_stack(boundary_curve(dom)))}
    if "p" in inputs:
        thr = steklov_threshold(dom)
        basis = _basis(1.0, solver.get("M", 12), solver.get("K", 40))
        g = limacon_ground_state(dom, SteklovParams(inputs["p"], inputs["sigma"]), basis,
                                 _descent_options(solver, seed), thr)
        out.update({"nu_star": thr.nu_star, "energy": g.energy, "min_value": g.min_value,
                    "max_abs": g.max_abs, "converged": g.converged})
        checks["converged"] = g.converged
        checks["positive"] = g.min_value >= -1e-6 * g.max_abs
    return out, checks, data


_TASKS = {"shoot": _task_shoot, "sweep-sigma": _task_shoot, "ground-state": _task_ground_state,
          "steklov-disc": _task_steklov_disc, "steklov-limacon": _task_steklov_limacon,
          "talenti": _task_talenti, "limacon": _task_limacon}


def expand_grid(cfg: ExperimentConfig):
    """(task name, inputs) pairs in grid order."""
    k = cfg.kind
    if k in ("shoot", "sweep-sigma", "ground-state"):
        return [(k, {"p": p, "sigma": s, "R": R})
                for p, s, R in itertools.product(cfg.p, cfg.sigma, cfg.R)]
    if k == "steklov-eig":
        modes = cfg.solver.get("modes", 6)
        tasks = [("steklov-disc", {"R": R, "m": m}) for R in cfg.R for m in range(modes)]
        return tasks + [("steklov-limacon", {"a": a}) for a in cfg.a]
    if k == "talenti":
        n = cfg.solver.get("n_sources", 20)
        return [("talenti", {"source": i}) for i in range(n)] + [("talenti", {"source": "constant"})]
    if k == "limacon":
        if cfg.p and cfg.sigma:
            return [("limacon", {"a": a, "p": p, "sigma": s})
                    for a, p, s in itertools.product(cfg.a, cfg.p, cfg.sigma)]
        return [("limacon", {"a": a}) for a in cfg.a]
    raise ValueError(f"no grid for kind {k!r}")


def _run_point(args):
    index, task, inputs, solver, seed, chash = args
    t0 = time.perf_counter()
    record = {"index": index, "task": task, "inputs": inputs, "outputs": {}, "checks": {},
              "status": "pass", "error": None, "config_hash": chash}
    data = {}
    try:
        out, checks, data = _TASKS[task](inputs, solver, seed)
        record["outputs"], record["checks"] = out, checks
        if not all(checks.values()):
            record["status"] = "fail"
    except Exception as exc:  # a failing point must not stop its siblings
        record["status"] = "error"
        record["error"] = f"{type(exc).__name__}: {exc}"
    return _clean(record), data, time.perf_counter() - t0


def _run_verify(cfg: ExperimentConfig, chash: str):
    from ..verify import VerificationSession, criterion_ids, run_criterion

    session = VerificationSession(cfg.seed)
    records, timings = [], []
    for i, cid in enumerate(cfg.criteria or criterion_ids()):
        t0 = time.perf_counter()
        res = run_criterion(cid, session)
        records.append(_clean({"index": i, "task": "verify", "inputs": {"criterion": cid},
                               "outputs": {"title": res.title, "detail": res.detail,
                                           "metrics": res.metrics},
                               "checks": {"passed": res.passed},
                               "status": "pass" if res.passed else "fail", "error": None,
                               "config_hash": chash}))
        timings.append(time.perf_counter() - t0)
    return records, timings


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> RunReport:
    validate_config(cfg)
    chash = cfg.config_hash()
    if cfg.kind == "verify-all":
        records, timings = _run_verify(cfg, chash)
        return RunReport(cfg.kind, chash, cfg.seed, records, timings=timings)

    tasks = [(i, t, inp, dict(cfg.solver), cfg.seed, chash)
             for i, (t, inp) in enumerate(expand_grid(cfg))]
    jobs = jobs or cfg.jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]

    records, timings, data = [], [], {}
    for record, tables, elapsed in results:
        records.append(record)
        timings.append(elapsed)
        for name, table in tables.items():
            stem = f"boundary_a{record['inputs']['a']!r}" if name == "boundary" else \
                f"{name}_{record['index']:03d}"
            data.setdefault(stem, table)
    return RunReport(cfg.kind, chash, cfg.seed, records, timings=timings, data=data)
