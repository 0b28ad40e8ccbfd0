"""Experiment configuration: INI-style files with [experiment], [grid], [solver] and [verify]."""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import PlatelabError

KINDS = ("shoot", "sweep-sigma", "ground-state", "steklov-eig", "talenti", "limacon", "verify-all")
FORMATS = ("csv", "json")
# largest |sigma| accepted; the default residual scan is only known to bracket below this
SIGMA_MAX = 1e3

_SECTIONS = {
    "experiment": {"kind", "seed", "out", "format", "jobs"},
    "grid": {"p", "sigma", "a", "R"},
    "solver": {"M", "K", "n_scan", "beta_lo", "beta_hi", "n_profile", "max_iter", "gtol",
               "init", "n_sources", "modes"},
    "verify": {"criteria"},
}

_SOLVER_TYPES = {"M": int, "K": int, "n_scan": int, "beta_lo": float, "beta_hi": float,
                 "n_profile": int, "max_iter": int, "gtol": float, "init": str,
                 "n_sources": int, "modes": int}


class ConfigError(PlatelabError):
    """Base class of configuration problems; the CLI maps it to exit code 2."""


class ConfigParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line, self.column = line, column


class ConfigValidationError(ConfigError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{k}: {m}" for k, m in self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    p: tuple = ()
    sigma: tuple = ()
    a: tuple = ()
    R: tuple = (1.0,)
    seed: int = 0
    out: str = "platelab-out"
    format: str = "csv"
    jobs: int = 1
    solver: dict = field(default_factory=dict)
    criteria: tuple = ()

    def canonical(self) -> dict:
        """Everything that determines the numbers; output location and job count excluded."""
        d = asdict(self)
        d.pop("out")
        d.pop("jobs")
        d["solver"] = dict(sorted(self.solver.items()))
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _column(raw_line: str) -> int:
    return len(raw_line) - len(raw_line.lstrip()) + 1


def _read(source):
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and "=" not in source and "[" not in source):
        path = Path(source)
        try:
            return path.read_text(), str(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return str(source), "<inline>"


def _parse_ini(text, name):
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=name)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError(f"{name}: key outside any section", exc.lineno, _column(exc.line)) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0]
        line = text.splitlines()[lineno - 1]
        raise ConfigParseError(f"{name}: cannot parse {line.strip()!r}", lineno, _column(line)) from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigParseError(f"{name}: {exc.message}", exc.lineno, 1) from exc
    return cp


def _floats(raw, key, violations):
    if raw is None or not raw.strip():
        return ()
    out = []
    for tok in raw.split(","):
        try:
            v = float(tok)
        except ValueError:
            violations.append((key, f"not a number: {tok.strip()!r}"))
            continue
        if not math.isfinite(v):
            violations.append((key, f"must be finite, got {tok.strip()}"))
            continue
        out.append(v)
    return tuple(out)


def _int(raw, key, violations, default):
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        violations.append((key, f"not an integer: {raw!r}"))
        return default


def _validate_grid(p, sigma, a, R, violations):
    for v in p:
        if v <= 0 or v == 1:
            violations.append(("p", f"p ∈ (0,1) ∪ (1,∞) required, got {v:g}"))
    for v in sigma:
        if v <= -1:
            violations.append(("sigma", f"σ > −1 required, got {v:g}"))
        elif v > SIGMA_MAX:
            violations.append(("sigma", f"σ ≤ {SIGMA_MAX:g} required, got {v:g}"))
    for v in a:
        if not 0 <= v < 0.5:
            violations.append(("a", f"a ∈ [0, 1/2) required, got {v:g}"))
    for v in R:
        if v <= 0:
            violations.append(("R", f"R > 0 required, got {v:g}"))


def parse_config(source) -> ExperimentConfig:
    """Parse and validate a config file path or inline INI text.

    All validation problems are collected and raised together.
    """
    text, name = _read(source)
    cp = _parse_ini(text, name)
    violations = []
    for section in cp.sections():
        if section not in _SECTIONS:
            violations.append((section, f"unknown section [{section}]"))
            continue
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                violations.append((key, f"unknown key {key!r} in [{section}]"))

    exp = cp["experiment"] if cp.has_section("experiment") else {}
    grid = cp["grid"] if cp.has_section("grid") else {}
    kind = exp.get("kind")
    if kind is None:
        violations.append(("kind", "missing [experiment] kind"))
    elif kind not in KINDS:
        violations.append(("kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}"))
    fmt = exp.get("format", "csv")
    if fmt not in FORMATS:
        violations.append(("format", f"format must be csv or json, got {fmt!r}"))
    seed = _int(exp.get("seed"), "seed", violations, 0)
    jobs = _int(exp.get("jobs"), "jobs", violations, 1)
    if jobs < 1:
        violations.append(("jobs", f"jobs ≥ 1 required, got {jobs}"))

    p = _floats(grid.get("p"), "p", violations)
    sigma = _floats(grid.get("sigma"), "sigma", violations)
    a = _floats(grid.get("a"), "a", violations)
    R = _floats(grid.get("R"), "R", violations) if "R" in grid else (1.0,)
    _validate_grid(p, sigma, a, R, violations)

    solver = {}
    if cp.has_section("solver"):
        for key, raw in cp["solver"].items():
            typ = _SOLVER_TYPES.get(key)
            if typ is None:
                continue
            try:
                solver[key] = typ(raw)
            except ValueError:
                violations.append((key, f"expected {typ.__name__}, got {raw!r}"))

    criteria = ()
    if cp.has_section("verify") and "criteria" in cp["verify"]:
        try:
            criteria = tuple(int(t) for t in cp["verify"]["criteria"].split(",") if t.strip())
        except ValueError:
            violations.append(("criteria", "criteria must be a comma-separated list of integers"))
        bad = [c for c in criteria if not 1 <= c <= 14]
        if bad:
            violations.append(("criteria", f"criteria must lie in 1..14, got {bad}"))

    if violations:
        raise ConfigValidationError(violations)
    return ExperimentConfig(kind=kind, p=p, sigma=sigma, a=a, R=R, seed=seed,
                            out=exp.get("out", "platelab-out"),
                            format=fmt, jobs=jobs, solver=solver, criteria=criteria)


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    """Re-check a programmatically built config against the same rules."""
    violations = []
    if cfg.kind not in KINDS:
        violations.append(("kind", f"unknown kind {cfg.kind!r}"))
    if cfg.format not in FORMATS:
        violations.append(("format", f"format must be csv or json, got {cfg.format!r}"))
    if cfg.jobs < 1:
        violations.append(("jobs", f"jobs ≥ 1 required, got {cfg.jobs}"))
    _validate_grid(cfg.p, cfg.sigma, cfg.a, cfg.R, violations)
    if violations:
        raise ConfigValidationError(violations)
    return cfg
