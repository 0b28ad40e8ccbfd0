"""Command-line driver: ``platelab <experiment> [options]``.

Exit codes: 0 when every record passes, 1 when at least one check fails or
errors, 2 for configuration problems.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import KINDS, ConfigError, ExperimentConfig, parse_config, validate_config
from .report import ReportWriteError, write_report
from .runner import run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _float_list(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="platelab", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=KINDS)
    ap.add_argument("--config", metavar="PATH", help="INI experiment file")
    ap.add_argument("--out", metavar="DIR", help="output directory (PLATELAB_OUT takes precedence)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--p", type=_float_list, help="exponents, e.g. 2,3")
    ap.add_argument("--sigma", type=_float_list, help="boundary parameters, e.g. -0.5,1,2")
    ap.add_argument("--R", type=_float_list, help="disc radii")
    ap.add_argument("--a", type=_float_list, help="limaçon parameters")
    ap.add_argument("--criteria", type=_int_list, help="verify-all subset, e.g. 1,11")
    ap.add_argument("--quiet", action="store_true")
    return ap


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = parse_config(args.config)
        if cfg.kind != args.experiment:
            raise ConfigError(f"config describes {cfg.kind!r} but {args.experiment!r} was requested")
    else:
        cfg = ExperimentConfig(kind=args.experiment)
    overrides = {k: getattr(args, k) for k in ("seed", "format", "jobs", "p", "sigma", "R", "a",
                                               "criteria") if getattr(args, k) is not None}
    out = os.environ.get("PLATELAB_OUT") or args.out
    if out:
        overrides["out"] = out
    return validate_config(dataclasses.replace(cfg, **overrides))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = run_experiment(cfg)
    try:
        paths = write_report(report, cfg.out, cfg.format)
    except ReportWriteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    if not args.quiet:
        for rec in report.records:
            detail = rec["error"] or ", ".join(f"{k}={v}" for k, v in rec["inputs"].items())
            if rec["task"] == "verify":
                detail = f"criterion {rec['inputs']['criterion']}: {rec['outputs']['detail']}"
            print(f"[{rec['status'].upper()}] {detail}")
        print(f"{len(report.records)} records, {len(report.failures())} not passing; "
              f"wrote {paths[0].parent}")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
