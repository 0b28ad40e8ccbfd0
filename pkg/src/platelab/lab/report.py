"""Report files: report.csv / report.json, plot-ready data tables, timings and a manifest."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from ..errors import PlatelabError
from .runner import RunReport

COLUMNS = {
    "shoot": ["p", "sigma", "R", "beta_star", "r0", "lambda", "u0", "residual", "root_count"],
    "sweep-sigma": ["p", "sigma", "R", "beta_star", "r0", "lambda", "u0", "residual", "root_count"],
    "ground-state": ["p", "sigma", "R", "energy", "nehari_t", "min_value", "max_abs",
                     "radial_fraction", "iterations", "converged", "status", "error"],
    "steklov-eig": ["R", "m", "a", "delta", "nu_star", "status", "error"],
    "talenti": ["source", "max_excess", "max_gap", "status", "error"],
    "limacon": ["a", "p", "sigma", "convex", "min_curvature", "nu_star", "energy", "min_value",
                "max_abs", "status", "error"],
    "verify-all": ["criterion", "title", "passed", "detail"],
}


class ReportWriteError(PlatelabError):
    pass


def format_value(v) -> str:
    """Shortest round-trip text for floats; lower-case booleans; empty for missing."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _row(record, columns):
    flat = {**record["checks"], **record["inputs"], **record["outputs"],
            "status": record["status"], "error": record["error"]}
    return [format_value(flat.get(c)) for c in columns]


def report_csv(report: RunReport) -> str:
    columns = COLUMNS[report.kind]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in report.records:
        w.writerow(_row(rec, columns))
    return buf.getvalue()


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_json_safe(v) for v in x]
    return x


def report_json(report: RunReport) -> str:
    return json.dumps(_json_safe(report.to_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(float(v)) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise ReportWriteError(f"cannot write {path}: {exc.strerror}") from exc


def write_report(report: RunReport, out_dir, fmt: str = "csv") -> list:
    """Write the report and its data files; returns the paths written.

    ``manifest.json`` lists every artifact in the directory with the config
    hash that produced it; wall-clock timings go to ``timings.json`` so the
    other files are reproducible byte for byte.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportWriteError(f"cannot create output directory {out}: {exc.strerror}") from exc
    if fmt not in ("csv", "json"):
        raise ReportWriteError(f"unknown report format {fmt!r}")

    written = {}
    name = f"report.{fmt}"
    _write(out / name, report_csv(report) if fmt == "csv" else report_json(report))
    written[name] = "report"
    for stem, (columns, rows) in sorted(report.data.items()):
        _write(out / f"{stem}.csv", table_csv(columns, rows))
        written[f"{stem}.csv"] = "data"
    _write(out / "timings.json", json.dumps(
        {"seconds": [float(t) for t in report.timings]}, indent=2) + "\n")
    written["timings.json"] = "timings"

    manifest_path = out / "manifest.json"
    entries = {}
    if manifest_path.exists():
        try:
            for e in json.loads(manifest_path.read_text())["artifacts"]:
                entries[e["path"]] = e
        except (ValueError, KeyError):
            entries = {}
    for path, role in written.items():
        entries[path] = {"path": path, "role": role, "kind": report.kind,
                         "config_hash": report.config_hash}
    manifest = {"schema_version": report.schema_version,
                "artifacts": [entries[k] for k in sorted(entries)]}
    _write(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return [out / p for p in sorted(written)] + [manifest_path]


def read_report(path) -> RunReport:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ReportWriteError(f"cannot read {path}: {exc.strerror}") from exc
    return RunReport.from_dict(data)
