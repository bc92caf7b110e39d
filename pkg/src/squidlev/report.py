"""Structured output: atomic CSV and JSON report writers plus the schema.

Every command emits the same result twice: a CSV table for plotting tools
and a JSON report for programmatic consumers. Writes go through a temp file
and rename so a crashed run never leaves a half-written artifact, and no
output embeds wall-clock time, so identical inputs give byte-identical
files.

Report schema (``squidlev-report/1``)::

    {
      "schema":  "squidlev-report/1",
      "command": "<subcommand>",
      "version": "<package version>",
      "inputs":  { scenario path, seed, digest, ... },   # JSON scalars
      "results": { ... },                                # finite numbers,
      "tables":  { name: {"columns": [...], "rows": [[...], ...]}, ... }
      "figures": [ "file.png", ... ]                     # optional
    }

``validate_report`` enforces exactly this shape and is run on every report
the package writes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

REPORT_SCHEMA = "squidlev-report/1"

__all__ = ["REPORT_SCHEMA", "atomic_write_text", "write_csv", "write_report",
           "validate_report", "read_timeseries_csv", "write_timeseries_csv"]


def atomic_write_text(path, text: str) -> Path:
    """Write text to ``path`` via a same-directory temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(path, columns, rows, meta: dict = None) -> Path:
    """Write a CSV table with an optional ``# key = value`` header block."""
    lines = []
    for key in sorted(meta or {}):
        lines.append(f"# {key} = {_format_cell((meta or {})[key])}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    text = ("\n".join(lines) + "\n" if lines else "") + buf.getvalue()
    return atomic_write_text(path, text)


def _jsonable(value):
    """Restrict values to JSON scalars with finite numbers."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value in report: {v!r}")
        return v
    if isinstance(value, str) or value is None:
        return value
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    raise TypeError(f"cannot put {type(value).__name__} in a report")


def write_report(path, command: str, version: str, inputs: dict,
                 results: dict, tables: dict = None,
                 figures: list = None) -> Path:
    """Assemble, validate, and atomically write one JSON report."""
    doc = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "version": version,
        "inputs": _jsonable(inputs),
        "results": _jsonable(results),
    }
    if tables:
        doc["tables"] = {
            name: {"columns": list(map(str, cols)), "rows": _jsonable(rows)}
            for name, (cols, rows) in tables.items()
        }
    if figures:
        doc["figures"] = [str(f) for f in figures]
    validate_report(doc)
    return atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(f"report schema violation: {msg}")


def _scalars_only(node, where: str) -> None:
    if isinstance(node, dict):
        for k, v in node.items():
            _check(isinstance(k, str), f"non-string key under {where}")
            _scalars_only(v, f"{where}.{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _scalars_only(v, f"{where}[{i}]")
    elif isinstance(node, float):
        _check(math.isfinite(node), f"non-finite number at {where}")
    else:
        _check(node is None or isinstance(node, (str, int, bool)),
               f"unexpected type {type(node).__name__} at {where}")


def validate_report(doc) -> None:
    """Raise ValueError unless ``doc`` conforms to ``squidlev-report/1``."""
    _check(isinstance(doc, dict), "report must be an object")
    allowed = {"schema", "command", "version", "inputs", "results",
               "tables", "figures"}
    _check(set(doc) <= allowed, f"unknown top-level keys {set(doc) - allowed}")
    for key in ("schema", "command", "version", "inputs", "results"):
        _check(key in doc, f"missing required key `{key}`")
    _check(doc["schema"] == REPORT_SCHEMA,
           f"schema must be {REPORT_SCHEMA!r}, got {doc['schema']!r}")
    _check(isinstance(doc["command"], str) and doc["command"],
           "command must be a nonempty string")
    _check(isinstance(doc["version"], str), "version must be a string")
    _check(isinstance(doc["inputs"], dict), "inputs must be an object")
    _check(isinstance(doc["results"], dict), "results must be an object")
    _scalars_only(doc["inputs"], "inputs")
    _scalars_only(doc["results"], "results")
    for name, table in (doc.get("tables") or {}).items():
        _check(isinstance(table, dict) and set(table) == {"columns", "rows"},
               f"table `{name}` needs exactly columns and rows")
        cols = table["columns"]
        _check(isinstance(cols, list) and all(isinstance(c, str) for c in cols),
               f"table `{name}` columns must be strings")
        for i, row in enumerate(table["rows"]):
            _check(isinstance(row, list) and len(row) == len(cols),
                   f"table `{name}` row {i} width != {len(cols)}")
            _scalars_only(row, f"tables.{name}.rows[{i}]")
    figures = doc.get("figures", [])
    _check(isinstance(figures, list) and all(isinstance(f, str) for f in figures),
           "figures must be a list of file names")


def write_timeseries_csv(path, series_map: dict, meta: dict = None) -> Path:
    """Persist aligned time series as ``t,<name>,...`` columns."""
    names = list(series_map)
    first = series_map[names[0]]
    for name in names[1:]:
        s = series_map[name]
        if len(s) != len(first) or s.dt != first.dt:
            raise ValueError("all series in one file must share a timebase")
    merged = dict(meta or {})
    merged.setdefault("dt_s", first.dt)
    rows = np.column_stack([first.t] + [series_map[n].values for n in names])
    return write_csv(path, ["t"] + names, rows, merged)


def read_timeseries_csv(path):
    """Read a file written by :func:`write_timeseries_csv`.

    Returns ``(meta, columns, data)`` with data as a 2-d float array.
    """
    meta = {}
    header = None
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, _, val = line[1:].partition("=")
                    meta[key.strip()] = val.strip()
                continue
            parts = next(csv.reader([line]))
            if header is None:
                header = parts
            else:
                rows.append([float(p) for p in parts])
    if header is None or not rows:
        raise ValueError(f"no data rows in {path}")
    return meta, header, np.asarray(rows, dtype=float)
