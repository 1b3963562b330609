"""Table persistence: RFC-4180 CSV and JSON with a fixed column order."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .experiments import Table


def format_value(v) -> str:
    """Text form used in CSV cells: shortest round-trip floats, lower-case booleans, empty for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(r.get(c)) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def table_to_json(table: Table) -> str:
    doc = {
        "kind": table.kind,
        "meta": _json_value(table.meta),
        "columns": list(table.columns),
        "rows": [[_json_value(r.get(c)) for c in table.columns] for r in table.rows],
        "summary_columns": list(table.summary_columns),
        "summary": [[_json_value(r.get(c)) for c in table.summary_columns] for r in table.summary],
        "failures": list(table.failures),
    }
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def write_table(table: Table, out_dir, fmt: str = "csv") -> list[Path]:
    """Write a table into ``out_dir``; returns the written paths.

    CSV output is ``<kind>.csv`` plus ``<kind>_summary.csv`` when the table
    has a summary, and ``<kind>_meta.json`` with the configuration and seed.
    JSON output is a single ``<kind>.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = table.kind.replace("-", "_")
    if fmt == "json":
        p = out / f"{stem}.json"
        p.write_text(table_to_json(table), encoding="utf-8")
        return [p]
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    paths = [write_csv(out / f"{stem}.csv", table.columns, table.rows)]
    if table.summary_columns:
        paths.append(write_csv(out / f"{stem}_summary.csv", table.summary_columns, table.summary))
    meta = out / f"{stem}_meta.json"
    meta.write_text(json.dumps({"meta": _json_value(table.meta), "failures": table.failures}, indent=1) + "\n",
                    encoding="utf-8")
    paths.append(meta)
    return paths
