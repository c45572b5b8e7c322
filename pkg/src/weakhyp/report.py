"""Report files: one JSON summary tree plus flat CSV tables.

Floats are written with ``repr`` (shortest round-trip form, '.' separator,
independent of locale); non-finite values become the strings "inf", "-inf"
and "nan".  Nothing time- or host-dependent is written, so identical runs
give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from fractions import Fraction

import numpy as np


def clean(obj):
    """Convert a result tree into JSON-safe plain values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def cell(v) -> str:
    v = clean(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_text(tree: dict) -> str:
    return json.dumps(clean(tree), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def table_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([cell(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def emit_report(results: dict, out_dir) -> list[str]:
    """Write ``summary.json`` and one CSV per entry of ``results['tables']``.

    Tables with no rows are skipped.  Returns the written paths in order.
    """
    os.makedirs(out_dir, exist_ok=True)
    tables = results.get("tables", {})
    summary = {k: v for k, v in results.items() if k != "tables"}
    paths = []
    p = os.path.join(out_dir, "summary.json")
    write_text(p, summary_text(summary))
    paths.append(p)
    for name in sorted(tables):
        header, rows = tables[name]
        if not rows:
            continue
        p = os.path.join(out_dir, f"{name}.csv")
        write_text(p, table_text(header, rows))
        paths.append(p)
    return paths
