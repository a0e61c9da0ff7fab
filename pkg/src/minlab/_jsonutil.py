"""Deterministic JSON and CSV emission for reports.

Floats are rounded to 12 significant digits before serialization and keys
are sorted, so identical findings serialize to identical bytes.
"""

import csv
import json
import math

SIG_DIGITS = 12

CSV_COLUMNS = ("level", "t", "i", "j_or_k", "value", "lo", "hi")


def _round_float(x):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{SIG_DIGITS}g}")


def canonical(obj):
    """Copy of obj with floats rounded and containers JSON-ready."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return _round_float(obj)
    if isinstance(obj, int):
        return int(obj)
    if isinstance(obj, str):
        return obj
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [canonical(v) for v in items]
    if hasattr(obj, "item"):    # numpy scalar
        return canonical(obj.item())
    if hasattr(obj, "tolist"):  # numpy array
        return canonical(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload):
    return json.dumps(canonical(payload), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


def write_trace(path, rows):
    """Write bracket/trace rows to CSV with the fixed column layout.

    Each row is a mapping; missing columns are left empty.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_csv_cell(row.get(c)) for c in CSV_COLUMNS])


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    return v
