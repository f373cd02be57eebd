"""Writing experiment outputs.

``samples.csv`` holds one row per sample and ``summary.json`` the config
echo, the seed and the aggregates.  Floats are written with ``repr`` and
JSON keys keep insertion order, so identical runs give identical bytes.
"""

import csv
import json
import os
from fractions import Fraction

import numpy as np

__all__ = ["SCHEMA_VERSION", "emit", "to_jsonable"]

SCHEMA_VERSION = 1


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return x


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(x) for x in row])


def emit(cfg, result, out_dir):
    """Write samples.csv, summary.json and any extra tables into ``out_dir``."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, "samples.csv"), result.columns, result.records)
        for name, (columns, rows) in result.extra_tables.items():
            _write_csv(os.path.join(out_dir, name), columns, rows)
        summary = {
            "schema": SCHEMA_VERSION,
            "seed": cfg.seed,
            "kind": cfg.kind,
            "n": len(result.records),
            "config": cfg.raw,
            "grid": [pt.as_dict() for pt in cfg.grid],
            **result.summary,
        }
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(to_jsonable(summary), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out_dir}: {exc}") from exc
    return out_dir
