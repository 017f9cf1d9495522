"""Deterministic, atomic artifact writing."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"


class SchemaError(ValueError):
    """An artifact carries an unexpected schema version."""


def fmt(x) -> str:
    """Fixed float formatting for CSV cells."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.16e}"  # 17 significant digits round-trip every double


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj, schema: bool = True) -> Path:
    if schema and isinstance(obj, dict):
        obj = {**obj, "schema_version": SCHEMA_VERSION}
    return atomic_write_text(path, dumps(obj))


def read_json(path, check_schema: bool = True) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    if check_schema and obj.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema_version {obj.get('schema_version')!r} != {SCHEMA_VERSION!r}")
    return obj


def write_csv(path, header, rows) -> Path:
    """CSV with a leading ``# schema_version=...`` comment line."""
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path, check_schema: bool = True):
    with open(path) as fh:
        first = fh.readline().strip()
        if check_schema and first != f"# schema_version={SCHEMA_VERSION}":
            raise SchemaError(f"{path}: unexpected schema line {first!r}")
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
