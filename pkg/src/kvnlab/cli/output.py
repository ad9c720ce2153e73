"""Atomic writers for the three run artifacts and a CSV reader."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .scenarios import STRING_COLUMNS

OUTPUT_ROOT_ENV = "KVNLAB_OUTPUT_ROOT"
DEFAULT_ROOT = "kvnlab-output"


def output_dir(scenario: str, configured: str | None = None) -> Path:
    """``configured`` as given, else ``$KVNLAB_OUTPUT_ROOT/<scenario>``."""
    if configured:
        return Path(configured)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_ROOT)) / scenario


def atomic_write(path: Path, text: str) -> None:
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


def format_value(v) -> str:
    """Shortest round-trip decimal for floats; text is passed through."""
    return v if isinstance(v, str) else repr(float(v))


def csv_text(columns, table: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    n = len(table[columns[0]])
    for i in range(n):
        writer.writerow([format_value(table[c][i]) for c in columns])
    return buf.getvalue()


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    table = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in body]
        table[name] = vals if name in STRING_COLUMNS else np.array([float(v) for v in vals])
    return table


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"
