"""Trace CSV files and raw field dumps (row-major float64 + JSON header)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def write_trace_csv(path, times, max_violation) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "max_violation"])
        for t, v in zip(times, max_violation):
            writer.writerow([repr(float(t)), repr(float(v))])
    return path


def read_trace_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["t"]) for r in rows]),
            np.array([float(r["max_violation"]) for r in rows]))


def write_field(stem, u, *, n, m, dx, dt, t=0.0, extra=None) -> tuple[Path, Path]:
    """Write ``stem.bin`` (C-order little-endian float64) and ``stem.json``."""
    stem = Path(stem)
    arr = np.ascontiguousarray(np.asarray(u, dtype="<f8"))
    bin_path = stem.with_suffix(".bin")
    json_path = stem.with_suffix(".json")
    arr.tofile(bin_path)
    header = {
        "dims": list(arr.shape),
        "dtype": "float64",
        "byte_order": "little",
        "order": "C",
        "n": int(n),
        "m": int(m),
        "dx": [float(v) for v in np.atleast_1d(dx)],
        "dt": float(dt),
        "t": float(t),
    }
    if extra:
        header.update(extra)
    json_path.write_text(json.dumps(header, indent=2))
    return bin_path, json_path


def read_field(stem):
    stem = Path(stem)
    header = json.loads(stem.with_suffix(".json").read_text())
    data = np.fromfile(stem.with_suffix(".bin"), dtype="<f8").reshape(header["dims"])
    return data, header
