"""CSV files with a JSON metadata sidecar."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .generate import Dataset


def sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def write_dataset(d: Dataset, path) -> Path:
    """Write ``x1..xp,target`` CSV rows and the metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [f"x{j + 1}" for j in range(d.p)] + ["target"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row, t in zip(d.X, d.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    meta = dict(d.meta, S0=list(d.S0), signal=d.signal.tolist())
    sidecar(path).write_text(json.dumps(meta, indent=1))
    return path


def read_dataset(path) -> Dataset:
    """Read a dataset CSV; the sidecar supplies S0 and metadata when present."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[-1] != "target":
        raise ValueError(f"{path}: last column must be 'target'")
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    X, y = data[:, :-1], data[:, -1]
    meta = {}
    S0: tuple = ()
    signal = np.full(len(y), np.nan)
    if sidecar(path).exists():
        meta = json.loads(sidecar(path).read_text())
        S0 = tuple(meta.pop("S0", ()))
        if "signal" in meta:
            signal = np.array(meta.pop("signal"), dtype=float)
    return Dataset(X, y, S0, signal, meta)
