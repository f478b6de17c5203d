"""Line-oriented writers: timeseries CSV (+ JSONL mirror), snapshots, audit tables."""
from __future__ import annotations

import csv
import json
import os
from importlib import metadata
from typing import Optional, Sequence

import numpy as np

from .diagnostics import FunctionalRecord
from .geometry import radius_from_volume
from .grid_state import Grid, State

SNAPSHOT_COLUMNS = ("x", "v", "u_interp", "theta", "z", "r")


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(value) -> str:
    # repr keeps every bit, so identical runs give identical files
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _header(meta: dict) -> list[str]:
    return [f"# {k}={v}" for k, v in meta.items()]


class TimeseriesWriter:
    """Streams FunctionalRecord rows to CSV and optionally to JSONL."""

    def __init__(self, path: str, meta: dict, jsonl: bool = False):
        self.path = path
        self.columns = FunctionalRecord.columns()
        self._fh = open(path, "w", newline="", encoding="utf-8")
        for line in _header(meta):
            self._fh.write(line + "\n")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(self.columns)
        self.jsonl_path = None
        self._jh = None
        if jsonl:
            self.jsonl_path = os.path.splitext(path)[0] + ".jsonl"
            self._jh = open(self.jsonl_path, "w", encoding="utf-8")
            self._jh.write(json.dumps({"meta": meta}) + "\n")
        self.rows = 0

    def write(self, rec: FunctionalRecord) -> None:
        vals = rec.values()
        self._csv.writerow([_fmt(v) for v in vals])
        if self._jh is not None:
            self._jh.write(json.dumps(dict(zip(self.columns, vals))) + "\n")
        self.rows += 1

    def close(self) -> None:
        self._fh.close()
        if self._jh is not None:
            self._jh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_timeseries(path: str) -> tuple[dict, dict]:
    """Return ``(meta, columns)`` with each column as a float array."""
    meta = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    rows = list(csv.reader(body))
    names = rows[0]
    data = np.array([[float(q) for q in r] for r in rows[1:]]) if len(rows) > 1 else np.zeros((0, len(names)))
    return meta, {n: data[:, i] for i, n in enumerate(names)}


def write_snapshot(path: str, p, grid: Grid, s: State, meta: dict) -> None:
    """One row per cell: x, v, u at the cell centre, theta, z and the centre radius."""
    rf = radius_from_volume(p, grid, s.v)
    rn_mid = 0.5 * (rf.rn[:-1] + rf.rn[1:])
    cols = (
        grid.centers,
        s.v,
        0.5 * (s.u[:-1] + s.u[1:]),
        s.theta,
        s.z,
        rn_mid ** (1.0 / p.n_dim),
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _header({"t": repr(float(s.t)), **meta}):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_COLUMNS)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def read_snapshot(path: str) -> tuple[dict, dict]:
    return read_timeseries(path)


def write_table(path: str, columns: Sequence[str], rows, meta: Optional[dict] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _header(meta or {}):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


__all__ = [
    "SNAPSHOT_COLUMNS", "TimeseriesWriter", "code_version", "read_snapshot",
    "read_timeseries", "write_json", "write_snapshot", "write_table",
]
