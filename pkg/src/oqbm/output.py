"""CSV and manifest writers. Floats are written with 17 significant digits."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .observables import SERIES_COLUMNS

FLOAT_FMT = "%.17g"
SNAPSHOT_HEADER = "x,W_plus,W_minus,C_R,C_I"
DIAGNOSTIC_HEADER = "t,peaks,gaussian_residual"
MOMENT_HEADER = "t,xnW_plus,xnW_minus,xnC_R,xnC_I"
ELIMINATION_HEADER = "gamma_eff,t,l1_distance"


def time_label(t) -> str:
    """Compact label for file names: 50.0 -> '50', 12.5 -> '12.5'."""
    return f"{float(t):.10g}"


def write_table(path, header, columns, fmt=FLOAT_FMT):
    arr = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, arr, delimiter=",", header=header, comments="", fmt=fmt)
    return path


def write_snapshot(out_dir, f):
    path = os.path.join(out_dir, f"snap_t{time_label(f.t)}.csv")
    return write_table(path, SNAPSHOT_HEADER, [f.grid.x, *f.data])


def write_series(out_dir, ts, name="timeseries.csv"):
    return write_table(os.path.join(out_dir, name), ",".join(SERIES_COLUMNS),
                       [getattr(ts, c) for c in SERIES_COLUMNS])


def write_diagnostics(out_dir, rows, name="diagnostics.csv"):
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(DIAGNOSTIC_HEADER + "\n")
        for t, peaks, res in rows:
            fh.write(f"{FLOAT_FMT % t},{int(peaks)},{FLOAT_FMT % res}\n")
    return path


def write_moments(out_dir, n, t, values):
    path = os.path.join(out_dir, f"moments_n{n}.csv")
    values = np.asarray(values, dtype=float)
    return write_table(path, MOMENT_HEADER, [t, *values.T])


def write_elimination(out_dir, rows, name="elimination_report.csv"):
    rows = np.asarray(rows, dtype=float).reshape(-1, 3)
    return write_table(os.path.join(out_dir, name), ELIMINATION_HEADER, rows.T)


def read_table(path):
    """(header names, 2-D array) of a CSV written by this module."""
    with open(path, encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return names, data


@dataclass
class RunManifest:
    name: str
    config_hash: str
    version: str
    wall_time: float
    files: list = field(default_factory=list)

    def write(self, out_dir, name="manifest.json"):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")
        return path
