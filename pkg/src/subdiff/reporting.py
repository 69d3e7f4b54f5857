"""Artifact writers: norm tables, field snapshots, JSON run reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, is_dataclass
from pathlib import Path

import numpy as np

from .diagnostics import NormSeries
from .solver import Trajectory
from .spatial import SpatialGrid

__all__ = [
    "RunReport",
    "jsonable",
    "write_report",
    "write_norms_tsv",
    "write_snapshot",
    "snapshot_path",
]

NORMS_HEADER = "t\tL2\tsup\tW\tV_envelope"


@dataclass
class RunReport:
    label: str
    passed: bool
    certificates: dict
    solver: dict
    timings: dict
    config_text: str
    failure: dict | None = None


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and dataclasses for json."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    # bool before int: Python bool is an int subclass
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def write_report(path, report: RunReport) -> None:
    Path(path).write_text(json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n")


def write_norms_tsv(path, series: NormSeries, envelope=None) -> None:
    """Norm history as TSV with columns t, L2, sup, W, V_envelope.

    ``envelope`` is the decay-certificate envelope at the same nodes; when no
    decay certificate ran the column holds nan.
    """
    n = series.times.size
    env = np.full(n, np.nan) if envelope is None else np.asarray(envelope, dtype=float)
    if env.shape != (n,):
        raise ValueError("envelope must hold one value per time node")
    w = series.energy
    with open(path, "w") as fh:
        fh.write(NORMS_HEADER + "\n")
        for k in range(n):
            fh.write(
                "%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n"
                % (series.times[k], series.l2[k], series.sup[k], w[k], env[k])
            )


def snapshot_path(out_dir, index: int) -> Path:
    return Path(out_dir) / f"snapshot_{index:03d}.txt"


def write_snapshot(path, grid: SpatialGrid, t: float, values: np.ndarray) -> None:
    """Flat field values, one per line, under a header naming the grid shape."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size != grid.n_nodes:
        raise ValueError("values do not match the grid")
    shape = " ".join(str(s) for s in grid.shape)
    with open(path, "w") as fh:
        fh.write(f"# t={t:.17g} shape={shape}\n")
        for v in values:
            fh.write("%.17g\n" % v)
