"""Deterministic file output.

Floats in CSV files are written with 17 significant digits so float64 values
round-trip exactly.  JSON uses Python's shortest round-trip repr, sorted keys
and NaN mapped to null.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evolution import Trajectory


def format_float(x) -> str:
    return f"{float(x):.17g}"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format_float(v)


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def write_field(path: Path, values) -> Path:
    """Single column of node values, no header (readable by the "file" initial kind)."""
    path = Path(path)
    path.write_text("".join(format_float(v) + "\n" for v in values))
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_trajectory(out_dir: Path, traj: Trajectory) -> list[Path]:
    """u_<step>.csv per snapshot plus trajectory.json."""
    out_dir = Path(out_dir)
    files = []
    for step, u in zip(traj.steps, traj.snapshots):
        files.append(write_field(out_dir / f"u_{int(step)}.csv", u))
    cfg = traj.config
    index = {
        "status": traj.status,
        "guard_time": traj.guard_time,
        "mu0": traj.mu0,
        "mu1": traj.mu1,
        "n_points": cfg.n_points,
        "lambda": cfg.lam,
        "times": [float(t) for t in traj.times],
        "steps": [int(s) for s in traj.steps],
        "files": [p.name for p in files],
    }
    files.append(write_json(out_dir / "trajectory.json", index))
    return files


def load_trajectory(out_dir: Path) -> tuple[dict, np.ndarray]:
    """Index and stacked snapshots written by :func:`write_trajectory`."""
    out_dir = Path(out_dir)
    index = json.loads((out_dir / "trajectory.json").read_text())
    snaps = np.array([np.loadtxt(out_dir / name, ndmin=1) for name in index["files"]])
    return index, snaps


@dataclass
class RunManifest:
    """Record of one CLI invocation.  Wall-clock fields make it differ between runs."""

    config_hash: str | None
    command: str
    output_dir: str
    started: str
    finished: str | None = None
    status: str = "running"
    exit_code: int | None = None
    outputs: list[str] = field(default_factory=list)

    def missing_outputs(self) -> list[str]:
        base = Path(self.output_dir)
        return [name for name in self.outputs if not (base / name).exists()]

    def write(self) -> Path:
        return write_json(Path(self.output_dir) / "manifest.json", asdict(self))
