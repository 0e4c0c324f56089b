"""CSV and JSON output for trajectories and plot data.

Raw numbers are written with 17 significant digits, which is enough for
every double to read back bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .fixpoint import Trajectory


def fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".17g")


def _parse(cell: str) -> float:
    return math.nan if cell == "" else float(cell)


def coordinate_names(d: int) -> list[str]:
    return ["x"] if d == 1 else [f"x_{i + 1}" for i in range(d)]


def trajectory_rows(traj: Trajectory) -> list[list[str]]:
    d = traj.iterates.shape[1]
    header = ["t", *coordinate_names(d), "residual", "evaluations"]
    rows = [header]
    for t, point in enumerate(traj.iterates):
        res = traj.residuals[t] if t < len(traj.residuals) else None
        ev = traj.eval_counts[t] if traj.eval_counts is not None and t < len(traj.eval_counts) else None
        rows.append([str(t), *(fmt(v) for v in point), fmt(res), "" if ev is None else str(int(ev))])
    return rows


def write_rows(path: Path | str, rows: Sequence[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    return path


def write_trajectory_csv(path: Path | str, traj: Trajectory) -> Path:
    return write_rows(path, trajectory_rows(traj))


def read_trajectory_csv(path: Path | str, stop_reason: str = "max_iters") -> Trajectory:
    """Inverse of :func:`write_trajectory_csv`; the stop reason is not stored in the CSV."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = len(header) - 3
    iterates = np.array([[float(c) for c in r[1 : 1 + d]] for r in body]).reshape(len(body), d)
    residuals = np.array([_parse(r[1 + d]) for r in body])
    counts = [r[2 + d] for r in body]
    eval_counts = None if all(c == "" for c in counts) else np.array([int(c) for c in counts])
    evaluations = int(eval_counts[-1]) if eval_counts is not None and len(eval_counts) else 0
    return Trajectory(iterates, residuals, evaluations, stop_reason, eval_counts)


def write_xy_csv(path: Path | str, x: Sequence[float], y: Sequence[float]) -> Path:
    if len(x) != len(y):
        raise ValueError("x and y differ in length")
    return write_rows(path, [["x", "y"], *([fmt(a), fmt(b)] for a, b in zip(x, y))])


def emit_plot_data(path: Path | str, source) -> Path:
    """Two-column plot data from a scalar trajectory (``x = t``, ``y = x_t``) or an ``(x, y)`` pair."""
    if isinstance(source, Trajectory):
        if source.iterates.shape[1] != 1:
            raise ValueError("plot data needs a scalar trajectory")
        y = source.iterates[:, 0]
        x = np.arange(len(y), dtype=float)
    else:
        x, y = source
    if len(x) == 0:
        raise ValueError("nothing to plot")
    return write_xy_csv(path, x, y)


def read_xy_csv(path: Path | str) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows])


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    return value


def write_json(path: Path | str, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def dumps(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True)
