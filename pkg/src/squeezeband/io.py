"""Deterministic CSV and JSON output.

Floats are written in their shortest round-trip form (``repr``), so reading a
file back yields bit-identical doubles and reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np

from .dynamics import ConditionalTrajectory, MeasurementRecord


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ";".join(format_value(x) for x in v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(csv_text(header, rows))
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def columns_csv(path, columns: Mapping[str, Sequence]) -> Path:
    """Write equal-length columns side by side."""
    names = list(columns)
    return write_csv(path, names, zip(*(columns[n] for n in names)))


def trajectory_csv(path, traj: ConditionalTrajectory) -> Path:
    return columns_csv(
        path,
        {"t": traj.t, "mean_x": traj.mean_x, "mean_y": traj.mean_y,
         "v_x": traj.v_x, "v_y": traj.v_y, "c": traj.c},
    )


def record_csv(path, record: MeasurementRecord) -> Path:
    return columns_csv(path, {"t": record.times, "dq_x": record.dq_x, "dq_y": record.dq_y})


def estimate_csv(path, t, estimate) -> Path:
    return columns_csv(path, {"t": t, "x_est": estimate.x_est, "y_est": estimate.y_est})


def response_csv(path, response) -> Path:
    cols = {"omega": response.omega}
    for name in ("xx", "xy", "yx", "yy"):
        h = getattr(response, name)
        cols[f"re_{name}"] = h.real
        cols[f"im_{name}"] = h.imag
    return columns_csv(path, cols)


def _jsonable(v):
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no nan/inf
        return v if math.isfinite(v) else None
    return v


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(json_text(obj))
    return path
