"""CSV and JSON emission for trajectories, reduced paths and reports.

CSV files use ``,`` separators, ``.`` decimals, LF line endings and the
shortest representation that round-trips a double exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import UsageError
from .reduced import ReducedPath
from .systems import STATE_NAMES, Trajectory


def format_float(x: float) -> str:
    return repr(float(x))


def write_rows(path, header, times, states) -> None:
    lines = [",".join(header)]
    for t, row in zip(times, states):
        lines.append(",".join([format_float(t)] + [format_float(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_trajectory(path, traj: Trajectory) -> None:
    write_rows(path, ("t",) + STATE_NAMES[traj.tag], traj.times, traj.states)


def write_path(path, rp: ReducedPath) -> None:
    write_rows(path, ("t",) + STATE_NAMES["reduced_sl2"], rp.times, rp.entries)


def read_rows(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise UsageError(f"{path}: empty CSV")
    header = tuple(h.strip() for h in lines[0].split(","))
    if header[0] != "t":
        raise UsageError(f"{path}: first column must be t")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if data.size == 0:
        data = np.zeros((0, len(header)))
    if data.shape[1] != len(header):
        raise UsageError(f"{path}: row width does not match header")
    return header, data


def _grid_spacing(times) -> float:
    return float(times[1] - times[0]) if len(times) > 1 else 0.0


def read_trajectory(path, tag: str) -> Trajectory:
    header, data = read_rows(path)
    expected = ("t",) + STATE_NAMES[tag]
    if header != expected:
        raise UsageError(f"{path}: header {','.join(header)} does not match {','.join(expected)}")
    times = data[:, 0]
    return Trajectory(tag, times, data[:, 1:], float(times[0]), float(times[-1]), _grid_spacing(times),
                      {"solver": "csv", "source": str(path)})


def read_path(path) -> ReducedPath:
    header, data = read_rows(path)
    if header != ("t",) + STATE_NAMES["reduced_sl2"]:
        raise UsageError(f"{path}: not a reduced-path CSV")
    return ReducedPath(data[:, 0], data[:, 1:], "csv", {"source": str(path)})


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8", newline="\n")
