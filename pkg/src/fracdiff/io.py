"""CSV and JSON serialisation with bitwise round-trips.

Fields are written as ``t,x,u`` (``t,x,y,u`` in 2D), time-outer, LF line
endings, floats in shortest round-trip form (``repr``). JSON output uses
sorted keys, UTF-8 and a trailing newline, so equal data give equal bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .solvers import Field

__all__ = ["dumps_json", "read_field_csv", "read_signal_csv", "write_field_csv", "write_json", "write_table_csv"]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_table_csv(path: Path | str, header: list[str], rows) -> None:
    """Write rows of numbers (or strings) with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def write_field_csv(path: Path | str, u: Field) -> None:
    """Write a field as ``t,x,u`` rows (``t,x,y,u`` in 2D), time-outer."""
    pts = u.grid.points
    axes = ["x", "y"][: u.grid.dim]
    ts = u.tgrid.nodes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *axes, "u"])
        for k, t in enumerate(ts):
            tk = _fmt(t)
            for i in range(pts.shape[0]):
                w.writerow([tk, *(_fmt(c) for c in pts[i]), _fmt(u.values[k, i])])


def read_field_csv(path: Path | str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a field CSV back.

    Returns:
        ``(t, points, values)`` with ``t`` of shape ``(N+1,)``, ``points`` of
        shape ``(n, dim)`` and ``values`` of shape ``(N+1, n)``.

    Raises:
        ConfigError: malformed header or ragged time blocks.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t" or rows[0][-1] != "u" or len(rows[0]) not in (3, 4):
        raise ConfigError("expected header t,x,u or t,x,y,u", field=str(path))
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    t_all = data[:, 0]
    starts = np.flatnonzero(np.r_[True, t_all[1:] != t_all[:-1]])
    n = starts[1] - starts[0] if starts.size > 1 else data.shape[0]
    if data.shape[0] != n * starts.size:
        raise ConfigError("time blocks have different sizes", field=str(path))
    block = data.reshape(starts.size, n, -1)
    return block[:, 0, 0].copy(), block[0, :, 1:-1].copy(), block[:, :, -1].copy()


def read_signal_csv(path: Path | str) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``t,<name>`` CSV; returns ``(t, y)``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read signal: {exc}") from None
    if not rows or len(rows[0]) != 2 or rows[0][0] != "t":
        raise ConfigError("expected a header 't,<name>' and two columns", field=str(path))
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r])
    except ValueError as exc:
        raise ConfigError(f"bad number: {exc}", field=str(path)) from None
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError("expected two numeric columns", field=str(path))
    return data[:, 0], data[:, 1]


def dumps_json(obj: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: Path | str, obj: Any) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))
