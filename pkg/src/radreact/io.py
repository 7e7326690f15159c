"""Series files, sidecars and run manifests.

CSV files carry exactly one header line and floats written with ``repr``,
the shortest string that round-trips to the same double.  NaN is refused at
write time.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NumericError

__all__ = [
    "emit_series",
    "read_series",
    "write_json",
    "sha256_file",
    "RunManifest",
    "jsonable",
]


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            raise NumericError("NaN in output series")
        return repr(v)
    if isinstance(value, str):
        return value
    raise DomainError(f"unsupported CSV cell type {type(value).__name__}")


def emit_series(path, columns: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None):
    """Write ``rows`` under a single header line; optionally a ``<path>.json`` sidecar.

    All rows must have ``len(columns)`` cells.  Any NaN raises
    :class:`NumericError` before the file is touched.  Returns the path(s)
    written.
    """
    path = Path(path)
    ncol = len(columns)
    lines = []
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != ncol:
            raise DomainError(f"{path}: row {i} has {len(row)} cells, expected {ncol}")
        lines.append([_fmt(v) for v in row])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            w.writerows(lines)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    written = [path]
    if meta is not None:
        side = path.with_suffix(path.suffix + ".json")
        write_json(side, meta)
        written.append(side)
    return written


def emit_columns(path, columns: Sequence[str], arrays: Sequence, meta: dict | None = None):
    """Column-oriented convenience wrapper around :func:`emit_series`."""
    arrs = [np.asarray(a).ravel() for a in arrays]
    if len({a.size for a in arrs}) > 1:
        raise DomainError("columns differ in length")
    return emit_series(path, columns, zip(*(a.tolist() for a in arrs)), meta)


def read_series(path):
    """Read a one-header CSV; returns ``(header, [column arrays])``.

    Blank lines and lines starting with ``#`` are skipped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    rows = [r for r in csv.reader(l for l in text.splitlines() if l.strip() and not l.startswith("#"))]
    if not rows:
        raise DomainError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        return header, [np.empty(0) for _ in header]
    try:
        data = np.array([[float(c) for c in r] for r in body], dtype=float).reshape(len(body), -1)
    except ValueError as exc:
        raise DomainError(f"{path}: non-numeric data ({exc})") from exc
    if data.shape[1] != len(header):
        raise DomainError(f"{path}: header has {len(header)} names but rows have {data.shape[1]} cells")
    return header, [data[:, j] for j in range(data.shape[1])]


def jsonable(obj):
    """Recursively convert numpy scalars/arrays, tuples and paths for ``json``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            raise NumericError("NaN in JSON output")
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions():
    import numpy
    import scipy

    from . import __version__

    return {"radreact": __version__, "python": sys.version.split()[0], "numpy": numpy.__version__,
            "scipy": scipy.__version__, "platform": platform.platform()}


@dataclass
class RunManifest:
    """Record of one command invocation, written whether it succeeds or fails."""

    command: str
    config: dict
    started: float = field(default_factory=time.time)
    checks: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    status: str = "running"
    exit_code: int | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def add_output(self, path):
        self.outputs[str(path)] = sha256_file(path)

    def finish(self, exit_code, error=None):
        self.exit_code = int(exit_code)
        self.status = "ok" if exit_code == 0 else "failed"
        self.error = error

    def as_dict(self):
        return {"command": self.command, "config": self.config, "versions": _versions(),
                "wall_time_s": time.time() - self.started, "checks": self.checks,
                "outputs": self.outputs, "status": self.status, "exit_code": self.exit_code,
                "error": self.error, **({"extra": self.extra} if self.extra else {})}

    def write(self, path):
        return write_json(path, self.as_dict())
