"""Time-series and table files.

Two series formats are understood:

* CSV: two header lines ``# dt=<value>`` and ``# n=<value>``, then one value
  per line written with ``repr`` so a round trip is lossless;
* binary: ``b"INCSIMTS"``, a little-endian uint32 format version and four
  reserved bytes, then ``dt`` (float64), ``n`` (uint64) and the values
  (float64), all little-endian.
"""

import csv
import math
import os
import struct

import numpy as np

from .analysis import LagTable
from .gaussian_process import TimeSeries

MAGIC = b"INCSIMTS"
BINARY_VERSION = 1
_HEADER = struct.Struct("<8sI4sdQ")


class SeriesFormatError(ValueError):
    pass


def write_series(ts, path, fmt=None):
    fmt = fmt or ("binary" if str(path).endswith(".bin") else "csv")
    v = np.ascontiguousarray(ts.values, dtype="<f8")
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, BINARY_VERSION, b"\0" * 4, float(ts.dt), v.size))
            fh.write(v.tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            fh.write(f"# dt={float(ts.dt)!r}\n# n={v.size}\n")
            fh.write("\n".join(map(repr, v.tolist())))
            fh.write("\n")
    else:
        raise ValueError(f"unknown series format {fmt!r}")
    return path


def read_series(path):
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _read_binary(path)
    return _read_csv(path)


def _read_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SeriesFormatError(f"{path}: truncated header")
    _, version, _, dt, n = _HEADER.unpack_from(raw)
    if version != BINARY_VERSION:
        raise SeriesFormatError(f"{path}: unsupported format version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise SeriesFormatError(f"{path}: header announces {n} values, file holds {len(body) / 8:g}")
    return TimeSeries(np.frombuffer(body, dtype="<f8").astype(float), dt)


def _read_csv(path):
    meta = {}
    with open(path) as fh:
        for _ in range(2):
            line = fh.readline().strip()
            if not line.startswith("#") or "=" not in line:
                raise SeriesFormatError(f"{path}: expected '# dt=' and '# n=' header lines")
            key, val = line[1:].split("=", 1)
            meta[key.strip()] = val.strip()
        try:
            dt, n = float(meta["dt"]), int(meta["n"])
        except (KeyError, ValueError) as exc:
            raise SeriesFormatError(f"{path}: bad header ({exc})") from None
        try:
            values = np.loadtxt(fh, dtype=float, ndmin=1)
        except ValueError as exc:
            raise SeriesFormatError(f"{path}: {exc}") from None
    if values.size != n:
        raise SeriesFormatError(f"{path}: header announces {n} values, file holds {values.size}")
    return TimeSeries(values, dt)


def is_series_file(path):
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return head == MAGIC or head.startswith(b"# dt=")


def write_lag_table(table, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["lag", "lag_steps", "variance", "count"]
        if table.frac_moment is not None:
            cols.append("frac_moment")
        w.writerow(cols)
        for j in range(table.lags.size):
            row = [repr(float(table.lags[j])), int(table.lag_steps[j]), repr(float(table.variance[j])),
                   int(table.count[j])]
            if table.frac_moment is not None:
                row.append(repr(float(table.frac_moment[j])))
            w.writerow(row)
    return path


def read_lag_table(path, statistic="variance", p_frac=None):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "lag" not in rows[0] or "variance" not in rows[0]:
        raise SeriesFormatError(f"{path}: not a lag table (need 'lag' and 'variance' columns)")
    lags = np.array([float(r["lag"]) for r in rows])
    var = np.array([float(r["variance"]) for r in rows])
    steps = np.array([int(r.get("lag_steps") or 0) for r in rows])
    count = np.array([int(r.get("count") or 0) for r in rows])
    frac = np.array([float(r["frac_moment"]) for r in rows]) if "frac_moment" in rows[0] else None
    dt = float(lags[0] / steps[0]) if steps[0] > 0 else math.nan
    return LagTable(lags, steps, var, count, dt, frac, p_frac, statistic)


def write_rows(rows, path, columns):
    """CSV of dict rows, floats written with ``repr``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
    return path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    return v


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
