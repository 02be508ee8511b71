"""CSV and JSON emission with atomic writes."""

import json
import os
import tempfile

import numpy as np

FLOAT_FORMAT = "%.17g"


def _atomic_write(path, data):
    path = os.path.abspath(path)
    directory = os.path.dirname(path)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(header, columns):
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise ValueError("columns differ in length")
    lines = [",".join(header)]
    table = np.column_stack(cols) if cols else np.empty((0, 0))
    for row in table:
        lines.append(",".join(FLOAT_FORMAT % v for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, columns):
    _atomic_write(path, format_csv(header, columns))


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_csv(path):
    """Columns of a headed numeric CSV as a dict of float arrays."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: {len(header)} header names but {data.shape[1]} columns")
    return {name.strip(): data[:, k] for k, name in enumerate(header)}


def grid_from_columns(domain, x, y, values):
    """Scatter node samples onto the grid of ``domain``; missing nodes hold NaN."""
    i = np.rint((np.asarray(x) - domain.bounds[0]) / domain.hx).astype(int)
    j = np.rint((np.asarray(y) - domain.bounds[2]) / domain.hy).astype(int)
    ok = (i >= 0) & (i < domain.nx) & (j >= 0) & (j < domain.ny)
    if not np.all(ok):
        raise ValueError("samples fall outside the grid")
    gx, gy = domain.x[i], domain.y[j]
    tol = 1e-6 * max(domain.hx, domain.hy)
    if np.max(np.abs(gx - x)) > tol or np.max(np.abs(gy - y)) > tol:
        raise ValueError("samples are not on the grid nodes")
    out = np.full(domain.shape, np.nan)
    out[i, j] = values
    return out
