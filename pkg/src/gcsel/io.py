"""CSV ingestion and report rendering."""

import csv
import io as _io
import json
import math

import numpy as np

from .engine import Dataset
from .exceptions import DataError

__all__ = ["ingest_csv", "write_rows", "render_rows", "read_config", "NA_TOKENS"]

NA_TOKENS = frozenset({"", "na", "nan", "null", "none", "?", "."})


def _sniff_delimiter(sample):
    try:
        return csv.Sniffer().sniff(sample, delimiters=",;\t ").delimiter
    except csv.Error:
        return ","


def ingest_csv(path, header=True, target_column=-1, delimiter=None, na_policy="error", intercept=True):
    """Read a numeric CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or path-like
    header : bool, default=True
        Whether the first row holds column names.  Without a header the
        columns are named ``"1".."q"``.
    target_column : int or str, default=-1
        Response column, by position or by header name.
    delimiter : str, optional
        Field separator; sniffed from the first line when omitted.
    na_policy : {"error", "drop"}
        Reject files with missing cells or drop the affected rows.
    intercept : bool, default=True

    Raises
    ------
    DataError
        Unreadable file, ragged rows, non-numeric or missing cells; the
        message names the 1-based row and column.
    """
    if na_policy not in ("error", "drop"):
        raise ValueError("na_policy must be 'error' or 'drop'")
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path} is empty")
    if delimiter is None:
        delimiter = _sniff_delimiter(lines[0])
    reader = csv.reader(lines, delimiter=delimiter, skipinitialspace=True)
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    first_data = 0
    if header:
        names = [c.strip().strip('"') for c in rows[0]]
        first_data = 1
    else:
        names = None
    if len(rows) <= first_data:
        raise DataError(f"{path} has no data rows")
    width = len(rows[first_data])
    if names is not None and len(names) != width:
        raise DataError(f"header has {len(names)} fields, data has {width}", row=1)
    values = np.empty((len(rows) - first_data, width))
    keep = np.ones(values.shape[0], dtype=bool)
    for i, row in enumerate(rows[first_data:]):
        lineno = i + first_data + 1
        if len(row) != width:
            raise DataError(f"expected {width} fields, found {len(row)}", row=lineno)
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell.lower() in NA_TOKENS:
                if na_policy == "error":
                    raise DataError(f"missing value {cell!r}", row=lineno, column=j + 1)
                keep[i] = False
                values[i, j] = math.nan
                continue
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(f"non-numeric value {cell!r}", row=lineno, column=j + 1) from None
            if not math.isfinite(values[i, j]):
                if na_policy == "error":
                    raise DataError(f"non-finite value {cell!r}", row=lineno, column=j + 1)
                keep[i] = False
    values = values[keep]
    if names is None:
        names = [str(j + 1) for j in range(width)]
    if isinstance(target_column, str):
        if target_column not in names:
            raise DataError(f"unknown target column {target_column!r}")
        target = names.index(target_column)
    else:
        target = int(target_column)
        if not -width <= target < width:
            raise DataError(f"target column {target_column} out of range for {width} columns")
        target %= width
    cols = [j for j in range(width) if j != target]
    x = np.asfortranarray(values[:, cols])
    y = values[:, target].copy()
    data = Dataset(x, y, names=[names[j] for j in cols], intercept=intercept)
    data.meta["target"] = names[target]
    data.meta["dropped_rows"] = int((~keep).sum())
    return data


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if not math.isfinite(v) else v
    if isinstance(v, np.ndarray):
        return [_jsonable(u) for u in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    return v


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(u) for u in v)
    return str(v)


def render_rows(rows, fmt="csv", meta=None):
    """Render a list of flat dicts as CSV or JSON text.

    Floats are written with ``repr`` so both renderings carry the same
    numbers exactly.
    """
    rows = list(rows)
    if fmt == "json":
        doc = {"rows": _jsonable(rows)}
        if meta is not None:
            doc["meta"] = _jsonable(meta)
        return json.dumps(doc, indent=2) + "\n"
    if fmt != "csv":
        raise ValueError("format must be 'csv' or 'json'")
    if not rows:
        return ""
    fields = list(rows[0].keys())
    for r in rows[1:]:
        fields.extend(k for k in r if k not in fields)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(r.get(k, "")) for k in fields])
    return buf.getvalue()


def write_rows(rows, path=None, fmt="csv", meta=None, stream=None):
    """Write rendered rows to ``path``, or to ``stream`` when no path is given."""
    text = render_rows(rows, fmt, meta)
    if path is None:
        stream.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"expected key = value, got {line!r}", row=lineno)
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out
