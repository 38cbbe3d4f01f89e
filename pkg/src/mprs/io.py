"""CSV formats, config files and gridded-data helpers.

Point files have a header ``c1,...,cd`` optionally followed by ``value``;
lines starting with ``#`` are comments.  Floats are written with ``repr``
(the shortest string that round-trips), so re-emitting a file that was read
back reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import MPRSError, PointSet

_COORD = re.compile(r"c(\d+)$")


class InputError(MPRSError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = "" if path is None else f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def _data_lines(text: str):
    """Yield ``(line_no, fields)`` for non-comment, non-blank lines; collect comments."""
    comments = []
    rows = []
    for no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        rows.append((no, next(csv.reader([line]))))
    return comments, rows


def _parse_floats(fields, path, no, allow_empty=False):
    out = []
    for f in fields:
        f = f.strip()
        if f == "" and allow_empty:
            out.append(np.nan)
            continue
        try:
            v = float(f)
        except ValueError:
            raise InputError(f"not a number: {f!r}", path, no) from None
        if not np.isfinite(v):
            raise InputError(f"non-finite value {f!r}", path, no)
        out.append(v)
    return out


def _coord_header(header, path, no, extra):
    names = [h.strip() for h in header]
    n_coord = 0
    for h in names:
        m = _COORD.match(h)
        if not m:
            break
        n_coord += 1
        if int(m.group(1)) != n_coord:
            raise InputError(f"expected column c{n_coord}, got {h!r}", path, no)
    if n_coord == 0:
        raise InputError("header must start with c1", path, no)
    rest = names[n_coord:]
    if rest not in extra:
        raise InputError(f"unexpected columns after coordinates: {rest}", path, no)
    return n_coord, rest


def read_points(path, require_values: bool = False) -> PointSet:
    """Read a ``c1..cd[,value]`` file; dimension comes from the header."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", path) from None
    _, rows = _data_lines(text)
    if not rows:
        raise InputError("missing header", path)
    no, header = rows[0]
    d, rest = _coord_header(header, path, no, ([], ["value"]))
    has_value = rest == ["value"]
    if require_values and not has_value:
        raise InputError("a 'value' column is required", path, no)
    width = d + int(has_value)
    data = []
    for no, fields in rows[1:]:
        if len(fields) != width:
            raise InputError(f"expected {width} fields, got {len(fields)}", path, no)
        data.append(_parse_floats(fields, path, no))
    arr = np.array(data, dtype=float).reshape(-1, width)
    return PointSet(arr[:, :d], arr[:, d] if has_value else None)


def write_points(path, points: PointSet, comments: Iterable[str] = ()):
    cols = [f"c{i + 1}" for i in range(points.dim)]
    if points.values is not None:
        cols.append("value")
    buf = io.StringIO()
    for c in comments:
        buf.write(c if c.startswith("#") else f"# {c}")
        buf.write("\n")
    buf.write(",".join(cols) + "\n")
    for i in range(points.n):
        row = [fmt(x) for x in points.coords[i]]
        if points.values is not None:
            row.append(fmt(points.values[i]))
        buf.write(",".join(row) + "\n")
    Path(path).write_text(buf.getvalue())


def write_predictions(path, coords, mean, std=None, comments: Iterable[str] = ()):
    """Predictions file ``c1..cd,mean,std``; row order follows ``coords``."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] != len(mean) or (std is not None and len(std) != len(mean)):
        raise ValueError("coords, mean and std must have one row per query")
    buf = io.StringIO()
    for c in comments:
        buf.write(c if c.startswith("#") else f"# {c}")
        buf.write("\n")
    buf.write(",".join([f"c{i + 1}" for i in range(coords.shape[1])] + ["mean", "std"]) + "\n")
    for i in range(coords.shape[0]):
        s = None if std is None else std[i]
        buf.write(",".join([fmt(x) for x in coords[i]] + [fmt(mean[i]), fmt(s)]) + "\n")
    Path(path).write_text(buf.getvalue())


def read_predictions(path):
    """Return ``(comments, coords, mean, std)``; empty std fields become NaN."""
    path = Path(path)
    comments, rows = _data_lines(path.read_text())
    if not rows:
        raise InputError("missing header", path)
    no, header = rows[0]
    d, _ = _coord_header(header, path, no, (["mean", "std"],))
    data = []
    for no, fields in rows[1:]:
        if len(fields) != d + 2:
            raise InputError(f"expected {d + 2} fields, got {len(fields)}", path, no)
        data.append(_parse_floats(fields[:d + 1], path, no) + _parse_floats(fields[d + 1:], path, no, True))
    arr = np.array(data, dtype=float).reshape(-1, d + 2)
    return comments, arr[:, :d], arr[:, d], arr[:, d + 1]


def write_csv_rows(path, header: Sequence[str], rows, comments: Iterable[str] = ()):
    buf = io.StringIO()
    for c in comments:
        buf.write(c if c.startswith("#") else f"# {c}")
        buf.write("\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(x if isinstance(x, str) else fmt(x) for x in row) + "\n")
    Path(path).write_text(buf.getvalue())


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config: {exc.strerror}", path) from None
    out = {}
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise InputError("expected 'key = value'", path, no)
        key, _, value = s.partition("=")
        key = key.strip().lstrip("-")
        if not key:
            raise InputError("empty key", path, no)
        out[key] = value.strip()
    return out


def load_table(path, coord_cols: Sequence[str], value_col: Optional[str] = None,
               delimiter: str = ",", skip_missing: bool = True) -> PointSet:
    """Ingest a CSV with named columns (e.g. a published dataset).

    Rows whose value field is empty or non-numeric are dropped when
    ``skip_missing`` is set; gaps are represented by absent rows.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader((l for l in fh if not l.startswith("#")), delimiter=delimiter)
        if reader.fieldnames is None:
            raise InputError("missing header", path)
        fields = [f.strip() for f in reader.fieldnames]
        reader.fieldnames = fields
        for c in list(coord_cols) + ([value_col] if value_col else []):
            if c not in fields:
                raise InputError(f"column {c!r} not found in {fields}", path, 1)
        coords, values = [], []
        for no, row in enumerate(reader, start=2):
            try:
                xyz = [float(row[c]) for c in coord_cols]
            except (TypeError, ValueError):
                raise InputError("bad coordinate", path, no) from None
            if value_col:
                try:
                    v = float(row[value_col])
                except (TypeError, ValueError):
                    if skip_missing:
                        continue
                    raise InputError(f"bad value {row[value_col]!r}", path, no) from None
                if not np.isfinite(v):
                    if skip_missing:
                        continue
                    raise InputError("non-finite value", path, no)
                values.append(v)
            coords.append(xyz)
    return PointSet(np.array(coords, dtype=float).reshape(-1, len(coord_cols)),
                    np.array(values) if value_col else None)


def grid_to_points(grid, spacing=1.0, origin=0.0):
    """Split an n-d grid with NaN gaps into known samples and gap sites.

    Cell ``(i, j, ...)`` sits at ``origin + spacing * (i, j, ...)``.
    Returns ``(samples, gaps, sample_index, gap_index)`` where the index
    arrays are flat positions into ``grid``.
    """
    g = np.asarray(grid, dtype=float)
    coords = np.stack(np.unravel_index(np.arange(g.size), g.shape), axis=1).astype(float)
    coords = np.asarray(origin, dtype=float) + np.asarray(spacing, dtype=float) * coords
    flat = g.reshape(-1)
    known = np.isfinite(flat)
    si, gi = np.flatnonzero(known), np.flatnonzero(~known)
    return PointSet(coords[si], flat[si]), PointSet(coords[gi]), si, gi


def fill_grid(grid, gap_index, values):
    """Copy of ``grid`` with ``values`` written into the flat ``gap_index`` cells."""
    out = np.array(grid, dtype=float)
    out.reshape(-1)[gap_index] = values
    return out
