"""Reading and writing data matrices, label vectors and run reports.

Matrices: CSV (comma separated, no header, one matrix row per line) or
Matrix Market (coordinate or array, real, general).  Labels: one integer per
line.  Reports: JSON with sorted keys, so equal reports are equal bytes.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .model import as_data_matrix

CSV = "csv"
MATRIX_MARKET = "matrix-market"
FORMATS = (CSV, MATRIX_MARKET)

REPORT_SCHEMA_ID = "onmf-ncp/run-report/v1"


class MatrixParseError(ValueError):
    """A matrix file could not be parsed; carries the 1-based location."""

    def __init__(self, path, message, line=None, column=None):
        where = str(path)
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}")
        self.path, self.line, self.column = str(path), line, column


def guess_format(path) -> str:
    """``matrix-market`` for ``.mtx`` files, ``csv`` otherwise."""
    return MATRIX_MARKET if str(path).lower().endswith(".mtx") else CSV


def _read_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split(",")
            row = []
            for col, tok in enumerate(fields, start=1):
                try:
                    val = float(tok)
                except ValueError:
                    raise MatrixParseError(path, f"cannot parse {tok.strip()!r} as a number", lineno, col) from None
                if not math.isfinite(val):
                    raise MatrixParseError(path, f"non-finite value {tok.strip()!r}", lineno, col)
                row.append(val)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise MatrixParseError(path, f"expected {width} fields, found {len(row)}", lineno)
            rows.append(row)
    if not rows:
        raise MatrixParseError(path, "file contains no data")
    return np.array(rows, dtype=np.float64)


def _read_mtx(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").split()
    if len(header) < 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixParseError(path, "missing %%MatrixMarket header line", 1)
    _, obj, fmt, field, symmetry = (h.lower() for h in header[:5])
    if obj != "matrix" or fmt not in ("coordinate", "array"):
        raise MatrixParseError(path, f"unsupported object/format {obj} {fmt}", 1)
    if field not in ("real", "integer"):
        raise MatrixParseError(path, f"field {field!r} not supported; need real", 1)
    if symmetry != "general":
        raise MatrixParseError(path, f"symmetry {symmetry!r} not supported; need general", 1)
    try:
        A = scipy.io.mmread(str(path))
    except (ValueError, IndexError) as err:
        raise MatrixParseError(path, f"invalid Matrix Market body: {err}") from None
    if scipy.sparse.issparse(A):
        A = A.toarray()
    return np.asarray(A, dtype=np.float64)


def read_matrix(path, format: str = None) -> np.ndarray:
    """Read a dense non-negative data matrix.

    Parameters
    ----------
    path : str or Path
    format : {"csv", "matrix-market"}, optional
        Guessed from the file extension when omitted.

    Raises
    ------
    MatrixParseError
        Malformed file, with line and column where known.
    ValueError
        Negative or non-finite entries, naming the offending cell.
    """
    fmt = format or guess_format(path)
    if fmt not in FORMATS:
        raise ValueError(f"unknown matrix format {fmt!r}; expected one of {FORMATS}")
    A = _read_csv(path) if fmt == CSV else _read_mtx(path)
    try:
        return as_data_matrix(A)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from None


def write_matrix(path, A, format: str = None) -> None:
    """Write a dense matrix; CSV uses ``repr`` floats so reading back is exact."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("only 2-D matrices can be written")
    fmt = format or guess_format(path)
    if fmt == CSV:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in A:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
    elif fmt == MATRIX_MARKET:
        scipy.io.mmwrite(str(path), A, field="real", symmetry="general", precision=17)
    else:
        raise ValueError(f"unknown matrix format {fmt!r}; expected one of {FORMATS}")


def write_labels(path, labels) -> None:
    labels = np.asarray(labels).ravel()
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise ValueError("labels must be integers")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


def read_labels(path) -> np.ndarray:
    """Read one integer label per line (blank lines ignored)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            tok = raw.strip()
            if not tok:
                continue
            try:
                out.append(int(tok))
            except ValueError:
                raise MatrixParseError(path, f"cannot parse {tok!r} as an integer label", lineno) from None
    return np.array(out, dtype=np.int64)


def _jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_report(report: dict) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    doc = _jsonable(report)
    doc.setdefault("schema_id", REPORT_SCHEMA_ID)
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, report: dict) -> None:
    text = dumps_report(report)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
