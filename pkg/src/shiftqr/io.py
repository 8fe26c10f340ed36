"""Dense matrix files: Matrix Market array format and a JSON layout.

The JSON layout is ``{"n": n, "entries": [[re, im], ...]}`` in row-major
order.  Floats are written with ``repr`` (shortest round-trip form), so a
write followed by a read reproduces every bit, signed zeros included.
"""
from __future__ import annotations

import io as _io
import json
import os
from pathlib import Path

import numpy as np
import scipy.io

__all__ = [
    "MatrixFormatError",
    "read_matrix",
    "write_matrix",
    "read_json",
    "write_json",
    "read_mtx",
    "write_mtx",
    "to_json_obj",
    "from_json_obj",
]


class MatrixFormatError(ValueError):
    """Input could not be parsed as a dense square complex matrix."""


def _check_square(a: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise MatrixFormatError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise MatrixFormatError("matrix has non-finite entries")
    return a


def to_json_obj(a) -> dict:
    a = _check_square(np.asarray(a, dtype=complex))
    flat = a.reshape(-1)
    return {"n": int(a.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in flat]}


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def from_json_obj(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "n" not in obj or "entries" not in obj:
        raise MatrixFormatError('JSON matrix needs keys "n" and "entries"')
    n = obj["n"]
    entries = obj["entries"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise MatrixFormatError('"n" must be a positive integer')
    if not isinstance(entries, list) or len(entries) != n * n:
        raise MatrixFormatError(f'"entries" must be a list of n*n = {n * n} pairs')
    re = np.empty(n * n)
    im = np.empty(n * n)
    for i, pair in enumerate(entries):
        if not (isinstance(pair, list) and len(pair) == 2 and all(map(_is_number, pair))):
            raise MatrixFormatError(f"entry {i} is not a [re, im] pair of numbers")
        re[i], im[i] = pair
    # assign parts separately so signed zeros survive
    a = np.empty((n, n), dtype=complex)
    a.real = re.reshape(n, n)
    a.imag = im.reshape(n, n)
    return _check_square(a)


def write_json(path, a) -> None:
    Path(path).write_text(json.dumps(to_json_obj(a)) + "\n")


def read_json(path) -> np.ndarray:
    try:
        obj = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise MatrixFormatError(f"invalid JSON: {err}") from err
    return from_json_obj(obj)


def write_mtx(path, a) -> None:
    """Write ``%%MatrixMarket matrix array complex general`` (column-major)."""
    a = _check_square(np.asarray(a, dtype=complex))
    n = a.shape[0]
    lines = ["%%MatrixMarket matrix array complex general", f"{n} {n}"]
    for z in a.T.reshape(-1):
        lines.append(f"{float(z.real)!r} {float(z.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_mtx_array(lines: list[str], field: str) -> np.ndarray:
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixFormatError("missing size line")
    try:
        rows, cols = (int(t) for t in body[0].split())
        width = 2 if field == "complex" else 1
        vals = [[float(t) for t in ln.split()] for ln in body[1:]]
    except ValueError as err:
        raise MatrixFormatError(f"invalid Matrix Market array data: {err}") from err
    if len(vals) != rows * cols or any(len(v) != width for v in vals):
        raise MatrixFormatError(f"expected {rows * cols} lines of {width} value(s)")
    data = np.array(vals, dtype=float).reshape(rows * cols, width)
    a = np.zeros((cols, rows), dtype=complex)
    a.real = data[:, 0].reshape(cols, rows)
    if width == 2:
        a.imag = data[:, 1].reshape(cols, rows)
    return a.T.copy()


def read_mtx(path) -> np.ndarray:
    """Read a Matrix Market file as a dense complex array.

    General dense ``array`` files are parsed directly (bit-exact for files
    written by :func:`write_mtx`); every other variant goes through
    ``scipy.io.mmread``.
    """
    text = Path(path).read_bytes()
    try:
        lines = text.decode("ascii").splitlines()
    except UnicodeDecodeError as err:
        raise MatrixFormatError("Matrix Market files must be ASCII") from err
    header = lines[0].split() if lines else []
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixFormatError("missing or malformed %%MatrixMarket header")
    _, obj, fmt, field, symmetry = (t.lower() for t in header)
    if obj != "matrix":
        raise MatrixFormatError(f"unsupported object {obj!r}")
    if fmt == "array" and symmetry == "general" and field in ("complex", "real", "double", "integer"):
        return _check_square(_read_mtx_array(lines, field))
    try:
        a = scipy.io.mmread(_io.BytesIO(text))
    except Exception as err:  # scipy raises a mix of ValueError/OSError/IndexError
        raise MatrixFormatError(f"invalid Matrix Market file: {err}") from err
    if hasattr(a, "toarray"):
        a = a.toarray()
    return _check_square(np.asarray(a, dtype=complex))


def _kind(path) -> str:
    suffix = os.path.splitext(str(path))[1].lower()
    if suffix == ".mtx":
        return "mtx"
    if suffix == ".json":
        return "json"
    raise MatrixFormatError(f"unrecognized matrix file extension {suffix!r} (use .mtx or .json)")


def read_matrix(path) -> np.ndarray:
    """Read a ``.mtx`` or ``.json`` matrix file."""
    kind = _kind(path)
    try:
        return read_mtx(path) if kind == "mtx" else read_json(path)
    except OSError as err:
        raise MatrixFormatError(str(err)) from err


def write_matrix(path, a) -> None:
    if _kind(path) == "mtx":
        write_mtx(path, a)
    else:
        write_json(path, a)
