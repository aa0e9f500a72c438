"""Reading and writing dense matrices as CSV or Matrix Market files.

CSV: one row per line, comma-separated decimal literals, with at most one
leading header line starting with ``#``.

Matrix Market: ``%%MatrixMarket matrix array real general`` (column-major
dense listing) or ``%%MatrixMarket matrix coordinate real general`` with
1-based ``i j value`` triplets, densified on load.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

DEFAULT_MAX_ENTRIES = 4_000_000


class MatrixParseError(ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:" if path is not None else ""
        where += f"{line}: " if line is not None else (" " if where else "")
        super().__init__(f"{where}{message}")
        self.path = path
        self.line = line


def detect_format(path, fmt: str | None = None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "mtx"):
            raise ValueError(f"unknown matrix format {fmt!r}")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".mtx":
        return "mtx"
    raise ValueError(f"cannot infer matrix format from {str(path)!r}; pass a format")


def _number(token: str, path, line: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise MatrixParseError(f"not a number: {token.strip()!r}", path, line) from None
    if not np.isfinite(v):
        raise MatrixParseError(f"non-finite value {token.strip()!r}", path, line)
    return v


def read_csv(path) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and record and record[0].lstrip().startswith("#"):
                continue
            if not record or all(not c.strip() for c in record):
                continue
            values = [_number(c, path, lineno) for c in record]
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise MatrixParseError(
                    f"row has {len(values)} entries, expected {width}", path, lineno
                )
            rows.append(values)
    if not rows:
        raise MatrixParseError("no data rows", path)
    return np.array(rows, dtype=np.float64)


def write_csv(path, A, header: str | None = None) -> None:
    A = np.asarray(A, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        if header is not None:
            fh.write(f"# {header}\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in A:
            writer.writerow([repr(float(v)) for v in row])


def _data_lines(fh):
    for lineno, raw in enumerate(fh, start=2):
        text = raw.strip()
        if text and not text.startswith("%"):
            yield lineno, text.split()


def read_mtx(path, max_entries: int = DEFAULT_MAX_ENTRIES) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0].lower() != "%%matrixmarket":
            raise MatrixParseError("missing %%MatrixMarket header", path, 1)
        obj, layout, field, symmetry = (h.lower() for h in header[1:])
        if obj != "matrix" or layout not in ("array", "coordinate"):
            raise MatrixParseError(f"unsupported object/format {obj} {layout}", path, 1)
        if field not in ("real", "integer") or symmetry != "general":
            raise MatrixParseError(f"unsupported field/symmetry {field} {symmetry}", path, 1)

        lines = _data_lines(fh)
        try:
            lineno, size = next(lines)
        except StopIteration:
            raise MatrixParseError("missing size line", path) from None
        expected = 2 if layout == "array" else 3
        if len(size) != expected:
            raise MatrixParseError(f"size line needs {expected} integers", path, lineno)
        try:
            dims = [int(v) for v in size]
        except ValueError:
            raise MatrixParseError("size line must be integers", path, lineno) from None
        m, n = dims[0], dims[1]
        if m < 1 or n < 1:
            raise MatrixParseError(f"invalid dimensions {m} x {n}", path, lineno)
        if m * n > max_entries:
            raise MatrixParseError(
                f"{m} x {n} exceeds the dense size cap of {max_entries} entries", path, lineno
            )

        if layout == "array":
            values = []
            for lineno, tokens in lines:
                if len(tokens) != 1:
                    raise MatrixParseError("array entries must be one per line", path, lineno)
                values.append(_number(tokens[0], path, lineno))
            if len(values) != m * n:
                raise MatrixParseError(f"expected {m * n} entries, found {len(values)}", path)
            return np.array(values, dtype=np.float64).reshape((n, m)).T.copy()

        nnz = dims[2]
        A = np.zeros((m, n))
        count = 0
        for lineno, tokens in lines:
            if len(tokens) != 3:
                raise MatrixParseError("coordinate entries need 'i j value'", path, lineno)
            try:
                i, j = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise MatrixParseError("row/column indices must be integers", path, lineno) from None
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixParseError(f"entry ({i}, {j}) outside {m} x {n}", path, lineno)
            A[i - 1, j - 1] = _number(tokens[2], path, lineno)
            count += 1
        if count != nnz:
            raise MatrixParseError(f"expected {nnz} entries, found {count}", path)
        return A


def write_mtx(path, A, layout: str = "array") -> None:
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix {layout} real general\n")
        if layout == "array":
            fh.write(f"{m} {n}\n")
            for v in A.T.ravel():
                fh.write(f"{float(v)!r}\n")
        elif layout == "coordinate":
            rows, cols = np.nonzero(A)
            fh.write(f"{m} {n} {len(rows)}\n")
            for i, j in zip(rows, cols):
                fh.write(f"{i + 1} {j + 1} {float(A[i, j])!r}\n")
        else:
            raise ValueError(f"unknown Matrix Market layout {layout!r}")


def load_matrix(path, fmt: str | None = None, max_entries: int = DEFAULT_MAX_ENTRIES) -> np.ndarray:
    fmt = detect_format(path, fmt)
    if fmt == "csv":
        A = read_csv(path)
        if A.size > max_entries:
            raise MatrixParseError(f"matrix exceeds the size cap of {max_entries} entries", path)
        return A
    return read_mtx(path, max_entries)


def save_matrix(path, A, fmt: str | None = None) -> None:
    fmt = detect_format(path, fmt)
    if fmt == "csv":
        write_csv(path, A)
    else:
        write_mtx(path, A)
