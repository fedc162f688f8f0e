"""Matrix Market coordinate-format reader and writer."""
from __future__ import annotations

import os

import numpy as np

from .errors import MatrixMarketError
from .formats import CooMatrix, SortOrder, SparseMatrix, to_coo

_FIELDS = ("real", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric")


def _parse_header(line: str) -> tuple[str, str]:
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0] != "%%MatrixMarket":
        raise MatrixMarketError("missing %%MatrixMarket header", 1)
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported layout '{obj} {fmt}', need 'matrix coordinate'", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field '{field}'", 1)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", 1)
    return field, symmetry


def mm_read(path: str | os.PathLike) -> CooMatrix:
    """Read a coordinate Matrix Market file into a row-sorted ``CooMatrix``.

    Symmetric files are expanded to general form, ``pattern`` entries get the
    value 1.0 and indices are shifted to 0-based. Duplicate coordinates are an
    error rather than being summed.
    """
    with open(path, "r") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    field, symmetry = _parse_header(lines[0])

    lineno = 1
    size_line = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size_line = text
            break
    if size_line is None:
        raise MatrixMarketError("missing size line", lineno)
    try:
        m, n, nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(f"bad size line '{size_line}'", lineno) from None
    if m < 0 or n < 0 or nnz < 0:
        raise MatrixMarketError("negative size", lineno)
    if symmetry == "symmetric" and m != n:
        raise MatrixMarketError("symmetric matrix must be square", lineno)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz, dtype=np.float64)
    linenos = np.empty(nnz, dtype=np.int64)
    want = 2 if field == "pattern" else 3
    k = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        if k == nnz:
            raise MatrixMarketError("more entries than declared", lineno)
        tokens = text.split()
        if len(tokens) != want:
            raise MatrixMarketError(f"expected {want} fields, got {len(tokens)}", lineno)
        try:
            i, j = int(tokens[0]), int(tokens[1])
            if want == 3:
                vals[k] = float(tokens[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry '{text}'", lineno) from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(f"index ({i}, {j}) outside {m}x{n}", lineno)
        rows[k], cols[k], linenos[k] = i - 1, j - 1, lineno
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {k}", len(lines))

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols = np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]])
        vals = np.concatenate([vals, vals[off]])
        linenos = np.concatenate([linenos, linenos[off]])

    order = np.lexsort((cols, rows))
    rows, cols, vals, linenos = rows[order], cols[order], vals[order], linenos[order]
    dup = np.flatnonzero((rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1]))
    if dup.size:
        k = dup[0]
        where = int(max(linenos[k], linenos[k + 1]))
        raise MatrixMarketError(
            f"duplicate entry ({rows[k] + 1}, {cols[k] + 1})", where)
    return CooMatrix(m, n, rows, cols, vals, SortOrder.BY_ROW)


def mm_write(a: SparseMatrix, path: str | os.PathLike, comment: str | None = None) -> None:
    """Write ``a`` as ``real general``, sorted by row then column, 17 significant digits."""
    coo = to_coo(a).sorted_by_row()
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{coo.m} {coo.n} {coo.nnz}\n")
        fh.writelines(
            f"{i + 1} {j + 1} {v:.17g}\n"
            for i, j, v in zip(coo.row_idx.tolist(), coo.col_idx.tolist(), coo.val.tolist())
        )
