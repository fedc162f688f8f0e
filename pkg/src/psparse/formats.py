"""Sparse storage formats (COO, CSR, CSC), conversions and reference SpMV.

All matrices are immutable: index and value arrays are stored as read-only
numpy arrays and can be shared freely between threads. Indices are 0-based
``int64`` and values are ``float64``.

The three ``spmv_*_ref`` kernels are deliberately simple, single-threaded and
use a fixed summation order. They are the correctness oracle for the
partitioned executor.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError

INDEX_DTYPE = np.int64
VALUE_DTYPE = np.float64


class SortOrder(enum.Enum):
    BY_ROW = "by_row"
    BY_COLUMN = "by_column"
    UNSORTED = "unsorted"


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


def _check_dims(m: int, n: int) -> tuple[int, int]:
    m, n = int(m), int(n)
    if m < 0 or n < 0:
        raise FormatError(f"negative dimensions {m}x{n}")
    return m, n


def _check_range(idx: np.ndarray, bound: int, what: str) -> None:
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise FormatError(f"{what} index out of range [0, {bound})")


def _check_ptr(ptr: np.ndarray, length: int, nnz: int, what: str) -> None:
    if ptr.size != length:
        raise FormatError(f"{what} has length {ptr.size}, expected {length}")
    if ptr[0] != 0 or ptr[-1] != nnz:
        raise FormatError(f"{what} must start at 0 and end at nnz={nnz}")
    if np.any(np.diff(ptr) < 0):
        raise FormatError(f"{what} is not non-decreasing")


def _check_strictly_increasing_segments(ptr: np.ndarray, idx: np.ndarray, what: str) -> None:
    # Within each segment idx must strictly increase; across segment starts anything goes.
    if idx.size < 2:
        return
    rising = idx[1:] > idx[:-1]
    starts = ptr[1:-1]
    starts = starts[(starts > 0) & (starts < idx.size)]
    rising[starts - 1] = True
    if not rising.all():
        raise FormatError(f"{what} must be strictly increasing within each segment")


def _expand_ptr(ptr: np.ndarray) -> np.ndarray:
    """Segment id of every stored entry, e.g. ``[0,2,3,3,5] -> [0,0,1,3,3]``."""
    return np.repeat(np.arange(ptr.size - 1, dtype=INDEX_DTYPE), np.diff(ptr))


@dataclass(frozen=True, eq=False)
class CooMatrix:
    """Coordinate-format matrix.

    ``sort_order`` is detected on construction when not given; when given it is
    verified. Duplicate ``(row, col)`` pairs are rejected.
    """

    m: int
    n: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    val: np.ndarray
    sort_order: SortOrder | None = None

    def __post_init__(self):
        m, n = _check_dims(self.m, self.n)
        row = _frozen(self.row_idx, INDEX_DTYPE)
        col = _frozen(self.col_idx, INDEX_DTYPE)
        val = _frozen(self.val, VALUE_DTYPE)
        if not (row.size == col.size == val.size):
            raise FormatError("row_idx, col_idx and val must have equal length")
        _check_range(row, m, "row")
        _check_range(col, n, "column")

        by_row = _is_lex_sorted(row, col)
        by_col = _is_lex_sorted(col, row)
        if by_row or by_col:
            primary, secondary = (row, col) if by_row else (col, row)
            dup = (primary[1:] == primary[:-1]) & (secondary[1:] == secondary[:-1])
        else:
            order = np.lexsort((col, row))
            r, c = row[order], col[order]
            dup = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
        if dup.any():
            raise FormatError("duplicate (row, col) entries")

        order = self.sort_order
        if order is None:
            order = SortOrder.BY_ROW if by_row else SortOrder.BY_COLUMN if by_col else SortOrder.UNSORTED
        elif order is SortOrder.BY_ROW and not by_row:
            raise FormatError("entries are not sorted by row")
        elif order is SortOrder.BY_COLUMN and not by_col:
            raise FormatError("entries are not sorted by column")

        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "row_idx", row)
        object.__setattr__(self, "col_idx", col)
        object.__setattr__(self, "val", val)
        object.__setattr__(self, "sort_order", SortOrder(order))

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    def triplets(self) -> set[tuple[int, int, float]]:
        return set(zip(self.row_idx.tolist(), self.col_idx.tolist(), self.val.tolist()))

    def sorted_by_row(self) -> CooMatrix:
        """Canonical form: sorted by row, ties by column."""
        if self.sort_order is SortOrder.BY_ROW:
            return self
        order = np.lexsort((self.col_idx, self.row_idx))
        return CooMatrix(self.m, self.n, self.row_idx[order], self.col_idx[order],
                         self.val[order], SortOrder.BY_ROW)

    def same_as(self, other: CooMatrix) -> bool:
        """Exact equality of shape, sort order and arrays."""
        return (self.shape == other.shape and self.sort_order is other.sort_order
                and np.array_equal(self.row_idx, other.row_idx)
                and np.array_equal(self.col_idx, other.col_idx)
                and np.array_equal(self.val, other.val))


def _is_lex_sorted(primary: np.ndarray, secondary: np.ndarray) -> bool:
    if primary.size < 2:
        return True
    dp = np.diff(primary)
    if np.any(dp < 0):
        return False
    return not np.any((dp == 0) & (np.diff(secondary) < 0))


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Compressed sparse row matrix."""

    m: int
    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        m, n = _check_dims(self.m, self.n)
        ptr = _frozen(self.row_ptr, INDEX_DTYPE)
        col = _frozen(self.col_idx, INDEX_DTYPE)
        val = _frozen(self.val, VALUE_DTYPE)
        if col.size != val.size:
            raise FormatError("col_idx and val must have equal length")
        _check_ptr(ptr, m + 1, val.size, "row_ptr")
        _check_range(col, n, "column")
        _check_strictly_increasing_segments(ptr, col, "col_idx")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "row_ptr", ptr)
        object.__setattr__(self, "col_idx", col)
        object.__setattr__(self, "val", val)

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    def same_as(self, other: CsrMatrix) -> bool:
        return (self.shape == other.shape
                and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_idx, other.col_idx)
                and np.array_equal(self.val, other.val))


@dataclass(frozen=True, eq=False)
class CscMatrix:
    """Compressed sparse column matrix."""

    m: int
    n: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        m, n = _check_dims(self.m, self.n)
        ptr = _frozen(self.col_ptr, INDEX_DTYPE)
        row = _frozen(self.row_idx, INDEX_DTYPE)
        val = _frozen(self.val, VALUE_DTYPE)
        if row.size != val.size:
            raise FormatError("row_idx and val must have equal length")
        _check_ptr(ptr, n + 1, val.size, "col_ptr")
        _check_range(row, m, "row")
        _check_strictly_increasing_segments(ptr, row, "row_idx")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "col_ptr", ptr)
        object.__setattr__(self, "row_idx", row)
        object.__setattr__(self, "val", val)

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    def same_as(self, other: CscMatrix) -> bool:
        return (self.shape == other.shape
                and np.array_equal(self.col_ptr, other.col_ptr)
                and np.array_equal(self.row_idx, other.row_idx)
                and np.array_equal(self.val, other.val))


SparseMatrix = CooMatrix | CsrMatrix | CscMatrix


# --- conversions -----------------------------------------------------------

def _compress(major: np.ndarray, size: int) -> np.ndarray:
    ptr = np.zeros(size + 1, dtype=INDEX_DTYPE)
    np.cumsum(np.bincount(major, minlength=size), out=ptr[1:])
    return ptr


def coo_to_csr(a: CooMatrix) -> CsrMatrix:
    """Counting sort by row followed by a prefix sum over the row counts.

    Examples
    --------
    >>> e = CooMatrix(4, 4, [0, 0, 1, 3, 3], [0, 2, 1, 0, 3], [1., 2., 3., 4., 5.])
    >>> coo_to_csr(e).row_ptr.tolist()
    [0, 2, 3, 3, 5]
    """
    a = a.sorted_by_row()
    return CsrMatrix(a.m, a.n, _compress(a.row_idx, a.m), a.col_idx, a.val)


def coo_to_csc(a: CooMatrix) -> CscMatrix:
    if a.sort_order is SortOrder.BY_COLUMN:
        col, row, val = a.col_idx, a.row_idx, a.val
    else:
        order = np.lexsort((a.row_idx, a.col_idx))
        col, row, val = a.col_idx[order], a.row_idx[order], a.val[order]
    return CscMatrix(a.m, a.n, _compress(col, a.n), row, val)


def _transpose_compressed(ptr, minor, val, n_minor):
    # Stable sort by minor index keeps majors ascending inside each new segment.
    order = np.argsort(minor, kind="stable")
    major = _expand_ptr(ptr)
    return _compress(minor, n_minor), major[order], val[order]


def csr_to_csc(a: CsrMatrix) -> CscMatrix:
    """Transpose the compressed structure: CSC of ``A`` is CSR of ``A^T``."""
    col_ptr, row_idx, val = _transpose_compressed(a.row_ptr, a.col_idx, a.val, a.n)
    return CscMatrix(a.m, a.n, col_ptr, row_idx, val)


def csc_to_csr(a: CscMatrix) -> CsrMatrix:
    row_ptr, col_idx, val = _transpose_compressed(a.col_ptr, a.row_idx, a.val, a.m)
    return CsrMatrix(a.m, a.n, row_ptr, col_idx, val)


def csr_to_coo(a: CsrMatrix) -> CooMatrix:
    return CooMatrix(a.m, a.n, _expand_ptr(a.row_ptr), a.col_idx, a.val, SortOrder.BY_ROW)


def csc_to_coo(a: CscMatrix) -> CooMatrix:
    return CooMatrix(a.m, a.n, a.row_idx, _expand_ptr(a.col_ptr), a.val, SortOrder.BY_COLUMN)


def to_coo(a: SparseMatrix) -> CooMatrix:
    if isinstance(a, CooMatrix):
        return a
    if isinstance(a, CsrMatrix):
        return csr_to_coo(a)
    return csc_to_coo(a)


def to_csr(a: SparseMatrix) -> CsrMatrix:
    if isinstance(a, CsrMatrix):
        return a
    if isinstance(a, CscMatrix):
        return csc_to_csr(a)
    return coo_to_csr(a)


def to_csc(a: SparseMatrix) -> CscMatrix:
    if isinstance(a, CscMatrix):
        return a
    if isinstance(a, CsrMatrix):
        return csr_to_csc(a)
    return coo_to_csc(a)


# --- reference kernels -----------------------------------------------------

def _check_vectors(a, x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=VALUE_DTYPE).reshape(-1)
    y = np.asarray(y, dtype=VALUE_DTYPE).reshape(-1)
    if x.size != a.n:
        raise DimensionError(f"x has length {x.size}, matrix has {a.n} columns")
    if y.size != a.m:
        raise DimensionError(f"y has length {y.size}, matrix has {a.m} rows")
    return x, y


def scatter_sum(target: np.ndarray, weights: np.ndarray, size: int) -> np.ndarray:
    """``out[target[k]] += weights[k]`` for k in storage order, starting from 0.

    ``np.bincount`` walks its input front to back, so the per-slot summation
    order is exactly the storage order. Every kernel in the package goes
    through this helper, which is what makes single-partition execution
    bit-identical to the reference kernels.
    """
    if target.size == 0:
        return np.zeros(size, dtype=VALUE_DTYPE)
    return np.bincount(target, weights=weights, minlength=size)


def _finish(acc, y, alpha, beta):
    return alpha * acc + beta * y


def spmv_csr_ref(a: CsrMatrix, x, y, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
    """``alpha * A @ x + beta * y`` with each row summed left to right.

    Examples
    --------
    >>> e = coo_to_csr(CooMatrix(4, 4, [0, 0, 1, 3, 3], [0, 2, 1, 0, 3], [1., 2., 3., 4., 5.]))
    >>> spmv_csr_ref(e, [1, 1, 1, 1], [1, 1, 1, 1], 2.0, 10.0).tolist()
    [16.0, 16.0, 10.0, 28.0]
    """
    x, y = _check_vectors(a, x, y)
    acc = scatter_sum(_expand_ptr(a.row_ptr), a.val * x[a.col_idx], a.m)
    return _finish(acc, y, alpha, beta)


def spmv_csc_ref(a: CscMatrix, x, y, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
    """Column-major scatter: every column ``j`` adds ``val * x[j]`` into rows."""
    x, y = _check_vectors(a, x, y)
    acc = scatter_sum(a.row_idx, a.val * x[_expand_ptr(a.col_ptr)], a.m)
    return _finish(acc, y, alpha, beta)


def spmv_coo_ref(a: CooMatrix, x, y, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
    """Single pass over the triplets in storage order."""
    x, y = _check_vectors(a, x, y)
    acc = scatter_sum(a.row_idx, a.val * x[a.col_idx], a.m)
    return _finish(acc, y, alpha, beta)


def spmv_ref(a: SparseMatrix, x, y, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
    """Dispatch to the reference kernel matching ``a``'s format."""
    if isinstance(a, CsrMatrix):
        return spmv_csr_ref(a, x, y, alpha, beta)
    if isinstance(a, CscMatrix):
        return spmv_csc_ref(a, x, y, alpha, beta)
    return spmv_coo_ref(a, x, y, alpha, beta)


def matrix_stats(a: SparseMatrix) -> dict:
    coo = to_coo(a)
    rows_used = np.unique(coo.row_idx).size
    cols_used = np.unique(coo.col_idx).size
    cells = a.m * a.n
    return {
        "m": a.m,
        "n": a.n,
        "nnz": a.nnz,
        "density": a.nnz / cells if cells else 0.0,
        "empty_rows": a.m - rows_used,
        "empty_cols": a.n - cols_used,
    }
