"""Partial sparse formats and nnz-balanced partitioning.

A partial matrix (pCSR, pCSC, pCOO) is a view of a contiguous range of the
parent's nonzero arrays plus a little boundary metadata. Nothing is copied
from the parent: kernels slice ``val`` / ``col_idx`` / ``row_idx`` at
``start_idx`` directly. Only the compressed formats carry a local pointer
array, and its total size over all partitions is at most ``m + 2 * np``.

Index conventions: ``start_idx`` and ``end_idx`` are inclusive, exactly as in
the published conversion loops; boundary arrays produced by
:func:`nnz_boundaries` are exclusive (partition ``i`` owns
``[b[i], b[i+1])``). An empty partition has ``end_idx == start_idx - 1`` and
its row/column range is the sentinel ``EMPTY``.
"""
from __future__ import annotations

import enum
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PartitionError, PlanMismatchError, UnsupportedOrderError
from .formats import (INDEX_DTYPE, CooMatrix, CscMatrix, CsrMatrix, SortOrder,
                      SparseMatrix)

EMPTY = -1


# --- boundaries ------------------------------------------------------------

def nnz_boundaries(nnz: int, np_: int) -> np.ndarray:
    """Split offsets ``floor(i * nnz / np_)`` for ``i = 0..np_``.

    >>> nnz_boundaries(10, 4).tolist()
    [0, 2, 5, 7, 10]
    """
    nnz, np_ = int(nnz), int(np_)
    if np_ < 1:
        raise PartitionError("number of partitions must be >= 1")
    if nnz < 0:
        raise PartitionError("nnz must be >= 0")
    if nnz * np_ < 2 ** 62:
        return np.arange(np_ + 1, dtype=INDEX_DTYPE) * nnz // np_
    # Python ints: no overflow for very large nnz * np_.
    return np.array([i * nnz // np_ for i in range(np_ + 1)], dtype=INDEX_DTYPE)


def owner_row(row_ptr, idx: int) -> int:
    """The unique row ``r`` with ``row_ptr[r] <= idx < row_ptr[r+1]``.

    Empty rows have zero-width ranges and never own an index.

    >>> owner_row([0, 2, 3, 3, 5], 4)
    3
    """
    row_ptr = np.asarray(row_ptr)
    nnz = int(row_ptr[-1])
    if not 0 <= idx < nnz:
        raise PartitionError(f"nonzero index {idx} outside [0, {nnz})")
    return int(np.searchsorted(row_ptr, idx, side="right")) - 1


def _owners(ptr: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return np.searchsorted(ptr, idx, side="right") - 1


def _check_boundaries(bounds, nnz: int) -> np.ndarray:
    b = np.asarray(bounds, dtype=INDEX_DTYPE)
    if b.ndim != 1 or b.size < 2:
        raise PartitionError("boundaries need at least two entries")
    if b[0] != 0 or b[-1] != nnz:
        raise PlanMismatchError(f"boundaries span [{b[0]}, {b[-1]}), matrix has nnz={nnz}")
    if np.any(np.diff(b) < 0):
        raise PartitionError("boundaries must be non-decreasing")
    return b


# --- partial formats -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PcsrPart:
    """Partial CSR: nonzeros ``start_idx..end_idx`` of a parent CSR matrix.

    ``local_row_ptr`` has ``end_row - start_row + 2`` entries, relative to
    ``start_idx`` and clamped to the partition, so the first and last rows may
    be truncated. ``start_flag`` marks a first row shared with the previous
    partition; whether the last row is shared is read off the next
    partition's flag.
    """

    start_idx: int
    end_idx: int
    start_row: int
    end_row: int
    start_flag: bool
    local_row_ptr: np.ndarray

    @property
    def nnz(self) -> int:
        return self.end_idx - self.start_idx + 1

    @property
    def is_empty(self) -> bool:
        return self.nnz == 0

    @property
    def n_rows(self) -> int:
        return 0 if self.is_empty else self.end_row - self.start_row + 1

    # Global row range kept for merge-back.
    global_start_row = property(lambda self: self.start_row)
    global_end_row = property(lambda self: self.end_row)

    def as_dict(self) -> dict:
        return {"start_idx": self.start_idx, "end_idx": self.end_idx,
                "start_row": self.start_row, "end_row": self.end_row,
                "start_flag": self.start_flag}


@dataclass(frozen=True, eq=False)
class PcscPart:
    """Partial CSC, the column-wise mirror of :class:`PcsrPart`."""

    start_idx: int
    end_idx: int
    start_col: int
    end_col: int
    start_flag: bool
    local_col_ptr: np.ndarray

    @property
    def nnz(self) -> int:
        return self.end_idx - self.start_idx + 1

    @property
    def is_empty(self) -> bool:
        return self.nnz == 0

    @property
    def n_cols(self) -> int:
        return 0 if self.is_empty else self.end_col - self.start_col + 1

    global_start_col = property(lambda self: self.start_col)
    global_end_col = property(lambda self: self.end_col)

    def as_dict(self) -> dict:
        return {"start_idx": self.start_idx, "end_idx": self.end_idx,
                "start_col": self.start_col, "end_col": self.end_col,
                "start_flag": self.start_flag}


@dataclass(frozen=True, eq=False)
class PcooPart:
    """Partial row-sorted COO. No local pointer array is needed."""

    start_idx: int
    end_idx: int
    start_row: int
    end_row: int
    start_flag: bool

    @property
    def nnz(self) -> int:
        return self.end_idx - self.start_idx + 1

    @property
    def is_empty(self) -> bool:
        return self.nnz == 0

    @property
    def n_rows(self) -> int:
        return 0 if self.is_empty else self.end_row - self.start_row + 1

    def as_dict(self) -> dict:
        return {"start_idx": self.start_idx, "end_idx": self.end_idx,
                "start_row": self.start_row, "end_row": self.end_row,
                "start_flag": self.start_flag}


Part = PcsrPart | PcscPart | PcooPart


def _compressed_part(ptr: np.ndarray, start: int, stop: int):
    """One partition of a compressed matrix over nonzeros ``[start, stop)``.

    Returns ``(start_idx, end_idx, first, last, flag, local_ptr)``.
    """
    if stop <= start:
        local = np.zeros(2, dtype=INDEX_DTYPE)
        local.flags.writeable = False
        return start, start - 1, EMPTY, EMPTY, False, local
    first, last = (int(v) for v in _owners(ptr, np.array([start, stop - 1])))
    flag = bool(start > ptr[first])
    local = np.clip(ptr[first:last + 2], start, stop) - start
    local.flags.writeable = False
    return start, stop - 1, first, last, flag, local


def _compressed_parts(ptr: np.ndarray, b: np.ndarray):
    """All partitions at once: one vectorised search for every boundary."""
    starts, stops = b[:-1], b[1:]
    live = stops > starts
    firsts = np.where(live, _owners(ptr, starts), EMPTY)
    lasts = np.where(live, _owners(ptr, np.maximum(stops - 1, 0)), EMPTY)
    flags = live & (starts > ptr[np.maximum(firsts, 0)])
    out = []
    for s, e, f, z, flag, ok in zip(starts.tolist(), stops.tolist(), firsts.tolist(),
                                    lasts.tolist(), flags.tolist(), live.tolist()):
        if ok:
            local = np.minimum(np.maximum(ptr[f:z + 2], s), e) - s
        else:
            local = np.zeros(2, dtype=INDEX_DTYPE)
        local.flags.writeable = False
        out.append((s, e - 1, f, z, flag, local))
    return out


def _build(ptr: np.ndarray, b: np.ndarray, cls, workers: int | None):
    n_parts = b.size - 1
    if workers and workers > 1 and n_parts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(
                lambda i: cls(*_compressed_part(ptr, int(b[i]), int(b[i + 1]))), range(n_parts)))
    return [cls(*fields) for fields in _compressed_parts(ptr, b)]


def _map_parts(fn, bounds: np.ndarray, workers: int | None):
    idx = range(bounds.size - 1)
    if workers and workers > 1 and len(idx) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, idx))
    return [fn(i) for i in idx]


def pcsr_from_boundaries(a: CsrMatrix, bounds, workers: int | None = None) -> list[PcsrPart]:
    return _build(a.row_ptr, _check_boundaries(bounds, a.nnz), PcsrPart, workers)


def pcsc_from_boundaries(a: CscMatrix, bounds, workers: int | None = None) -> list[PcscPart]:
    return _build(a.col_ptr, _check_boundaries(bounds, a.nnz), PcscPart, workers)


def _require_row_sorted(a: CooMatrix) -> None:
    if a.sort_order is not SortOrder.BY_ROW:
        raise UnsupportedOrderError(
            f"pCOO partitioning needs row-sorted entries, got {a.sort_order.value}")


def pcoo_from_boundaries(a: CooMatrix, bounds, workers: int | None = None) -> list[PcooPart]:
    _require_row_sorted(a)
    b = _check_boundaries(bounds, a.nnz)
    row = a.row_idx
    return _map_parts(lambda i: _pcoo_part(row, int(b[i]), int(b[i + 1])), b, workers)


def _pcoo_part(row: np.ndarray, start: int, stop: int) -> PcooPart:
    if stop <= start:
        return PcooPart(start, start - 1, EMPTY, EMPTY, False)
    flag = start > 0 and row[start - 1] == row[start]
    return PcooPart(start, stop - 1, int(row[start]), int(row[stop - 1]), bool(flag))


def part_for_range(a: SparseMatrix, start: int, stop: int) -> Part:
    """Descriptor for the single partition covering nonzeros ``[start, stop)``."""
    start, stop = int(start), int(stop)
    if not 0 <= start <= stop <= a.nnz:
        raise PartitionError(f"range [{start}, {stop}) outside [0, {a.nnz})")
    if isinstance(a, CsrMatrix):
        return PcsrPart(*_compressed_part(a.row_ptr, start, stop))
    if isinstance(a, CscMatrix):
        return PcscPart(*_compressed_part(a.col_ptr, start, stop))
    _require_row_sorted(a)
    return _pcoo_part(a.row_idx, start, stop)


def csr_to_pcsr(a: CsrMatrix, np_: int, workers: int | None = None) -> list[PcsrPart]:
    """Split ``a`` into ``np_`` nnz-balanced pCSR partitions.

    Every partition is computed independently, so ``workers > 1`` runs them
    on a thread pool with bit-identical output.

    Examples
    --------
    >>> from psparse.formats import CooMatrix, coo_to_csr
    >>> e = coo_to_csr(CooMatrix(4, 4, [0, 0, 1, 3, 3], [0, 2, 1, 0, 3], [1., 2., 3., 4., 5.]))
    >>> [p.local_row_ptr.tolist() for p in csr_to_pcsr(e, 2)]
    [[0, 2], [0, 1, 1, 3]]
    """
    return pcsr_from_boundaries(a, nnz_boundaries(a.nnz, np_), workers)


def csc_to_pcsc(a: CscMatrix, np_: int, workers: int | None = None) -> list[PcscPart]:
    return pcsc_from_boundaries(a, nnz_boundaries(a.nnz, np_), workers)


def coo_to_pcoo(a: CooMatrix, np_: int, workers: int | None = None) -> list[PcooPart]:
    """Split a row-sorted COO matrix; boundary rows are read off ``row_idx``."""
    _require_row_sorted(a)
    return pcoo_from_boundaries(a, nnz_boundaries(a.nnz, np_), workers)


def check_tiling(parts, nnz: int) -> None:
    """Raise unless the partitions' index ranges tile ``[0, nnz)`` in order."""
    expect = 0
    for i, p in enumerate(parts):
        if p.start_idx != expect or p.end_idx < p.start_idx - 1:
            raise PartitionError(f"partition {i} does not continue at index {expect}")
        expect = p.end_idx + 1
    if expect != nnz:
        raise PartitionError(f"partitions cover [0, {expect}), parent has nnz={nnz}")


_UNSET = np.iinfo(INDEX_DTYPE).max


def merge_parts_to_csr(parts: list[PcsrPart], parent: CsrMatrix) -> CsrMatrix:
    """Rebuild the global CSR from pCSR partitions.

    Only the parent's shape and its ``col_idx``/``val`` arrays are used; the
    row pointer is reassembled from the partitions' global row ranges,
    local pointers and start flags.
    """
    check_tiling(parts, parent.nnz)
    live = [p for p in parts if p.end_idx >= p.start_idx]
    m = parent.m
    row_ptr = np.full(m + 1, _UNSET, dtype=INDEX_DTYPE)
    row_ptr[m] = parent.nnz
    for k, p in enumerate(live):
        if p.end_row >= m or p.local_row_ptr.size != p.n_rows + 1:
            raise PartitionError("partition does not belong to this parent")
        if k and p.start_row < live[k - 1].end_row or (
                k and p.start_row == live[k - 1].end_row and not p.start_flag):
            raise PartitionError("partitions overlap outside a shared boundary row")
        shared_tail = k + 1 < len(live) and live[k + 1].start_flag
        lo = 1 if p.start_flag else 0
        hi = p.n_rows if shared_tail else p.n_rows + 1
        row_ptr[p.start_row + lo:p.start_row + hi] = p.start_idx + p.local_row_ptr[lo:hi]
    # Rows never written are empty: they inherit the next row start.
    row_ptr = np.minimum.accumulate(row_ptr[::-1])[::-1]
    return CsrMatrix(m, parent.n, row_ptr, parent.col_idx, parent.val)


def aux_offsets(parts) -> int:
    """Total length of all local pointer arrays (the only non-O(1) metadata)."""
    total = 0
    for p in parts:
        if isinstance(p, PcsrPart):
            total += p.local_row_ptr.size
        elif isinstance(p, PcscPart):
            total += p.local_col_ptr.size
    return total


# --- topology and plans ----------------------------------------------------

@dataclass(frozen=True)
class DeviceGroup:
    label: str
    device_count: int


@dataclass(frozen=True)
class DeviceTopology:
    """Groups of devices, e.g. NUMA nodes each hosting some GPUs.

    Device ids are numbered group by group starting from 0.
    """

    groups: tuple[DeviceGroup, ...]

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise PartitionError("topology needs at least one group")
        for g in groups:
            if int(g.device_count) < 1:
                raise PartitionError(f"group {g.label!r} has no devices")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_counts(cls, counts) -> DeviceTopology:
        return cls(tuple(DeviceGroup(f"node{i}", int(c)) for i, c in enumerate(counts)))

    @classmethod
    def parse(cls, text: str) -> DeviceTopology:
        """``"2x3"`` (2 groups of 3), ``"8"`` (one group) or ``"4,2"`` (explicit counts)."""
        text = text.strip().lower()
        m = re.fullmatch(r"(\d+)x(\d+)", text)
        if m:
            return cls.from_counts([int(m.group(2))] * int(m.group(1)))
        if re.fullmatch(r"\d+(,\d+)*", text):
            return cls.from_counts(int(t) for t in text.split(","))
        raise PartitionError(f"cannot parse topology {text!r}; expected e.g. '2x4'")

    @classmethod
    def spread(cls, devices: int, groups: int = 1) -> DeviceTopology:
        """``devices`` spread as evenly as possible over at most ``groups`` groups."""
        groups = max(1, min(groups, devices))
        return cls.from_counts(
            [(g + 1) * devices // groups - g * devices // groups for g in range(groups)])

    @property
    def total_devices(self) -> int:
        return sum(g.device_count for g in self.groups)

    def device_offsets(self) -> list[int]:
        out = [0]
        for g in self.groups:
            out.append(out[-1] + g.device_count)
        return out

    def group_of(self, device: int) -> int:
        return int(np.searchsorted(self.device_offsets(), device, side="right")) - 1

    def describe(self) -> str:
        counts = {g.device_count for g in self.groups}
        if len(counts) == 1:
            return f"{len(self.groups)}x{counts.pop()}"
        return ",".join(str(g.device_count) for g in self.groups)

    def as_dict(self) -> dict:
        return {"groups": [{"label": g.label, "devices": g.device_count} for g in self.groups]}

    @classmethod
    def from_dict(cls, d: dict) -> DeviceTopology:
        return cls(tuple(DeviceGroup(g["label"], int(g["devices"])) for g in d["groups"]))


class PartFormat(enum.Enum):
    PCSR = "pcsr"
    PCSC = "pcsc"
    PCOO = "pcoo-row"

    @classmethod
    def of(cls, a: SparseMatrix) -> PartFormat:
        if isinstance(a, CsrMatrix):
            return cls.PCSR
        if isinstance(a, CscMatrix):
            return cls.PCSC
        return cls.PCOO

    @classmethod
    def parse(cls, text: str) -> PartFormat:
        text = text.lower()
        aliases = {"csr": cls.PCSR, "pcsr": cls.PCSR, "csc": cls.PCSC, "pcsc": cls.PCSC,
                   "coo": cls.PCOO, "pcoo": cls.PCOO, "pcoo-row": cls.PCOO}
        try:
            return aliases[text]
        except KeyError:
            raise PartitionError(f"unknown format {text!r}") from None


@dataclass(frozen=True, eq=False)
class PartitionPlan:
    """Two-level assignment of nonzero ranges to device groups and devices.

    ``boundaries`` holds the exclusive split offsets of all partitions,
    ordered group by group; ``devices[i]`` is the device running partition
    ``i``. ``parts`` is empty until the plan is bound to a matrix with
    :func:`materialize`.
    """

    fmt: PartFormat
    nnz: int
    topology: DeviceTopology
    boundaries: np.ndarray
    group_ranges: tuple[tuple[int, int], ...]
    devices: tuple[int, ...]
    kind: str = "balanced"
    parts: tuple = field(default=())

    @property
    def n_parts(self) -> int:
        return len(self.devices)

    def parts_of_device(self, device: int) -> list[int]:
        return [i for i, d in enumerate(self.devices) if d == device]

    def part_sizes(self) -> np.ndarray:
        return np.diff(self.boundaries)

    def device_nnz(self) -> np.ndarray:
        out = np.zeros(self.topology.total_devices, dtype=INDEX_DTYPE)
        np.add.at(out, np.asarray(self.devices, dtype=np.intp), self.part_sizes())
        return out

    def as_dict(self) -> dict:
        d = {
            "format": self.fmt.value,
            "kind": self.kind,
            "nnz": self.nnz,
            "boundaries": self.boundaries.tolist(),
            "group_ranges": [list(r) for r in self.group_ranges],
            "devices": list(self.devices),
            "topology": self.topology.as_dict(),
        }
        if self.parts:
            d["parts"] = [dict(p.as_dict(), device=dev) for p, dev in zip(self.parts, self.devices)]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> PartitionPlan:
        topo = DeviceTopology.from_dict(d["topology"])
        fmt = PartFormat(d["format"])
        nnz = int(d["nnz"])
        bounds = _check_boundaries(d["boundaries"], nnz)
        devices = tuple(int(v) for v in d.get("devices", range(bounds.size - 1)))
        if len(devices) != bounds.size - 1:
            raise PartitionError("devices list does not match boundaries")
        ranges = tuple(tuple(int(v) for v in r) for r in d.get("group_ranges", [(0, nnz)]))
        plan = cls(fmt, nnz, topo, bounds, ranges, devices, d.get("kind", "balanced"))
        plan.validate()
        return plan

    @classmethod
    def from_json(cls, text: str) -> PartitionPlan:
        return cls.from_dict(json.loads(text))

    def validate(self) -> None:
        b = _check_boundaries(self.boundaries, self.nnz)
        if b.size - 1 != len(self.devices):
            raise PartitionError("one device id per partition required")
        total = self.topology.total_devices
        if any(not 0 <= d < total for d in self.devices):
            raise PartitionError("device id outside topology")
        if len(self.group_ranges) != len(self.topology.groups):
            raise PartitionError("one nnz range per group required")
        lo = 0
        for g, (a, z) in enumerate(self.group_ranges):
            if a != lo or z < a:
                raise PartitionError(f"group {g} range [{a}, {z}) is not contiguous")
            lo = z
            owned = [i for i, d in enumerate(self.devices) if self.topology.group_of(d) == g]
            if owned and (b[owned[0]] != a or b[owned[-1] + 1] != z):
                raise PartitionError(f"group {g} partitions do not tile its range")
        if lo != self.nnz:
            raise PartitionError("group ranges do not cover [0, nnz)")


def two_level_plan(nnz: int, topo: DeviceTopology, parts_per_device: int = 1,
                   fmt: PartFormat = PartFormat.PCSR) -> PartitionPlan:
    """NUMA-style plan: split among groups by device count, then among devices.

    Group ``g`` with device prefix ``P_g`` gets ``[floor(nnz*P_g/D),
    floor(nnz*P_{g+1}/D))``. Inside the group, partition boundaries are the
    floor rule evaluated at global partition positions, which tiles the
    group range exactly and makes the flattened plan identical to
    ``nnz_boundaries(nnz, D * parts_per_device)``. Each group's boundaries
    depend only on ``(nnz, P_g, d_g, D)`` and can be computed independently.

    >>> p = two_level_plan(12, DeviceTopology.parse("2x3"))
    >>> p.group_ranges, p.part_sizes().tolist()
    (((0, 6), (6, 12)), [2, 2, 2, 2, 2, 2])
    """
    nnz, ppd = int(nnz), int(parts_per_device)
    if ppd < 1:
        raise PartitionError("parts_per_device must be >= 1")
    if nnz < 0:
        raise PartitionError("nnz must be >= 0")
    total = topo.total_devices * ppd
    offsets = topo.device_offsets()
    bounds, devices, ranges = [], [], []
    for g, group in enumerate(topo.groups):
        first = offsets[g] * ppd
        count = group.device_count * ppd
        ranges.append((first * nnz // total, (first + count) * nnz // total))
        bounds.extend((first + i) * nnz // total for i in range(count))
        devices.extend(offsets[g] + i // ppd for i in range(count))
    bounds.append(nnz)
    return PartitionPlan(fmt, nnz, topo, np.array(bounds, dtype=INDEX_DTYPE),
                         tuple(ranges), tuple(devices), "balanced")


def _line_ptr(a: SparseMatrix) -> tuple[np.ndarray, int]:
    """Pointer over the partitioning axis: rows for CSR/COO, columns for CSC."""
    if isinstance(a, CsrMatrix):
        return a.row_ptr, a.m
    if isinstance(a, CscMatrix):
        return a.col_ptr, a.n
    _require_row_sorted(a)
    return np.searchsorted(a.row_idx, np.arange(a.m + 1), side="left").astype(INDEX_DTYPE), a.m


def block_plan(a: SparseMatrix, topo: DeviceTopology, parts_per_device: int = 1) -> PartitionPlan:
    """Baseline plan: equal numbers of rows (CSR/COO) or columns (CSC) per partition,
    ignoring where the nonzeros are."""
    ptr, lines = _line_ptr(a)
    ppd = int(parts_per_device)
    total = topo.total_devices * ppd
    line_bounds = np.array([i * lines // total for i in range(total + 1)], dtype=np.intp)
    bounds = ptr[line_bounds].astype(INDEX_DTYPE)
    devices = tuple(i // ppd for i in range(total))
    offsets = topo.device_offsets()
    ranges = tuple((int(bounds[offsets[g] * ppd]), int(bounds[offsets[g + 1] * ppd]))
                   for g in range(len(topo.groups)))
    return PartitionPlan(PartFormat.of(a), a.nnz, topo, bounds, ranges, devices, "block")


def materialize(plan: PartitionPlan, a: SparseMatrix, workers: int | None = None) -> PartitionPlan:
    """Bind ``plan`` to matrix ``a`` by building the partial-format descriptors."""
    if PartFormat.of(a) is not plan.fmt:
        raise PlanMismatchError(f"plan is {plan.fmt.value}, matrix is {type(a).__name__}")
    if plan.nnz != a.nnz:
        raise PlanMismatchError(f"plan covers nnz={plan.nnz}, matrix has nnz={a.nnz}")
    if plan.fmt is PartFormat.PCSR:
        parts = pcsr_from_boundaries(a, plan.boundaries, workers)
    elif plan.fmt is PartFormat.PCSC:
        parts = pcsc_from_boundaries(a, plan.boundaries, workers)
    else:
        parts = pcoo_from_boundaries(a, plan.boundaries, workers)
    return replace(plan, parts=tuple(parts))


def balance_stats(plan: PartitionPlan) -> dict:
    sizes = plan.part_sizes()
    return {"parts": int(sizes.size), "min_nnz": int(sizes.min()), "max_nnz": int(sizes.max()),
            "mean_nnz": float(sizes.mean()), "empty_parts": int((sizes == 0).sum())}
