"""Multi-worker SpMV over partial formats.

One worker thread stands in for one device. Each worker runs the plain
single-matrix kernel on its partitions, reading the parent's arrays through
zero-copy slices, and returns the pure product ``A_i @ x`` with neither
``alpha`` nor ``beta`` applied. Both scalars are applied exactly once per row
in the merge, so rows split across partitions never see ``beta * y`` twice.

Row-based formats (pCSR, row-sorted pCOO) produce dense segments over their
row range; shared boundary rows are summed in a short serial fix-up after the
segments are copied into place. pCSC produces full-length accumulators that
are reduced with a balanced binary tree in device order.
"""
from __future__ import annotations

import enum
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, PartitionError, PlanMismatchError
from .formats import (VALUE_DTYPE, CooMatrix, CscMatrix, CsrMatrix, SparseMatrix,
                      scatter_sum)
from .partition import (PartFormat, PartitionPlan, PcooPart, PcscPart, PcsrPart,
                        materialize, part_for_range)


class Variant(enum.Enum):
    """Execution strategies compared by the benchmark studies.

    ``BASELINE`` builds partitions and merges on the calling thread;
    ``PSTAR`` builds partitions on the device workers and copies row segments
    in parallel, but sums column partials sequentially; ``PSTAR_OPT`` fuses
    partition construction into each device task (no barrier between
    partitioning and compute) and reduces column partials with a parallel
    binary tree.
    """

    BASELINE = "baseline"
    PSTAR = "p*"
    PSTAR_OPT = "p*-opt"


@dataclass
class PartialResult:
    """Output of one partition kernel.

    Row-based: ``values`` covers global rows ``start .. start+len-1``.
    Column-based: ``values`` has length m and ``start`` is 0.
    """

    device: int
    part: int
    row_based: bool
    start: int
    values: np.ndarray
    start_flag: bool = False


# --- kernels ---------------------------------------------------------------

def _segment_ids(local_ptr: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(local_ptr.size - 1), np.diff(local_ptr))


def kernel_pcsr(part: PcsrPart, a: CsrMatrix, x: np.ndarray, device: int = 0,
                index: int = 0) -> PartialResult:
    """CSR kernel on ``val[start_idx:]`` / ``col_idx[start_idx:]`` with the local row pointer."""
    if part.is_empty:
        return PartialResult(device, index, True, 0, np.zeros(0), False)
    s, e = part.start_idx, part.end_idx + 1
    prod = a.val[s:e] * x[a.col_idx[s:e]]
    seg = scatter_sum(_segment_ids(part.local_row_ptr), prod, part.n_rows)
    return PartialResult(device, index, True, part.start_row, seg, part.start_flag)


def kernel_pcoo(part: PcooPart, a: CooMatrix, x: np.ndarray, device: int = 0,
                index: int = 0) -> PartialResult:
    if part.is_empty:
        return PartialResult(device, index, True, 0, np.zeros(0), False)
    s, e = part.start_idx, part.end_idx + 1
    prod = a.val[s:e] * x[a.col_idx[s:e]]
    seg = scatter_sum(a.row_idx[s:e] - part.start_row, prod, part.n_rows)
    return PartialResult(device, index, True, part.start_row, seg, part.start_flag)


def kernel_pcsc(part: PcscPart, a: CscMatrix, x: np.ndarray, device: int = 0,
                index: int = 0) -> PartialResult:
    """Scatter the partition's (possibly truncated) columns into a length-m accumulator."""
    if part.is_empty:
        return PartialResult(device, index, False, 0, np.zeros(a.m), False)
    s, e = part.start_idx, part.end_idx + 1
    cols = part.start_col + _segment_ids(part.local_col_ptr)
    acc = scatter_sum(a.row_idx[s:e], a.val[s:e] * x[cols], a.m)
    return PartialResult(device, index, False, 0, acc, part.start_flag)


_KERNELS = {PartFormat.PCSR: kernel_pcsr, PartFormat.PCSC: kernel_pcsc,
            PartFormat.PCOO: kernel_pcoo}


# --- merging ---------------------------------------------------------------

def _check_row_partials(partials, m: int) -> list[PartialResult]:
    live = sorted((p for p in partials if p.values.size), key=lambda p: p.part)
    prev_end = -1
    for p in live:
        if not p.row_based:
            raise PartitionError("row-based merge received a column partial")
        end = p.start + p.values.size - 1
        if end >= m:
            raise DimensionError(f"segment ends at row {end}, y has {m} rows")
        if p.start < prev_end or (p.start == prev_end and not p.start_flag) or (
                p.start_flag and p.start != prev_end):
            raise PartitionError(f"partition {p.part} overlaps its predecessor")
        prev_end = end
    return live


def _place_segment(total: np.ndarray, p: PartialResult) -> None:
    """Copy the rows this partial owns outright; a flagged first row is left for fix-up."""
    skip = 1 if p.start_flag else 0
    total[p.start + skip:p.start + p.values.size] = p.values[skip:]


def _row_total(partials, m: int, pool: ThreadPoolExecutor | None = None) -> np.ndarray:
    live = _check_row_partials(partials, m)
    total = np.zeros(m, dtype=VALUE_DTYPE)
    if pool is not None and len(live) > 1:
        list(pool.map(lambda p: _place_segment(total, p), live))
    else:
        for p in live:
            _place_segment(total, p)
    # At most np - 1 shared rows; applied in partition order.
    for p in live:
        if p.start_flag:
            total[p.start] += p.values[0]
    return total


def merge_row_based(partials, y_in, alpha: float, beta: float, m: int | None = None,
                    pool: ThreadPoolExecutor | None = None) -> np.ndarray:
    """``y = alpha * (sum of segments covering each row) + beta * y_in``.

    Interior rows are copied from their single owner, rows shared across a
    partition boundary (next partition's ``start_flag`` set) are summed.
    """
    y_in = np.asarray(y_in, dtype=VALUE_DTYPE)
    m = y_in.size if m is None else m
    if y_in.size != m:
        raise DimensionError(f"y has length {y_in.size}, expected {m}")
    return alpha * _row_total(partials, m, pool) + beta * y_in


def tree_sum(vectors: list[np.ndarray], pool: ThreadPoolExecutor | None = None) -> np.ndarray:
    """Balanced pairwise reduction; pairing depends only on list order."""
    level = list(vectors)
    while len(level) > 1:
        pairs = [(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if pool is not None and len(pairs) > 1:
            summed = list(pool.map(lambda ab: ab[0] + ab[1], pairs))
        else:
            summed = [a + b for a, b in pairs]
        if len(level) % 2:
            summed.append(level[-1])
        level = summed
    return level[0]


def _sequential_sum(vectors: list[np.ndarray]) -> np.ndarray:
    total = vectors[0].copy()
    for v in vectors[1:]:
        total += v
    return total


def merge_col_based(partials, y_in, alpha: float, beta: float, tree: bool = True,
                    pool: ThreadPoolExecutor | None = None) -> np.ndarray:
    """``y = alpha * sum(partials) + beta * y_in`` over length-m accumulators.

    Partials are ordered by device id, then partition index, before reduction.
    """
    y_in = np.asarray(y_in, dtype=VALUE_DTYPE)
    ordered = sorted(partials, key=lambda p: (p.device, p.part))
    for p in ordered:
        if p.row_based or p.values.size != y_in.size:
            raise DimensionError(f"partial of length {p.values.size}, y has {y_in.size}")
    if not ordered:
        return alpha * np.zeros_like(y_in) + beta * y_in
    vectors = [p.values for p in ordered]
    total = tree_sum(vectors, pool) if tree else _sequential_sum(vectors)
    return alpha * total + beta * y_in


# --- execution -------------------------------------------------------------

@dataclass
class DeviceStat:
    id: int
    group: int
    nnz: int
    rows: int
    kernel_ms: float


@dataclass
class ExecReport:
    """Timing breakdown of one :func:`execute` call. Times are milliseconds."""

    format: str
    np: int
    topology: str
    variant: str
    partition_ms: float
    kernel_ms: float
    merge_ms: float
    total_ms: float
    per_device: list[DeviceStat] = field(default_factory=list)

    @property
    def partition_overhead(self) -> float:
        return self.partition_ms / self.total_ms if self.total_ms > 0 else 0.0

    @property
    def merge_overhead(self) -> float:
        return self.merge_ms / self.total_ms if self.total_ms > 0 else 0.0

    def as_dict(self) -> dict:
        return {
            "format": self.format, "np": self.np, "topology": self.topology,
            "variant": self.variant,
            "partition_ms": self.partition_ms, "kernel_ms": self.kernel_ms,
            "merge_ms": self.merge_ms, "total_ms": self.total_ms,
            "partition_overhead": self.partition_overhead,
            "merge_overhead": self.merge_overhead,
            "per_device": [vars(d).copy() for d in self.per_device],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


_pools: dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()


def device_pool(workers: int) -> ThreadPoolExecutor:
    """Shared pool with one thread per simulated device, reused across calls."""
    with _pools_lock:
        pool = _pools.get(workers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix=f"dev{workers}")
            _pools[workers] = pool
        return pool


def _ms(t0: float, t1: float) -> float:
    return (t1 - t0) * 1e3


def _run_device(device, indices, plan, a, x, kernel, parts=None):
    t0 = time.perf_counter()
    if parts is None:
        parts = plan.parts
    out = [kernel(parts[i], a, x, device, i) for i in indices]
    return out, _ms(t0, time.perf_counter())


def _part_rows(part) -> int:
    return part.n_cols if isinstance(part, PcscPart) else part.n_rows


def execute(a: SparseMatrix, x, y, alpha: float, beta: float, plan: PartitionPlan,
            variant: Variant | str = Variant.PSTAR_OPT) -> tuple[np.ndarray, ExecReport]:
    """``alpha * A @ x + beta * y`` distributed according to ``plan``.

    ``plan`` may be unbound (no ``parts``); partition construction is then
    part of the timed run. Returns a new vector; ``y`` is not modified.

    Examples
    --------
    >>> from psparse.formats import CooMatrix, coo_to_csr
    >>> from psparse.partition import DeviceTopology, two_level_plan
    >>> e = coo_to_csr(CooMatrix(4, 4, [0, 0, 1, 3, 3], [0, 2, 1, 0, 3], [1., 2., 3., 4., 5.]))
    >>> plan = two_level_plan(e.nnz, DeviceTopology.parse("1x2"))
    >>> execute(e, [1, 1, 1, 1], [0, 0, 0, 0], 1.0, 0.0, plan)[0].tolist()
    [3.0, 3.0, 0.0, 9.0]
    """
    variant = Variant(variant)
    x = np.asarray(x, dtype=VALUE_DTYPE).reshape(-1)
    y = np.asarray(y, dtype=VALUE_DTYPE).reshape(-1)
    if x.size != a.n:
        raise DimensionError(f"x has length {x.size}, matrix has {a.n} columns")
    if y.size != a.m:
        raise DimensionError(f"y has length {y.size}, matrix has {a.m} rows")
    if PartFormat.of(a) is not plan.fmt:
        raise PlanMismatchError(f"plan is {plan.fmt.value}, matrix is {type(a).__name__}")
    if plan.nnz != a.nnz:
        raise PlanMismatchError(f"plan covers nnz={plan.nnz}, matrix has nnz={a.nnz}")

    topo = plan.topology
    n_dev = topo.total_devices
    pool = device_pool(n_dev)
    kernel = _KERNELS[plan.fmt]
    by_device = [plan.parts_of_device(d) for d in range(n_dev)]
    bound = bool(plan.parts)

    t_start = time.perf_counter()
    if variant is Variant.PSTAR_OPT and not bound:
        # Each device builds exactly its own descriptors, then computes.
        b = plan.boundaries

        def device_task(d):
            t0 = time.perf_counter()
            local = {i: part_for_range(a, b[i], b[i + 1]) for i in by_device[d]}
            t1 = time.perf_counter()
            out, k_ms = _run_device(d, by_device[d], plan, a, x, kernel, local)
            return out, k_ms, _ms(t0, t1), [local[i] for i in by_device[d]]

        results = list(pool.map(device_task, range(n_dev)))
        t_kernels = time.perf_counter()
        partition_ms = max(r[2] for r in results)
        kernel_ms = max(r[1] for r in results)
        parts = [None] * plan.n_parts
        for d, r in enumerate(results):
            for i, p in zip(by_device[d], r[3]):
                parts[i] = p
        outputs = [r[0] for r in results]
        dev_ms = [r[1] for r in results]
    else:
        if not bound and variant is Variant.BASELINE:
            plan = materialize(plan, a)
        elif not bound:
            b = plan.boundaries
            parts = pool.map(lambda i: part_for_range(a, b[i], b[i + 1]), range(plan.n_parts))
            plan = replace(plan, parts=tuple(parts))
        t_parts = time.perf_counter()
        partition_ms = _ms(t_start, t_parts)
        results = list(pool.map(
            lambda d: _run_device(d, by_device[d], plan, a, x, kernel), range(n_dev)))
        t_kernels = time.perf_counter()
        kernel_ms = max(r[1] for r in results)
        parts = list(plan.parts)
        outputs = [r[0] for r in results]
        dev_ms = [r[1] for r in results]

    partials = [p for out in outputs for p in out]
    if plan.fmt is PartFormat.PCSC:
        y_out = merge_col_based(partials, y, alpha, beta,
                                tree=variant is Variant.PSTAR_OPT,
                                pool=pool if variant is Variant.PSTAR_OPT else None)
    else:
        y_out = merge_row_based(partials, y, alpha, beta, m=a.m,
                                pool=None if variant is Variant.BASELINE else pool)
    t_end = time.perf_counter()

    per_device = []
    for d in range(n_dev):
        idx = by_device[d]
        per_device.append(DeviceStat(
            id=d, group=topo.group_of(d),
            nnz=int(sum(parts[i].nnz for i in idx)),
            rows=int(sum(_part_rows(parts[i]) for i in idx)),
            kernel_ms=dev_ms[d]))
    report = ExecReport(
        format=plan.fmt.value, np=plan.n_parts, topology=topo.describe(),
        variant=variant.value, partition_ms=partition_ms, kernel_ms=kernel_ms,
        merge_ms=_ms(t_kernels, t_end), total_ms=_ms(t_start, t_end), per_device=per_device)
    return y_out, report


# --- cost model ------------------------------------------------------------

@dataclass(frozen=True)
class CostModel:
    """Linear device-time model: ``t_fixed + t_per_nnz * nnz + t_per_row * rows``."""

    t_fixed: float = 0.0
    t_per_nnz: float = 1.0
    t_per_row: float = 0.0

    def __post_init__(self):
        if min(self.t_fixed, self.t_per_nnz, self.t_per_row) < 0:
            raise ValueError("cost model coefficients must be >= 0")


@dataclass
class CostResult:
    per_device_time: np.ndarray
    makespan: float
    relative_throughput: float = 1.0


def _device_rows(plan: PartitionPlan) -> np.ndarray:
    rows = np.zeros(plan.topology.total_devices)
    if not plan.parts:
        return rows
    for p, d in zip(plan.parts, plan.devices):
        rows[d] += _part_rows(p)
    return rows


def simulate_cost(plan: PartitionPlan, model: CostModel = CostModel(),
                  reference: PartitionPlan | None = None) -> CostResult:
    """Predicted per-device time and makespan of ``plan``.

    ``relative_throughput`` is ``makespan(reference) / makespan(plan)``, so a
    value below 1 means ``plan`` is slower than ``reference``.
    """
    if model.t_per_row > 0 and not plan.parts and plan.nnz:
        raise PlanMismatchError("row costs need a plan bound to a matrix (see materialize)")
    times = (model.t_fixed + model.t_per_nnz * plan.device_nnz().astype(float)
             + model.t_per_row * _device_rows(plan))
    makespan = float(times.max())
    rel = 1.0
    if reference is not None:
        ref = simulate_cost(reference, model).makespan
        rel = ref / makespan if makespan > 0 else 1.0
    return CostResult(times, makespan, rel)


def relative_throughput(plan: PartitionPlan, reference: PartitionPlan,
                        model: CostModel = CostModel()) -> float:
    return simulate_cost(plan, model, reference).relative_throughput
