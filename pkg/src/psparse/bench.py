"""Synthetic matrices, power-law exponent fitting and benchmark studies."""
from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, PSparseError
from .executor import CostModel, ExecReport, Variant, execute, simulate_cost
from .formats import CooMatrix, SortOrder, SparseMatrix, to_coo, to_csc, to_csr
from .partition import (DeviceTopology, PartFormat, block_plan, materialize,
                        two_level_plan)


# --- generator specs -------------------------------------------------------

@dataclass(frozen=True)
class TwoClassImbalance:
    """Row blocks of two kinds; light blocks hold ``ratio`` times the nnz of heavy ones.

    The first ``round(high_fraction * blocks)`` blocks are heavy. Heavy rows
    carry ``heavy_row_nnz`` nonzeros each (default ``min(n, 40)``).
    """

    ratio: float
    high_fraction: float = 0.5
    blocks: int = 8
    heavy_row_nnz: int | None = None

    def __post_init__(self):
        if not 0 < self.ratio <= 1:
            raise PSparseError("ratio must be in (0, 1]")
        if not 0 <= self.high_fraction <= 1:
            raise PSparseError("high_fraction must be in [0, 1]")
        if self.blocks < 1:
            raise PSparseError("blocks must be >= 1")


@dataclass(frozen=True)
class PowerLaw:
    """Column degrees ``k`` drawn with probability proportional to ``k**-R`` on ``[1, k_max]``."""

    R: float
    k_max: int = 100

    def __post_init__(self):
        if self.R <= 0:
            raise PSparseError("R must be > 0")
        if self.k_max < 1:
            raise PSparseError("k_max must be >= 1")


@dataclass(frozen=True)
class UniformRandom:
    density: float

    def __post_init__(self):
        if not 0 <= self.density <= 1:
            raise PSparseError("density must be in [0, 1]")


@dataclass(frozen=True)
class GenSpec:
    m: int
    n: int
    kind: TwoClassImbalance | PowerLaw | UniformRandom
    seed: int = 0

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise PSparseError("dimensions must be >= 0")


def _sample_distinct(rng: np.random.Generator, counts: np.ndarray, universe: int):
    """For owner ``i`` draw ``counts[i]`` distinct values in ``[0, universe)``.

    Returns ``(owner, value)`` sorted by owner then value. Sparse owners use
    vectorised rejection; owners needing more than half the universe are
    drawn without replacement one at a time.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size and counts.max(initial=0) > universe:
        raise PSparseError(f"cannot place {counts.max()} distinct entries in {universe} slots")
    dense = counts * 2 > universe
    owners_out, values_out = [], []
    for i in np.flatnonzero(dense):
        owners_out.append(np.full(counts[i], i, dtype=np.int64))
        values_out.append(rng.choice(universe, size=counts[i], replace=False))

    want = np.where(dense, 0, counts)
    key = np.empty(0, dtype=np.int64)
    deficit = want
    while deficit.any():
        owner = np.repeat(np.arange(want.size, dtype=np.int64), deficit)
        draw = rng.integers(0, universe, size=owner.size)
        key = np.unique(np.concatenate([key, owner * universe + draw]))
        deficit = want - np.bincount(key // universe, minlength=want.size)
    owners_out.append(key // universe)
    values_out.append(key % universe)

    owner = np.concatenate(owners_out)
    value = np.concatenate(values_out).astype(np.int64)
    order = np.lexsort((value, owner))
    return owner[order], value[order]


def _from_rows(m, n, rows, cols, rng) -> CooMatrix:
    vals = rng.uniform(-1.0, 1.0, size=rows.size)
    order = np.lexsort((cols, rows))
    return CooMatrix(m, n, rows[order], cols[order], vals, SortOrder.BY_ROW)


def imbalance_row_counts(m: int, n: int, kind: TwoClassImbalance) -> np.ndarray:
    """Nonzeros per row for a two-class imbalance matrix (deterministic)."""
    heavy_row = min(n, 40) if kind.heavy_row_nnz is None else int(kind.heavy_row_nnz)
    if heavy_row > n:
        raise PSparseError(f"heavy_row_nnz={heavy_row} exceeds n={n}")
    n_heavy = int(round(kind.high_fraction * kind.blocks))
    counts = np.zeros(m, dtype=np.int64)
    for blk in range(kind.blocks):
        lo, hi = blk * m // kind.blocks, (blk + 1) * m // kind.blocks
        rows = hi - lo
        if blk < n_heavy:
            counts[lo:hi] = heavy_row
        elif rows:
            total = int(round(kind.ratio * rows * heavy_row))
            counts[lo:hi] = [(r + 1) * total // rows - r * total // rows for r in range(rows)]
    return counts


def gen_matrix(spec: GenSpec) -> CooMatrix:
    """Deterministic row-sorted synthetic matrix for ``spec``.

    >>> a = gen_matrix(GenSpec(80, 100, TwoClassImbalance(0.1, blocks=8), seed=1))
    >>> np.bincount(a.row_idx // 10).tolist()
    [400, 400, 400, 400, 40, 40, 40, 40]
    """
    rng = np.random.default_rng(spec.seed)
    m, n, kind = spec.m, spec.n, spec.kind
    if isinstance(kind, UniformRandom):
        counts = rng.binomial(n, kind.density, size=m) if n else np.zeros(m, dtype=np.int64)
        rows, cols = _sample_distinct(rng, counts, n)
        return _from_rows(m, n, rows, cols, rng)
    if isinstance(kind, TwoClassImbalance):
        rows, cols = _sample_distinct(rng, imbalance_row_counts(m, n, kind), n)
        return _from_rows(m, n, rows, cols, rng)
    if isinstance(kind, PowerLaw):
        if n and kind.k_max > m:
            raise PSparseError(f"k_max={kind.k_max} exceeds m={m}")
        k = np.arange(1, kind.k_max + 1, dtype=np.float64)
        cdf = np.cumsum(k ** -kind.R)
        cdf /= cdf[-1]
        degrees = np.minimum(np.searchsorted(cdf, rng.random(n), side="right") + 1, kind.k_max)
        cols, rows = _sample_distinct(rng, degrees, m)
        return _from_rows(m, n, rows, cols, rng)
    raise PSparseError(f"unknown generator kind {kind!r}")


def degree_histogram_matrix(columns_per_degree: dict[int, int]) -> CooMatrix:
    """Matrix whose column-degree histogram is exactly ``{k: number of columns}``.

    A column of degree ``k`` has ones in rows ``0..k-1``.
    """
    degrees = np.repeat(np.array(list(columns_per_degree), dtype=np.int64),
                        np.array(list(columns_per_degree.values()), dtype=np.int64))
    m = int(degrees.max(initial=0))
    cols = np.repeat(np.arange(degrees.size, dtype=np.int64), degrees)
    starts = np.repeat(np.cumsum(degrees) - degrees, degrees)
    rows = np.arange(cols.size, dtype=np.int64) - starts
    order = np.lexsort((cols, rows))
    return CooMatrix(m, degrees.size, rows[order], cols[order], np.ones(cols.size),
                     SortOrder.BY_ROW)


# --- power-law fit ---------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    R: float
    fit_error: float
    bins: int


def fit_R(a: SparseMatrix) -> PowerLawFit:
    """Exponent ``R`` of ``P(k) ~ k**-R`` over per-column nonzero counts ``k``.

    Log-log least squares over the non-empty histogram bins, each bin weighted
    by its column count (the Poisson variance of ``log P`` is about
    ``1 / count``, so sparse tail bins would otherwise flatten the slope).
    ``fit_error`` is the weighted RMS residual in log space.
    """
    coo = to_coo(a)
    degrees = np.bincount(coo.col_idx, minlength=coo.n)
    degrees = degrees[degrees > 0]
    ks, counts = np.unique(degrees, return_counts=True)
    if ks.size < 2:
        raise FitError("need at least two distinct nonzero column degrees")
    lx = np.log(ks.astype(np.float64))
    ly = np.log(counts / counts.sum())
    w = counts.astype(np.float64)
    slope, icept = np.polyfit(lx, ly, 1, w=np.sqrt(w))
    resid = ly - (slope * lx + icept)
    err = float(np.sqrt(np.sum(w * resid ** 2) / w.sum()))
    return PowerLawFit(float(-slope), err, int(ks.size))


# --- studies ---------------------------------------------------------------

TIMING_COLUMNS = frozenset({"partition_ms", "kernel_ms", "merge_ms", "total_ms", "speedup",
                            "partition_overhead", "merge_overhead"})


@dataclass
class BenchResult:
    """Rows of one study plus the execution reports behind them.

    Timing-derived columns are listed in ``TIMING_COLUMNS``; everything else
    is deterministic for a fixed seed.
    """

    study: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    reports: list[ExecReport] = field(default_factory=list)
    outputs: dict = field(default_factory=dict, repr=False)

    def speedup_curve(self, variant: str) -> dict[int, float]:
        return {r["devices"]: r["speedup"] for r in self.rows if r["variant"] == variant}

    def deterministic_rows(self) -> list[dict]:
        return [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in self.columns})
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {"study": self.study, "columns": self.columns, "rows": self.rows,
                "reports": [r.as_dict() for r in self.reports]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def timed_execute(a, plan, variant, repeats: int = 5, warmup: int = 1, x=None):
    """Median-of-``repeats`` run after ``warmup`` discarded runs.

    Returns the output vector of the median run and its report; raises if any
    two runs disagree bit for bit.
    """
    x = np.ones(a.n) if x is None else x
    y0 = np.zeros(a.m)
    for _ in range(warmup):
        execute(a, x, y0, 1.0, 0.0, plan, variant)
    runs = [execute(a, x, y0, 1.0, 0.0, plan, variant) for _ in range(max(1, repeats))]
    first = runs[0][0]
    if any(not np.array_equal(first, y) for y, _ in runs[1:]):
        raise PSparseError("non-deterministic execution")
    median = statistics.median_low([r.total_ms for _, r in runs])
    return next((y, r) for y, r in runs if r.total_ms == median)


def _convert(a: SparseMatrix, fmt: PartFormat):
    if fmt is PartFormat.PCSR:
        return to_csr(a)
    if fmt is PartFormat.PCSC:
        return to_csc(a)
    return to_coo(a).sorted_by_row()


IMBALANCE_COLUMNS = ["variant", "devices", "ratio", "partition_ms", "kernel_ms", "merge_ms",
                     "total_ms", "speedup", "relative_throughput", "baseline_makespan",
                     "balanced_makespan"]


def run_imbalance_study(ratios, topo: DeviceTopology, model: CostModel = CostModel(), *,
                        high_fraction: float = 0.5, rows_per_block: int = 256, n: int = 4096,
                        heavy_row_nnz: int = 40, seed: int = 0, measure: bool = False,
                        repeats: int = 5, warmup: int = 1,
                        fmt: PartFormat = PartFormat.PCSR) -> BenchResult:
    """Row-block baseline versus nnz-balanced plan on two-class imbalance matrices.

    One row per ratio. ``relative_throughput`` is the cost-model ratio
    ``makespan(balanced) / makespan(baseline)``: the fraction of the balanced
    throughput the row-block baseline achieves. With ``measure`` the baseline
    and p*-opt variants are also timed; timing columns describe the baseline
    run and ``speedup`` is ``total(baseline) / total(p*-opt)``.
    """
    d = topo.total_devices
    result = BenchResult("imbalance", list(IMBALANCE_COLUMNS))
    for ratio in ratios:
        kind = TwoClassImbalance(float(ratio), high_fraction, blocks=d, heavy_row_nnz=heavy_row_nnz)
        a = _convert(gen_matrix(GenSpec(rows_per_block * d, n, kind, seed)), fmt)
        base = materialize(block_plan(a, topo), a)
        bal = materialize(two_level_plan(a.nnz, topo, fmt=fmt), a)
        base_cost = simulate_cost(base, model, reference=bal)
        row = {"variant": "baseline", "devices": d, "ratio": float(ratio),
               "relative_throughput": base_cost.relative_throughput,
               "baseline_makespan": base_cost.makespan,
               "balanced_makespan": simulate_cost(bal, model).makespan}
        if measure:
            y_b, rep_b = timed_execute(a, block_plan(a, topo), Variant.BASELINE, repeats, warmup)
            y_o, rep_o = timed_execute(a, two_level_plan(a.nnz, topo, fmt=fmt),
                                       Variant.PSTAR_OPT, repeats, warmup)
            result.reports += [rep_b, rep_o]
            row.update(partition_ms=rep_b.partition_ms, kernel_ms=rep_b.kernel_ms,
                       merge_ms=rep_b.merge_ms, total_ms=rep_b.total_ms,
                       speedup=rep_b.total_ms / rep_o.total_ms)
        result.rows.append(row)
    return result


SCALING_COLUMNS = ["variant", "devices", "R", "partition_ms", "kernel_ms", "merge_ms",
                   "total_ms", "partition_overhead", "merge_overhead", "speedup",
                   "model_speedup", "max_part_nnz"]


def _variant_plan(a, variant: Variant, topo: DeviceTopology):
    if variant is Variant.BASELINE:
        return block_plan(a, topo)
    return two_level_plan(a.nnz, topo, fmt=PartFormat.of(a))


def run_scaling_study(a: SparseMatrix, device_counts, groups: int = 2,
                      variants=(Variant.BASELINE, Variant.PSTAR, Variant.PSTAR_OPT), *,
                      model: CostModel = CostModel(), repeats: int = 5, warmup: int = 1,
                      R: float | None = None, fmt: PartFormat | None = None,
                      keep_outputs: bool = False) -> BenchResult:
    """Wall-clock and cost-model speedup of each variant over ``device_counts``.

    ``speedup`` is ``total_ms(variant, 1 device) / total_ms(variant, d)`` and
    ``model_speedup`` the same ratio of cost-model makespans. Devices are
    spread over ``min(groups, d)`` groups.
    """
    device_counts = [int(d) for d in device_counts]
    if not device_counts:
        raise PSparseError("device_counts must not be empty")
    fmt = PartFormat.of(a) if fmt is None else fmt
    a = _convert(a, fmt)
    result = BenchResult("scaling", list(SCALING_COLUMNS))
    counts = sorted(set(device_counts) | {1})
    for variant in (Variant(v) for v in variants):
        measured = {}
        for d in counts:
            topo = DeviceTopology.spread(d, groups)
            plan = _variant_plan(a, variant, topo)
            y, rep = timed_execute(a, plan, variant, repeats, warmup)
            cost = simulate_cost(materialize(plan, a), model)
            measured[d] = (rep, cost.makespan, int(plan.part_sizes().max()))
            if keep_outputs:
                result.outputs[(variant.value, d)] = y
        rep1, span1, _ = measured[1]
        for d in device_counts:
            rep, span, biggest = measured[d]
            result.reports.append(rep)
            result.rows.append({
                "variant": variant.value, "devices": d, "R": R,
                "partition_ms": rep.partition_ms, "kernel_ms": rep.kernel_ms,
                "merge_ms": rep.merge_ms, "total_ms": rep.total_ms,
                "partition_overhead": rep.partition_overhead,
                "merge_overhead": rep.merge_overhead,
                "speedup": rep1.total_ms / rep.total_ms,
                "model_speedup": span1 / span if span > 0 else 1.0,
                "max_part_nnz": biggest,
            })
    return result


# --- CLI helpers -----------------------------------------------------------

_KINDS = {"powerlaw": PowerLaw, "imbalance": TwoClassImbalance, "uniform": UniformRandom}
_DEFAULT_DIMS = {"powerlaw": (10000, 10000), "imbalance": (2048, 4096), "uniform": (1000, 1000)}


def parse_gen_spec(text: str, seed: int = 0) -> GenSpec:
    """Parse ``"powerlaw:R=2,n=10000,k_max=100"``-style generator strings.

    ``m`` and ``n`` are accepted for every kind; remaining keys go to the kind.
    """
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    if name not in _KINDS:
        raise PSparseError(f"unknown generator {name!r}; choose from {sorted(_KINDS)}")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise PSparseError(f"bad generator parameter {item!r}")
        params[key.strip()] = value.strip()
    m, n = _DEFAULT_DIMS[name]
    n = int(params.pop("n", n))
    m = int(params.pop("m", n if name == "powerlaw" else m))
    ints = {"k_max", "blocks", "heavy_row_nnz"}
    try:
        kind = _KINDS[name](**{k: int(v) if k in ints else float(v) for k, v in params.items()})
    except TypeError as exc:
        raise PSparseError(f"bad parameters for {name}: {exc}") from None
    return GenSpec(m, n, kind, seed)
