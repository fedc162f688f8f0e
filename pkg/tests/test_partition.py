import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import coo_from_triplets, random_triplets
from psparse.errors import PartitionError, PlanMismatchError, UnsupportedOrderError
from psparse.formats import CooMatrix, CsrMatrix, SortOrder, coo_to_csc, coo_to_csr
from psparse.partition import (EMPTY, DeviceTopology, PartFormat, PartitionPlan, aux_offsets,
                               balance_stats, block_plan, check_tiling, coo_to_pcoo,
                               csc_to_pcsc, csr_to_pcsr, materialize, merge_parts_to_csr,
                               nnz_boundaries, owner_row, two_level_plan)


# --- independent oracles ---------------------------------------------------

def boundaries_oracle(nnz, np_):
    return [i * nnz // np_ for i in range(np_ + 1)]


def owner_oracle(ptr, idx):
    for r in range(len(ptr) - 1):
        if ptr[r] <= idx < ptr[r + 1]:
            return r
    raise AssertionError("no owner")


def part_oracle(ptr, s, e):
    """Expected (first, last, flag, local_ptr) for nonzeros [s, e) by linear scans."""
    if e <= s:
        return EMPTY, EMPTY, False, [0, 0]
    first, last = owner_oracle(ptr, s), owner_oracle(ptr, e - 1)
    flag = any(owner_oracle(ptr, k) == first for k in range(s))
    local = [0]
    for r in range(first, last + 1):
        local.append(local[-1] + sum(1 for k in range(s, e) if ptr[r] <= k < ptr[r + 1]))
    return first, last, flag, local


def csr_from_counts(counts, n=None):
    counts = list(counts)
    n = max(counts, default=0) if n is None else n
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(int)
    cols = np.concatenate([np.arange(c) for c in counts]) if ptr[-1] else np.zeros(0)
    return CsrMatrix(len(counts), max(n, 1), ptr, cols, np.arange(ptr[-1], dtype=float) + 1)


# --- nnz_boundaries / owner_row --------------------------------------------

@pytest.mark.parametrize("nnz,np_,expect", [
    (10, 4, [0, 2, 5, 7, 10]),
    (5, 5, [0, 1, 2, 3, 4, 5]),
    (3, 5, [0, 0, 1, 1, 2, 3]),
    (0, 3, [0, 0, 0, 0]),
])
def test_nnz_boundaries_examples(nnz, np_, expect):
    assert nnz_boundaries(nnz, np_).tolist() == expect


def test_nnz_boundaries_errors():
    with pytest.raises(PartitionError):
        nnz_boundaries(5, 0)
    with pytest.raises(PartitionError):
        nnz_boundaries(-1, 2)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**12), st.integers(1, 4096))
def test_nnz_boundaries_property(nnz, np_):
    b = nnz_boundaries(nnz, np_)
    sizes = np.diff(b)
    assert b[0] == 0 and b[-1] == nnz
    assert sizes.min() >= 0 and sizes.max() - sizes.min() <= 1
    if np_ <= 64:
        assert b.tolist() == boundaries_oracle(nnz, np_)


@pytest.mark.parametrize("idx,row", [(0, 0), (1, 0), (2, 1), (3, 3), (4, 3)])
def test_owner_row_on_e(idx, row):
    assert owner_row(np.array([0, 2, 3, 3, 5]), idx) == row


def test_owner_row_skips_leading_empty_rows():
    assert owner_row(np.array([0, 0, 0, 2]), 0) == 2
    with pytest.raises(PartitionError):
        owner_row(np.array([0, 2]), 2)


# --- pCSR / pCSC / pCOO examples ---------------------------------------------

def test_pcsr_e_np2(e_coo):
    p0, p1 = csr_to_pcsr(coo_to_csr(e_coo), 2)
    assert (p0.start_idx, p0.end_idx, p0.start_row, p0.end_row, p0.start_flag) == (0, 1, 0, 0, False)
    assert p0.local_row_ptr.tolist() == [0, 2]
    assert (p1.start_idx, p1.end_idx, p1.start_row, p1.end_row, p1.start_flag) == (2, 4, 1, 3, False)
    assert p1.local_row_ptr.tolist() == [0, 1, 1, 3]


def test_pcsr_shared_row(shared_row):
    p0, p1 = csr_to_pcsr(coo_to_csr(shared_row), 2)
    assert p1.start_idx == 2 and p1.start_flag
    assert p0.start_row == p0.end_row == p1.start_row == p1.end_row == 0


def test_pcsr_np1_is_identity(e_coo):
    a = coo_to_csr(e_coo)
    (p,) = csr_to_pcsr(a, 1)
    assert not p.start_flag
    assert p.local_row_ptr.tolist() == a.row_ptr.tolist()


def test_pcsc_e_np2(e_coo):
    p0, p1 = csc_to_pcsc(coo_to_csc(e_coo), 2)
    assert (p0.start_idx, p0.end_idx, p0.start_col, p0.end_col, p0.start_flag) == (0, 1, 0, 0, False)
    assert p0.local_col_ptr.tolist() == [0, 2]
    assert (p1.start_idx, p1.end_idx, p1.start_col, p1.end_col, p1.start_flag) == (2, 4, 1, 3, False)
    assert p1.local_col_ptr.tolist() == [0, 1, 2, 3]


def test_pcsc_single_column_flags():
    a = coo_to_csc(coo_from_triplets(6, 1, [(i, 0, 1.0) for i in range(6)]))
    parts = csc_to_pcsc(a, 3)
    assert [p.start_flag for p in parts] == [False, True, True]


def test_pcoo_examples():
    a = CooMatrix(4, 4, [0, 0, 1, 3, 3], [0, 2, 1, 0, 3], [1, 2, 3, 4, 5])
    p0, p1 = coo_to_pcoo(a, 2)
    assert (p0.start_idx, p0.end_idx, p0.start_row, p0.end_row, p0.start_flag) == (0, 1, 0, 0, False)
    assert (p1.start_idx, p1.end_idx, p1.start_row, p1.end_row, p1.start_flag) == (2, 4, 1, 3, False)
    b = CooMatrix(1, 4, [0, 0, 0, 0], [0, 1, 2, 3], [1, 2, 3, 4])
    assert coo_to_pcoo(b, 2)[1].start_flag
    (whole,) = coo_to_pcoo(a, 1)
    assert (whole.start_row, whole.end_row, whole.start_flag) == (0, 3, False)


def test_pcoo_rejects_unsorted():
    by_col = CooMatrix(2, 2, [0, 1, 0], [0, 0, 1], [1, 2, 3])
    assert by_col.sort_order is SortOrder.BY_COLUMN
    with pytest.raises(UnsupportedOrderError):
        coo_to_pcoo(by_col, 2)
    unsorted = CooMatrix(2, 2, [1, 0, 1], [1, 0, 0], [1, 2, 3])
    with pytest.raises(UnsupportedOrderError):
        coo_to_pcoo(unsorted, 2)


def test_empty_partitions_use_sentinel():
    a = coo_to_csr(coo_from_triplets(2, 2, [(0, 0, 1.0), (1, 1, 1.0)]))
    parts = csr_to_pcsr(a, 5)
    empties = [p for p in parts if p.is_empty]
    assert len(empties) == 3
    for p in empties:
        assert p.end_idx == p.start_idx - 1
        assert p.start_row == p.end_row == EMPTY


@pytest.mark.parametrize("np_", [0, -1])
def test_np_must_be_positive(e_coo, np_):
    with pytest.raises(PartitionError):
        csr_to_pcsr(coo_to_csr(e_coo), np_)


# --- properties ------------------------------------------------------------

@st.composite
def row_counts(draw):
    return draw(st.lists(st.integers(0, 6), min_size=1, max_size=12))


@settings(max_examples=200, deadline=None)
@given(row_counts(), st.integers(1, 40))
def test_pcsr_matches_linear_scan_oracle(counts, np_):
    a = csr_from_counts(counts)
    ptr = a.row_ptr.tolist()
    b = boundaries_oracle(a.nnz, np_)
    parts = csr_to_pcsr(a, np_)
    check_tiling(parts, a.nnz)
    for i, p in enumerate(parts):
        first, last, flag, local = part_oracle(ptr, b[i], b[i + 1])
        assert (p.start_row, p.end_row, p.start_flag) == (first, last, flag)
        assert p.local_row_ptr.tolist() == local


@settings(max_examples=200, deadline=None)
@given(row_counts(), st.integers(1, 40))
def test_flag_inference_rule(counts, np_):
    # The last row of a partition is shared with the next live partition
    # exactly when that partition's start_flag is set.
    parts = [p for p in csr_to_pcsr(csr_from_counts(counts), np_) if not p.is_empty]
    for cur, nxt in zip(parts, parts[1:]):
        assert (cur.end_row == nxt.start_row) == nxt.start_flag


@settings(max_examples=150, deadline=None)
@given(row_counts(), st.integers(1, 30))
def test_pcoo_agrees_with_pcsr(counts, np_):
    csr = csr_from_counts(counts)
    rows = np.repeat(np.arange(csr.m), np.diff(csr.row_ptr))
    coo = CooMatrix(csr.m, csr.n, rows, csr.col_idx, csr.val)
    for p, q in zip(csr_to_pcsr(csr, np_), coo_to_pcoo(coo, np_)):
        assert (p.start_idx, p.end_idx, p.start_row, p.end_row, p.start_flag) == \
               (q.start_idx, q.end_idx, q.start_row, q.end_row, q.start_flag)


@settings(max_examples=100, deadline=None)
@given(row_counts(), st.integers(1, 30), st.integers(2, 8))
def test_parallel_generation_is_bit_identical(counts, np_, workers):
    a = csr_from_counts(counts)
    seq = csr_to_pcsr(a, np_)
    par = csr_to_pcsr(a, np_, workers=workers)
    for p, q in zip(seq, par):
        assert p.as_dict() == q.as_dict()
        assert np.array_equal(p.local_row_ptr, q.local_row_ptr)
    coo = coo_from_triplets(a.m, a.n, [(int(r), int(c), 1.0) for r, c in
                                       zip(np.repeat(np.arange(a.m), np.diff(a.row_ptr)), a.col_idx)])
    assert [p.as_dict() for p in coo_to_pcoo(coo, np_)] == \
           [p.as_dict() for p in coo_to_pcoo(coo, np_, workers=workers)]


# --- merge-back --------------------------------------------------------------

def test_merge_examples(e_coo, shared_row):
    a = coo_to_csr(e_coo)
    assert merge_parts_to_csr(csr_to_pcsr(a, 2), a).row_ptr.tolist() == [0, 2, 3, 3, 5]
    assert merge_parts_to_csr(csr_to_pcsr(a, 1), a).same_as(a)
    s = coo_to_csr(shared_row)
    assert merge_parts_to_csr(csr_to_pcsr(s, 4), s).row_ptr.tolist() == [0, 4]


def test_merge_exhaustive_small():
    # pCSR construction reads only row_ptr, so enumerating row-count vectors
    # covers every structure of that shape.
    for m in range(1, 4):
        for counts in itertools.product(range(4), repeat=m):
            a = csr_from_counts(counts, n=3)
            for np_ in range(1, a.nnz + 3):
                parts = csr_to_pcsr(a, np_)
                assert np.array_equal(merge_parts_to_csr(parts, a).row_ptr, a.row_ptr)
                assert aux_offsets(parts) <= a.m + 2 * np_


def test_merge_rejects_gaps(e_coo):
    a = coo_to_csr(e_coo)
    parts = csr_to_pcsr(a, 3)
    with pytest.raises(PartitionError):
        merge_parts_to_csr([parts[0], parts[2]], a)


# --- topology and plans ------------------------------------------------------

@pytest.mark.parametrize("text,counts", [("2x3", [3, 3]), ("2x4", [4, 4]), ("5", [5]),
                                         ("4,2", [4, 2])])
def test_topology_parse(text, counts):
    assert [g.device_count for g in DeviceTopology.parse(text).groups] == counts


@pytest.mark.parametrize("text", ["", "0x3", "2x", "a", "2x-1"])
def test_topology_parse_errors(text):
    with pytest.raises(PartitionError):
        DeviceTopology.parse(text)


def test_topology_spread():
    assert [g.device_count for g in DeviceTopology.spread(5, 2).groups] == [2, 3]
    assert [g.device_count for g in DeviceTopology.spread(1, 2).groups] == [1]


@pytest.mark.parametrize("nnz,topo,ranges,size", [
    (12, "2x3", [[0, 6], [6, 12]], 2),
    (16, "2x4", [[0, 8], [8, 16]], 2),
])
def test_two_level_examples(nnz, topo, ranges, size):
    plan = two_level_plan(nnz, DeviceTopology.parse(topo))
    assert [list(r) for r in plan.group_ranges] == ranges
    assert set(plan.part_sizes().tolist()) == {size}


def test_two_level_single_device():
    plan = two_level_plan(7, DeviceTopology.parse("1x1"))
    assert plan.boundaries.tolist() == [0, 7]


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 5000), st.lists(st.integers(1, 6), min_size=1, max_size=4),
       st.integers(1, 4))
def test_two_level_equals_flat_split(nnz, groups, ppd):
    topo = DeviceTopology.from_counts(groups)
    plan = two_level_plan(nnz, topo, ppd)
    total = sum(groups) * ppd
    assert plan.boundaries.tolist() == boundaries_oracle(nnz, total)
    # Level-2 ranges tile each group's level-1 range.
    offs = np.concatenate([[0], np.cumsum(groups)]) * ppd
    for g, (lo, hi) in enumerate(plan.group_ranges):
        assert plan.boundaries[offs[g]] == lo and plan.boundaries[offs[g + 1]] == hi
    assert list(plan.devices) == np.repeat(np.arange(sum(groups)), ppd).tolist()


def test_plan_json_roundtrip(e_coo):
    for a in (coo_to_csr(e_coo), coo_to_csc(e_coo), e_coo):
        plan = materialize(two_level_plan(a.nnz, DeviceTopology.parse("2x2"), 2,
                                          PartFormat.of(a)), a)
        back = PartitionPlan.from_json(plan.to_json())
        # Local pointer arrays are not serialised; re-binding rebuilds the parts.
        assert not back.parts
        assert materialize(back, a).as_dict() == plan.as_dict()


def test_plan_validate_rejects_foreign_matrix(e_coo):
    plan = two_level_plan(3, DeviceTopology.parse("1x2"))
    with pytest.raises(PlanMismatchError):
        materialize(plan, coo_to_csr(e_coo))


def test_block_plan_row_blocks(e_coo):
    plan = materialize(block_plan(coo_to_csr(e_coo), DeviceTopology.parse("1x2")), coo_to_csr(e_coo))
    assert plan.kind == "block"
    assert plan.boundaries.tolist() == [0, 3, 5]
    csc_plan = block_plan(coo_to_csc(e_coo), DeviceTopology.parse("1x2"))
    assert csc_plan.boundaries.tolist() == [0, 3, 5]


def test_balance_stats():
    plan = two_level_plan(10, DeviceTopology.parse("1x4"))
    s = balance_stats(plan)
    assert s["max_nnz"] - s["min_nnz"] <= 1
    assert s["empty_parts"] == 0


def test_materialize_parallel_equals_sequential():
    rng = np.random.default_rng(0)
    a = coo_to_csr(coo_from_triplets(40, 30, random_triplets(rng, 40, 30, 0.2)))
    plan = two_level_plan(a.nnz, DeviceTopology.parse("2x4"), 2)
    seq, par = materialize(plan, a), materialize(plan, a, workers=4)
    assert seq.to_json() == par.to_json()
