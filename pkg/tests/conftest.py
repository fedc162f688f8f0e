"""Shared fixtures and independent oracles.

The dense oracle never touches the package's storage formats: it scatters
triplets into a 2-D array and uses a BLAS matrix-vector product.
"""
import numpy as np
import pytest

from psparse.formats import CooMatrix, SortOrder

# Running 4x4 example with an empty row (row 2).
E_TRIPLETS = [(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (3, 0, 4.0), (3, 3, 5.0)]


def coo_from_triplets(m, n, triplets, order=SortOrder.BY_ROW):
    trip = sorted(triplets) if order is SortOrder.BY_ROW else list(triplets)
    rows = [t[0] for t in trip]
    cols = [t[1] for t in trip]
    vals = [t[2] for t in trip]
    return CooMatrix(m, n, rows, cols, vals)


def dense_of(m, n, triplets):
    d = np.zeros((m, n))
    for i, j, v in triplets:
        d[i, j] = v
    return d


def dense_oracle(dense, x, y, alpha, beta):
    """``alpha * dense @ x + beta * y`` computed without any sparse code."""
    return alpha * (dense @ np.asarray(x, float)) + beta * np.asarray(y, float)


def close(got, ref, rtol=1e-9, atol=1e-9):
    got, ref = np.asarray(got), np.asarray(ref)
    return got.shape == ref.shape and bool(np.all(np.abs(got - ref) <= atol + rtol * np.abs(ref)))


def random_triplets(rng, m, n, density, empty_rows=(), empty_cols=()):
    """Random sparsity with some rows and columns forced empty."""
    mask = rng.random((m, n)) < density
    mask[list(empty_rows), :] = False
    mask[:, list(empty_cols)] = False
    r, c = np.nonzero(mask)
    vals = rng.standard_normal(r.size)
    return [(int(i), int(j), float(v)) for i, j, v in zip(r, c, vals)]


def random_case(seed, max_dim=200, densities=(0.01, 0.1, 0.3)):
    """One seeded random matrix with forced empty rows and columns.

    Returns ``(m, n, triplets, dense)``.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, max_dim + 1))
    n = int(rng.integers(1, max_dim + 1))
    density = densities[seed % len(densities)]
    empty_rows = rng.choice(m, size=min(m, 1 + m // 10), replace=False)
    empty_cols = rng.choice(n, size=min(n, 1 + n // 10), replace=False)
    trip = random_triplets(rng, m, n, density, empty_rows, empty_cols)
    return m, n, trip, dense_of(m, n, trip)


@pytest.fixture
def e_coo():
    return coo_from_triplets(4, 4, E_TRIPLETS)


@pytest.fixture
def e_dense():
    return dense_of(4, 4, E_TRIPLETS)


@pytest.fixture
def shared_row():
    """1x4 matrix whose single row is split by any np >= 2."""
    return coo_from_triplets(1, 4, [(0, j, float(j + 1)) for j in range(4)])


@pytest.fixture
def e_file(tmp_path):
    path = tmp_path / "e.mtx"
    lines = ["%%MatrixMarket matrix coordinate real general", "4 4 5"]
    lines += [f"{i + 1} {j + 1} {v}" for i, j, v in E_TRIPLETS]
    path.write_text("\n".join(lines) + "\n")
    return path
