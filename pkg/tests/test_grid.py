import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monodens.grid import (GridSpec, OutOfDomainError, bin_average, bin_index, bin_indices, count_bins,
                           make_grid, read_points_csv)

shapes = st.lists(st.integers(1, 6), min_size=1, max_size=3).map(tuple)


def test_make_grid_counts_and_strides():
    g = make_grid((2, 3))
    assert g.size == 6
    assert g.strides == (3, 1)
    assert make_grid(1).size == 1
    assert make_grid(10, 2).bins == (10, 10)


@pytest.mark.parametrize("bad", [(0,), (3, -1), ()])
def test_make_grid_rejects_bad_bins(bad):
    with pytest.raises(ValueError):
        GridSpec(bad)


@given(shapes)
def test_flat_multi_index_roundtrip(shape):
    g = make_grid(shape)
    for flat in range(g.size):
        assert g.flat_index(g.multi_index(flat)) == flat


def test_bin_index_examples():
    g = make_grid((10, 10))
    assert bin_index((0.5, 0.5), g) == (5, 5)
    assert bin_index((0.0, 0.0), g) == (1, 1)
    assert bin_index((0.51, 0.23), g) == (6, 3)
    assert bin_index((1.0, 1.0), g) == (10, 10)


def test_bin_index_respects_float_boundaries():
    # 0.3 * 10 rounds to 3.0000000000000004; the cell is still (.2, .3]
    g = make_grid(10, 1)
    assert bin_index((0.3,), g) == (3,)
    for m in range(1, 11):
        x = m / 10
        assert bin_index((x,), g) == (m,)


@pytest.mark.parametrize("x", [(-0.01, 0.5), (0.5, 1.0001), (np.nan, 0.2)])
def test_out_of_domain(x):
    with pytest.raises(OutOfDomainError):
        bin_index(x, make_grid((4, 4)))


@settings(max_examples=50)
@given(shapes, st.integers(0, 40), st.integers(0, 2**31))
def test_count_bins_matches_loop(shape, n, seed):
    rng = np.random.default_rng(seed)
    g = make_grid(shape)
    x = rng.random((n, g.dims))
    counts = count_bins(x, g)
    assert counts.n == n
    ref = np.zeros(shape, int)
    for p in x:
        j = bin_index(p, g)
        ref[tuple(np.array(j) - 1)] += 1
    np.testing.assert_array_equal(counts.counts, ref)


def test_points_in_cells():
    g = make_grid((3, 4))
    rng = np.random.default_rng(2)
    x = rng.random((500, 2))
    j = bin_indices(x, g)
    for p, jj in zip(x, j):
        lo, hi = g.cell_bounds(jj)
        assert np.all(p > lo) and np.all(p <= hi)


def test_bin_average_polynomial():
    # midpoint rule is exact for affine functions
    g = make_grid((3, 2))
    b = bin_average(lambda p: 1 + p[:, 0] + 2 * p[:, 1], g, nodes=1)
    ref = np.zeros((3, 2))
    for i, j in itertools.product(range(3), range(2)):
        ref[i, j] = (1 + (i + 0.5) / 3 + 2 * (j + 0.5) / 2) / 6
    np.testing.assert_allclose(b, ref)
    assert abs(b.sum() - 2.5) < 1e-12


def test_read_points_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n0.1,0.2\n0.3,0.4\n")
    np.testing.assert_array_equal(read_points_csv(str(p)), [[0.1, 0.2], [0.3, 0.4]])
    p.write_text("0.1,0.2\n0.3,1.4\n")
    with pytest.raises(OutOfDomainError):
        read_points_csv(str(p))
    p.write_text("0.1,0.2\n0.3\n")
    with pytest.raises(ValueError):
        read_points_csv(str(p))
