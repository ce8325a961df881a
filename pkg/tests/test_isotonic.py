import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from monodens.isotonic import (brute_force_isotonic, is_monotone, isotonize_l1, isotonize_l2, l1_cost,
                               l1_distance_to_cone, pava_l1)


def small_shapes(max_cells=9):
    out = []
    for d in (1, 2, 3):
        for s in itertools.product(range(1, 10), repeat=d):
            if math.prod(s) <= max_cells:
                out.append(s)
    return out


grid_arrays = st.sampled_from([(3,), (2, 2), (2, 3), (3, 3), (4, 4), (2, 2, 2), (5, 6), (3, 2, 4)]).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(-5, 5, allow_nan=False, width=32)))


def test_is_monotone_examples():
    assert is_monotone(np.array([4, 3, 2, 1]) / 10)
    assert not is_monotone(np.array([1, 2]) / 3)
    assert is_monotone(np.array([[0.4, 0.3], [0.2, 0.1]]))
    assert not is_monotone(np.array([[0.4, 0.1], [0.2, 0.3]]))


def test_isotonize_l1_small_examples():
    np.testing.assert_allclose(isotonize_l1(np.array([1.0, 3.0])), [2.0, 2.0])
    assert l1_distance_to_cone(np.array([1.0, 3.0])) == pytest.approx(2.0)
    theta = np.array([[0.1, 0.4], [0.2, 0.3]])
    # frozen from exhaustive search: the optimum is 0.4
    assert l1_cost(theta, isotonize_l1(theta)) == pytest.approx(0.4)
    assert l1_cost(theta, brute_force_isotonic(theta)) == pytest.approx(0.4)


def test_brute_force_examples():
    t = np.array([3.0, 1.0, 2.0])
    assert l1_cost(t, brute_force_isotonic(t)) == pytest.approx(1.0)
    np.testing.assert_array_equal(brute_force_isotonic(np.array([7.0])), [7.0])
    with pytest.raises(ValueError):
        brute_force_isotonic(np.zeros(13))


def test_isotonize_l2_small_examples():
    np.testing.assert_allclose(isotonize_l2(np.array([1.0, 3.0])), [2.0, 2.0])


@pytest.mark.parametrize("shape", small_shapes())
def test_l1_matches_oracle_on_small_grids(shape):
    rng = np.random.default_rng(abs(hash(shape)) % 2**32)
    for _ in range(25):
        theta = rng.random(shape)
        fit = isotonize_l1(theta)
        assert is_monotone(fit)
        assert abs(l1_cost(theta, fit) - l1_cost(theta, brute_force_isotonic(theta))) <= 1e-9


@pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 3), (2, 2, 2), (3, 4)])
def test_l2_matches_oracle(shape):
    rng = np.random.default_rng(7)
    for _ in range(20):
        theta = rng.random(shape)
        np.testing.assert_allclose(isotonize_l2(theta), brute_force_isotonic(theta, p=2), atol=1e-8)


def test_weighted_l1_matches_oracle():
    rng = np.random.default_rng(11)
    for shape in [(5,), (2, 3), (3, 3), (2, 2, 2)]:
        for _ in range(20):
            theta = rng.random(shape)
            w = rng.uniform(0.2, 3.0, shape)
            fit = isotonize_l1(theta, w)
            ref = brute_force_isotonic(theta, 1, w)
            assert l1_cost(theta, fit, w) == pytest.approx(l1_cost(theta, ref, w), abs=1e-9)


def test_ties_and_integer_data():
    rng = np.random.default_rng(3)
    for _ in range(100):
        theta = rng.integers(0, 3, (3, 3)).astype(float)
        assert l1_cost(theta, isotonize_l1(theta)) == pytest.approx(l1_cost(theta, brute_force_isotonic(theta)))


def test_pava_midpoint_rule():
    # pooled block {1, 3, 5, 7}: any value in [3, 5] is optimal; the midpoint is returned
    np.testing.assert_allclose(pava_l1(np.array([1.0, 3.0, 5.0, 7.0]), np.ones(4)), [4.0] * 4)


@settings(max_examples=200, deadline=None)
@given(grid_arrays)
def test_cone_membership(theta):
    assert is_monotone(isotonize_l1(theta), tol=1e-9)
    assert is_monotone(isotonize_l2(theta), tol=1e-9)


@settings(max_examples=150, deadline=None)
@given(grid_arrays)
def test_idempotence(theta):
    f1 = isotonize_l1(theta)
    assert l1_cost(f1, isotonize_l1(f1)) <= 1e-12
    f2 = isotonize_l2(theta)
    np.testing.assert_allclose(isotonize_l2(f2), f2, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(grid_arrays)
def test_nonnegativity_preserved(theta):
    theta = np.abs(theta)
    assert np.all(isotonize_l1(theta) >= 0)


@settings(max_examples=150, deadline=None)
@given(grid_arrays)
def test_l2_preserves_sum(theta):
    assert isotonize_l2(theta).sum() == pytest.approx(theta.sum(), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(grid_arrays)
def test_distance_zero_iff_monotone(theta):
    dist = l1_distance_to_cone(theta)
    assert (dist <= 1e-12) == is_monotone(theta, tol=0.0)


def test_monotone_input_unchanged():
    t = np.add.outer(-np.arange(4.0), -np.arange(5.0))
    np.testing.assert_array_equal(isotonize_l1(t), t)
    np.testing.assert_array_equal(isotonize_l2(t), t)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        isotonize_l1(np.array([[1.0, np.nan], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        isotonize_l2(np.array([1.0, np.inf]))


def test_l1_is_optimal_on_a_larger_grid():
    # on 5x5 the brute force is out of reach; compare against a linear program instead
    from scipy.optimize import linprog
    from monodens.isotonic import _adjacent_pairs
    rng = np.random.default_rng(0)
    shape = (5, 5)
    n = 25
    lo, hi = _adjacent_pairs(shape)
    for _ in range(5):
        y = rng.random(n)
        # variables c (n) and t (n) with t >= |c - y|, c[hi] <= c[lo]
        cost = np.concatenate([np.zeros(n), np.ones(n)])
        A, b = [], []
        eye = np.eye(n)
        for i in range(n):
            A.append(np.concatenate([eye[i], -eye[i]])); b.append(y[i])
            A.append(np.concatenate([-eye[i], -eye[i]])); b.append(-y[i])
        for p, q in zip(lo, hi):
            row = np.zeros(2 * n); row[q] = 1; row[p] = -1
            A.append(row); b.append(0.0)
        res = linprog(cost, A_ub=np.array(A), b_ub=np.array(b), bounds=[(None, None)] * (2 * n))
        fit = isotonize_l1(y.reshape(shape))
        assert l1_cost(y.reshape(shape), fit) == pytest.approx(res.fun, abs=1e-7)
