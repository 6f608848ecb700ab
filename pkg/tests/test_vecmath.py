import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sqnopt.vecmath import SparseVector, axpy, densify, dot, sparse_dot

finite = st.floats(-1.0, 1.0, allow_nan=False)


def test_dot_examples():
    assert dot([1, 2], [3, 4]) == 11
    assert dot(np.array([1.5, -2.0, 7.0]), np.zeros(3)) == 0
    e1 = np.array([1.0, 0.0, 0.0])
    assert dot(e1, e1) == 1


def test_dot_dimension_mismatch():
    with pytest.raises(ValueError):
        dot([1, 2], [1, 2, 3])


def test_sparse_dot_examples():
    assert sparse_dot(SparseVector([0], [1.0], 2), np.array([2.0, 5.0])) == 2
    assert sparse_dot(SparseVector([], [], 4), np.arange(4.0)) == 0
    assert sparse_dot(SparseVector([0, 1], [1.0, 1.0], 2), np.array([3.0, 4.0])) == 7


def test_sparse_dot_index_out_of_range():
    with pytest.raises(IndexError):
        sparse_dot(SparseVector([3], [1.0], 5), np.zeros(2))


def test_sparse_vector_validation():
    with pytest.raises(ValueError):
        SparseVector([2, 1], [1.0, 1.0], 5)
    with pytest.raises(IndexError):
        SparseVector([0, 5], [1.0, 1.0], 5)


def test_axpy_examples():
    y = np.array([4.0, -1.0])
    axpy(0.0, np.array([9.0, 9.0]), y)
    np.testing.assert_array_equal(y, [4.0, -1.0])

    y = np.zeros(2)
    axpy(1.0, np.ones(2), y)
    np.testing.assert_array_equal(y, [1.0, 1.0])

    y = np.array([5.0, 5.0])
    axpy(-2.0, SparseVector([1], [1.0], 2), y)
    np.testing.assert_array_equal(y, [5.0, 3.0])


def test_axpy_mismatch():
    with pytest.raises(ValueError):
        axpy(1.0, np.ones(3), np.zeros(2))
    with pytest.raises(ValueError):
        axpy(1.0, SparseVector([0], [1.0], 3), np.zeros(2))


@given(arrays(np.float64, 8, elements=finite), arrays(np.float64, 8, elements=finite))
def test_dot_symmetric(a, b):
    assert dot(a, b) == pytest.approx(dot(b, a), rel=1e-12, abs=1e-300)


@settings(max_examples=50)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_sparse_dot_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    mask = rng.random(n) < 0.3
    x = SparseVector(np.flatnonzero(mask), rng.normal(size=mask.sum()), n)
    w = rng.normal(size=n)
    expected = dot(densify(x), w)
    assert sparse_dot(x, w) == pytest.approx(expected, rel=1e-14, abs=1e-14)


@given(arrays(np.float64, 6, elements=finite), arrays(np.float64, 6, elements=finite), finite)
def test_axpy_roundtrip(x, y0, alpha):
    y = y0.copy()
    axpy(alpha, x, y)
    axpy(-alpha, x, y)
    np.testing.assert_allclose(y, y0, rtol=1e-12, atol=1e-15)
