"""Dense and sparse vector primitives.

Dense vectors are plain 1-d float64 numpy arrays. Sparse vectors keep
0-based, strictly increasing indices next to their values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_dense(values, n=None):
    """Return `values` as a contiguous float64 vector, checking length if given."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"expected length {n}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or val.shape != idx.shape:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise IndexError(f"sparse index out of range [0, {self.dim})")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("sparse indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def nnz(self):
        return self.indices.size

    def to_dense(self):
        return densify(self)


def densify(x: SparseVector) -> np.ndarray:
    out = np.zeros(x.dim)
    out[x.indices] = x.values
    return out


def dot(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(a @ b)


def sparse_dot(x: SparseVector, w) -> float:
    w = np.asarray(w, dtype=np.float64)
    if x.nnz and x.indices[-1] >= w.shape[0]:
        raise IndexError(f"sparse index {x.indices[-1]} out of range for length {w.shape[0]}")
    return float(x.values @ w[x.indices])


def axpy(alpha: float, x, y: np.ndarray) -> np.ndarray:
    """y <- y + alpha * x in place; `x` may be dense or a SparseVector."""
    if isinstance(x, SparseVector):
        if x.dim != y.shape[0]:
            raise ValueError(f"dimension mismatch: {x.dim} vs {y.shape[0]}")
        y[x.indices] += alpha * x.values
        return y
    x = np.asarray(x, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    y += alpha * x
    return y
