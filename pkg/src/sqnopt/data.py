"""Datasets, libsvm ingestion, synthetic generators and batch samplers.

A :class:`Dataset` keeps its features as a CSR matrix (one row per example)
so the objectives can evaluate whole batches with sparse mat-vecs. The
per-example view (:class:`SparseExample`) is available for inspection and
for the scalar kernels in :mod:`sqnopt.vecmath`.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, softmax

from .vecmath import SparseVector


class LibsvmFormatError(ValueError):
    """Raised for malformed libsvm/svmlight input; carries the 1-based line number."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class SparseExample:
    features: SparseVector
    label: int


class Dataset:
    """Immutable training set of N examples in R^n with integer labels.

    Binary datasets (``num_classes == 2``) store labels in {0, 1}; multiclass
    labels are class ids in ``[0, num_classes)``.
    """

    def __init__(self, X, labels, num_classes=2):
        X = sp.csr_matrix(X, dtype=np.float64)
        X.sort_indices()
        labels = np.asarray(labels, dtype=np.int64)
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one example")
        if labels.shape != (X.shape[0],):
            raise ValueError("one label per example required")
        if num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if labels.min() < 0 or labels.max() >= num_classes:
            raise ValueError(f"labels must lie in [0, {num_classes})")
        X.data.setflags(write=False)
        labels.setflags(write=False)
        self.X = X
        self.labels = labels
        self.num_classes = int(num_classes)

    @property
    def num_examples(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def is_binary(self):
        return self.num_classes == 2

    def __len__(self):
        return self.num_examples

    def __repr__(self):
        return f"Dataset(N={self.num_examples}, n={self.dim}, classes={self.num_classes})"

    def example(self, i) -> SparseExample:
        lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
        x = SparseVector(self.X.indices[lo:hi], self.X.data[lo:hi], self.dim)
        return SparseExample(x, int(self.labels[i]))

    @property
    def examples(self) -> Iterator[SparseExample]:
        return (self.example(i) for i in range(self.num_examples))

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[indices], self.labels[indices], self.num_classes)

    def max_row_norm_sq(self):
        """max_i ||x_i||^2, the quantity that bounds logistic curvature."""
        return float(self.X.multiply(self.X).sum(axis=1).max())

    def equals(self, other: "Dataset"):
        return (
            self.num_classes == other.num_classes
            and self.X.shape == other.X.shape
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.X.indptr, other.X.indptr)
            and np.array_equal(self.X.indices, other.X.indices)
            and np.array_equal(self.X.data, other.X.data)
        )


# ---------------------------------------------------------------------------
# libsvm / svmlight text format
# ---------------------------------------------------------------------------

def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise LibsvmFormatError(lineno, f"bad label {token!r}") from None
    if not value.is_integer():
        raise LibsvmFormatError(lineno, f"non-integer label {token!r}")
    return int(value)


def parse_libsvm(stream, expected_dim=None, num_classes=None) -> Dataset:
    """Read libsvm text (1-based feature indices) into a :class:`Dataset`.

    Labels drawn from {-1, +1} or {0, 1} are treated as binary (-1 maps to 0).
    Anything else is read as nonnegative class ids with
    ``num_classes = max label + 1`` unless `num_classes` is given.
    Comments are not accepted.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, indptr, indices, values = [], [0], [], []
    max_index = 0
    for lineno, line in enumerate(stream, start=1):
        tokens = line.split()
        if not tokens:
            continue
        if any("#" in t for t in tokens):
            raise LibsvmFormatError(lineno, "comments are not supported")
        labels.append(_parse_label(tokens[0], lineno))
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmFormatError(lineno, f"expected idx:val, got {tok!r}")
            try:
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise LibsvmFormatError(lineno, f"bad feature {tok!r}") from None
            if idx < 1:
                raise LibsvmFormatError(lineno, f"feature index {idx} < 1 (indices are 1-based)")
            if idx <= prev:
                raise LibsvmFormatError(lineno, f"feature indices not strictly increasing at {idx}")
            prev = idx
            indices.append(idx - 1)
            values.append(val)
        max_index = max(max_index, prev)
        indptr.append(len(indices))
    if not labels:
        raise LibsvmFormatError(0, "no examples found")

    dim = max_index
    if expected_dim is not None:
        if expected_dim < max_index:
            raise ValueError(f"feature index {max_index} exceeds expected_dim={expected_dim}")
        dim = expected_dim

    y = np.asarray(labels, dtype=np.int64)
    present = set(np.unique(y).tolist())
    if num_classes in (None, 2) and (present <= {-1, 1} or present <= {0, 1}):
        y = (y > 0).astype(np.int64)
        k = 2
    else:
        if y.min() < 0:
            raise ValueError("negative labels are only valid in {-1, +1} binary data")
        k = num_classes if num_classes is not None else max(int(y.max()) + 1, 2)
    X = sp.csr_matrix(
        (np.asarray(values), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(labels), dim),
    )
    return Dataset(X, y, k)


def load_libsvm(path, expected_dim=None, num_classes=None) -> Dataset:
    with open(path) as fh:
        return parse_libsvm(fh, expected_dim=expected_dim, num_classes=num_classes)


def write_libsvm(dataset: Dataset, stream):
    """Serialize with 1-based indices and round-trip exact (repr) floats."""
    X = dataset.X
    for i in range(dataset.num_examples):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        feats = " ".join(f"{j + 1}:{v!r}" for j, v in zip(X.indices[lo:hi].tolist(), X.data[lo:hi].tolist()))
        label = int(dataset.labels[i])
        stream.write(f"{label} {feats}\n" if feats else f"{label}\n")


def save_libsvm(dataset: Dataset, path):
    with open(path, "w") as fh:
        write_libsvm(dataset, fh)


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def _unit_rows(rng, N, n):
    X = rng.standard_normal((N, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X


def generate_synthetic_binary(n, N, seed, w_scale=1.0):
    """Logistic-model data: returns ``(dataset, w_true)``.

    w_true ~ U[-1, 1]^n (times `w_scale`), x_i standard normal scaled to unit
    norm, z_i ~ Bernoulli(sigmoid(x_i . w_true)). Deterministic in `seed`.
    """
    if n < 1 or N < 1:
        raise ValueError("need n >= 1 and N >= 1")
    rng = np.random.default_rng(seed)
    w_true = w_scale * rng.uniform(-1.0, 1.0, size=n)
    X = _unit_rows(rng, N, n)
    z = (rng.random(N) < expit(X @ w_true)).astype(np.int64)
    return Dataset(X, z, 2), w_true


def generate_synthetic_multiclass(num_features, num_classes, N, seed, w_scale=1.0):
    """Softmax-model data; W_true is (num_classes, num_features), returned flattened row-major."""
    if num_features < 1 or N < 1 or num_classes < 2:
        raise ValueError("need num_features >= 1, N >= 1, num_classes >= 2")
    rng = np.random.default_rng(seed)
    W = w_scale * rng.standard_normal((num_classes, num_features))
    X = _unit_rows(rng, N, num_features)
    P = softmax(X @ W.T, axis=1)
    cdf = np.cumsum(P, axis=1)
    u = rng.random((N, 1))
    z = np.minimum((u > cdf).sum(axis=1), num_classes - 1)
    return Dataset(X, z, num_classes), W.ravel()


def train_test_split(dataset: Dataset, train_fraction, seed):
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    N = dataset.num_examples
    # round first so that e.g. 0.7 * 10 does not ceil to 8
    n_train = math.ceil(round(train_fraction * N, 9))
    if n_train < 1 or n_train >= N:
        raise ValueError(f"split of N={N} at {train_fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(N)
    return dataset.subset(np.sort(perm[:n_train])), dataset.subset(np.sort(perm[n_train:]))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

class EpochSampler:
    """Draws gradient batches without replacement, reshuffling every epoch.

    A batch that runs past the end of the current permutation is completed
    from a fresh one, so every call returns exactly ``b`` indices.
    """

    def __init__(self, N, seed=None, rng=None):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.N = int(N)
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.permutation = self.rng.permutation(self.N)
        self.cursor = 0
        self.epoch = 0

    def _reshuffle(self):
        self.permutation = self.rng.permutation(self.N)
        self.cursor = 0
        self.epoch += 1

    def next_batch(self, b):
        if not 1 <= b <= self.N:
            raise ValueError(f"batch size {b} outside [1, {self.N}]")
        end = self.cursor + b
        if end <= self.N:
            batch = self.permutation[self.cursor:end]
            self.cursor = end
            if end == self.N:
                self._reshuffle()
            return batch
        head = self.permutation[self.cursor:]
        self._reshuffle()
        rest = b - head.size
        self.cursor = rest
        return np.concatenate([head, self.permutation[:rest]])


def next_gradient_batch(sampler: EpochSampler, b):
    return sampler.next_batch(b)


def sample_hessian_batch(rng, N, b_H):
    """b_H distinct indices drawn uniformly from range(N)."""
    if not 1 <= b_H <= N:
        raise ValueError(f"Hessian batch size {b_H} outside [1, {N}]")
    if b_H == N:
        return np.arange(N)
    return rng.choice(N, size=b_H, replace=False)
