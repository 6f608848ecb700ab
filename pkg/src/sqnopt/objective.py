"""Objective oracles: sampled value, gradient and Hessian-vector products.

Every oracle evaluates its quantities as averages over an index set ``S``
of training examples. Passing ``S=None`` means the whole training set, which
gives the empirical objective itself. Hessians are never formed.

The cost model used by the optimizers lives here as well: a batch gradient
over ``b`` examples is charged ``2 b n`` operations and a sampled
Hessian-vector product over ``b_H`` examples ``3 b_H n``.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit, log_softmax, softmax

from .data import Dataset
from .vecmath import SparseVector, as_dense, sparse_dot

PROB_CLAMP = 1e-12


def sigmoid(w, x: SparseVector) -> float:
    """Logistic probability 1 / (1 + exp(-x.w)) for a single sparse example."""
    return float(expit(sparse_dot(x, w)))


class Objective:
    """Base class for finite-sum objectives F(w) = (1/N) sum_i f_i(w)."""

    dim: int
    num_examples: int

    def value_on(self, S, w):
        raise NotImplementedError

    def gradient_on(self, S, w):
        raise NotImplementedError

    def hessian_vector_on(self, S, w, s):
        raise NotImplementedError

    def value(self, w):
        return self.value_on(None, w)

    def gradient(self, w):
        return self.gradient_on(None, w)

    def hessian_vector(self, w, s):
        return self.hessian_vector_on(None, w, s)

    def accuracy(self, w):
        raise NotImplementedError(f"{type(self).__name__} has no notion of classification accuracy")

    def _batch_size(self, S):
        return self.num_examples if S is None else len(S)

    # op-count model, one multiply-add counted as one operation
    def gradient_work(self, b):
        return 2.0 * b * self.dim

    def hessian_vector_work(self, b_H):
        return 3.0 * b_H * self.dim


def _check_batch(S):
    if S is not None and len(S) == 0:
        raise ValueError("empty sample")


class _DataObjective(Objective):
    def __init__(self, data: Dataset):
        self.data = data
        self.num_examples = data.num_examples

    def _rows(self, S):
        _check_batch(S)
        if S is None:
            return self.data.X, self.data.labels
        return self.data.X[S], self.data.labels[S]


class BinaryLogistic(_DataObjective):
    """Cross-entropy loss of logistic regression with labels z in {0, 1}."""

    def __init__(self, data: Dataset):
        if not data.is_binary:
            raise ValueError("BinaryLogistic needs a binary dataset")
        super().__init__(data)
        self.dim = data.dim

    def value_on(self, S, w):
        X, z = self._rows(S)
        c = np.clip(expit(X @ w), PROB_CLAMP, 1.0 - PROB_CLAMP)
        return float(-np.mean(z * np.log(c) + (1 - z) * np.log1p(-c)))

    def gradient_on(self, S, w):
        X, z = self._rows(S)
        r = expit(X @ w) - z
        return X.T @ r / X.shape[0]

    def hessian_vector_on(self, S, w, s):
        X, _ = self._rows(S)
        c = expit(X @ w)
        return X.T @ (c * (1.0 - c) * (X @ s)) / X.shape[0]

    def predict(self, w):
        # ties at exactly 0.5 go to class 1
        return (expit(self.data.X @ w) >= 0.5).astype(np.int64)

    def accuracy(self, w):
        return float(np.mean(self.predict(w) == self.data.labels))


class MulticlassLogistic(_DataObjective):
    """Softmax regression; parameters are W (classes x features) flattened row-major."""

    def __init__(self, data: Dataset):
        super().__init__(data)
        self.num_classes = data.num_classes
        self.num_features = data.dim
        self.dim = self.num_classes * self.num_features

    def _matrix(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.dim,):
            raise ValueError(f"expected flat parameters of length {self.dim}, got {w.shape}")
        return w.reshape(self.num_classes, self.num_features)

    def probabilities(self, S, w):
        X, _ = self._rows(S)
        return softmax(X @ self._matrix(w).T, axis=1)

    def value_on(self, S, w):
        X, z = self._rows(S)
        logp = log_softmax(X @ self._matrix(w).T, axis=1)
        return float(-np.mean(logp[np.arange(z.size), z]))

    def gradient_on(self, S, w):
        X, z = self._rows(S)
        P = softmax(X @ self._matrix(w).T, axis=1)
        P[np.arange(z.size), z] -= 1.0
        return np.asarray(X.T @ P).T.ravel() / X.shape[0]

    def hessian_vector_on(self, S, w, s):
        X, _ = self._rows(S)
        P = softmax(X @ self._matrix(w).T, axis=1)
        Q = X @ self._matrix(s).T
        R = P * Q - P * np.sum(P * Q, axis=1, keepdims=True)
        return np.asarray(X.T @ R).T.ravel() / X.shape[0]

    def predict(self, w):
        return np.argmax(self.data.X @ self._matrix(w).T, axis=1)

    def accuracy(self, w):
        return float(np.mean(self.predict(w) == self.data.labels))


class RidgeWrapped(Objective):
    """Adds (sigma/2)||w||^2 to any oracle; the sampled Hessian gains sigma*I."""

    def __init__(self, inner: Objective, sigma):
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        self.inner = inner
        self.sigma = float(sigma)
        self.dim = inner.dim
        self.num_examples = inner.num_examples

    def value_on(self, S, w):
        return self.inner.value_on(S, w) + 0.5 * self.sigma * float(w @ w)

    def gradient_on(self, S, w):
        return self.inner.gradient_on(S, w) + self.sigma * w

    def hessian_vector_on(self, S, w, s):
        return self.inner.hessian_vector_on(S, w, s) + self.sigma * s

    def accuracy(self, w):
        return self.inner.accuracy(w)

    def gradient_work(self, b):
        return self.inner.gradient_work(b)

    def hessian_vector_work(self, b_H):
        return self.inner.hessian_vector_work(b_H)


def ridge_wrap(inner: Objective, sigma) -> RidgeWrapped:
    return RidgeWrapped(inner, sigma)


class NoisyQuadratic(Objective):
    """Strongly convex quadratic F(w) = 1/2 sum_i d_i w_i^2 with noisy gradients.

    Two noise models are offered:

    * finite-sum: example ``i`` carries a fixed noise vector xi_i (drawn once,
      i.i.d. N(0, noise_sigma^2) per coordinate, then centered so the xi_i
      average to zero). Its component function is
      ``f_i(w) = F(w) + xi_i . w``, so the empirical objective is exactly F,
      sampled gradients are unbiased, and re-evaluating on the same sample
      reuses the same noise.
    * streaming: :meth:`noisy_gradient` adds fresh N(0, noise_sigma^2) noise
      from the oracle's own generator on every call.

    The minimizer is w* = 0 with F(w*) = 0.
    """

    def __init__(self, curvature, noise_sigma=1.0, num_examples=1000, seed=None):
        d = as_dense(curvature)
        if np.any(d <= 0) or not np.all(np.isfinite(d)):
            raise ValueError("curvature entries must be positive and finite")
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        self.curvature = d
        self.noise_sigma = float(noise_sigma)
        self.dim = d.size
        self.num_examples = int(num_examples)
        self.rng = np.random.default_rng(seed)
        noise = self.noise_sigma * self.rng.standard_normal((self.num_examples, self.dim))
        if self.num_examples > 1:
            noise -= noise.mean(axis=0)
        else:
            noise[:] = 0.0
        noise.setflags(write=False)
        self.noise = noise

    @property
    def lambda_lo(self):
        return float(self.curvature.min())

    @property
    def lambda_hi(self):
        return float(self.curvature.max())

    @property
    def minimizer(self):
        return np.zeros(self.dim)

    def exact_value(self, w):
        return 0.5 * float(self.curvature @ (w * w))

    def exact_gradient(self, w):
        return self.curvature * w

    def noisy_gradient(self, w):
        g = self.curvature * w
        if self.noise_sigma > 0:
            g = g + self.noise_sigma * self.rng.standard_normal(self.dim)
        return g

    def _mean_noise(self, S):
        _check_batch(S)
        if S is None:
            return self.noise.mean(axis=0)
        if len(S) == 1:
            return self.noise[S[0]]
        return self.noise[S].mean(axis=0)

    def value_on(self, S, w):
        return self.exact_value(w) + float(self._mean_noise(S) @ w)

    def gradient_on(self, S, w):
        return self.curvature * w + self._mean_noise(S)

    def hessian_vector_on(self, S, w, s):
        _check_batch(S)
        return self.curvature * s

    def value(self, w):
        return self.exact_value(w)

    def gradient(self, w):
        return self.exact_gradient(w)

    def noise_second_moment(self):
        """E_i ||xi_i||^2 over the finite population of per-example noises."""
        return float(np.mean(np.sum(self.noise**2, axis=1)))
