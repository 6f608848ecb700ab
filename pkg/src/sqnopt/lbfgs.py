"""Limited-memory BFGS: correction pairs, pair storage and the two-loop recursion.

The inverse-Hessian approximation H_t is defined by the classical recipe:
start from ``(s_t.y_t / y_t.y_t) I`` built from the newest pair, then apply
the BFGS inverse update

    H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T,    rho = 1 / y.s

once per stored pair, oldest first. :func:`two_loop_apply` evaluates
``H_t g`` in O(M n) without ever forming H_t.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

DEFAULT_EPSILON_CURV = 1e-8


@dataclass(frozen=True)
class CorrectionPair:
    s: np.ndarray
    y: np.ndarray
    sy: float
    yy: float
    rho: float

    @classmethod
    def from_vectors(cls, s, y):
        s = np.array(s, dtype=np.float64)
        y = np.array(y, dtype=np.float64)
        sy = float(s @ y)
        if not sy > 0.0:
            raise ValueError(f"curvature condition violated: s.y = {sy}")
        s.setflags(write=False)
        y.setflags(write=False)
        return cls(s, y, sy, float(y @ y), 1.0 / sy)


def accept_pair(s, y, epsilon_curv=DEFAULT_EPSILON_CURV):
    """Curvature safeguard: keep the pair only if s.y >= epsilon_curv * s.s."""
    ss = float(s @ s)
    if ss == 0.0 or not (np.all(np.isfinite(s)) and np.all(np.isfinite(y))):
        return False
    sy = float(s @ y)
    return sy > 0.0 and sy >= epsilon_curv * ss


def make_pair(wbar_t, wbar_prev, oracle, S_H, epsilon_curv=DEFAULT_EPSILON_CURV):
    """Form (s, y) from two averaged iterates with a sampled Hessian-vector product.

    Returns ``None`` when the pair is skipped: either the displacement is zero
    (no Hessian-vector product is evaluated then) or the curvature safeguard
    rejects it.
    """
    if len(S_H) == 0:
        raise ValueError("empty Hessian sample")
    s = wbar_t - wbar_prev
    if not np.any(s):
        return None
    y = oracle.hessian_vector_on(S_H, wbar_t, s)
    if not accept_pair(s, y, epsilon_curv):
        return None
    return CorrectionPair.from_vectors(s, y)


class LbfgsMemory:
    """Ring buffer of the M most recent correction pairs, newest last.

    With ``capacity == 0`` no BFGS updates are applied, but the newest pair is
    still retained so that H_t reduces to the scaled identity
    ``(s_t.y_t / y_t.y_t) I``.
    """

    def __init__(self, capacity):
        if capacity < 0:
            raise ValueError("memory capacity must be >= 0")
        self.capacity = int(capacity)
        self._pairs = deque(maxlen=max(self.capacity, 1))
        self._update_pairs = ()
        self._stacked = None
        self.total_inserted = 0

    def insert(self, pair: CorrectionPair):
        if not pair.sy > 0.0:
            raise ValueError("refusing pair that violates the curvature condition")
        self._pairs.append(pair)
        if self.capacity:
            self._update_pairs = tuple(self._pairs)
            S = np.array([p.s for p in self._update_pairs])
            Y = np.array([p.y for p in self._update_pairs])
            rho = [p.rho for p in self._update_pairs]
            SY = np.vstack([S, Y])
            self._stacked = (SY, SY.T.copy(), rho, (S @ Y.T).tolist(), (Y @ Y.T).tolist())
        self.total_inserted += 1

    @property
    def pairs(self):
        """Pairs used by the BFGS updates, oldest first."""
        return self._update_pairs

    @property
    def newest(self):
        return self._pairs[-1] if self._pairs else None

    @property
    def count(self):
        return len(self._pairs) if self.capacity else 0

    def __len__(self):
        return self.count

    @property
    def is_empty(self):
        return not self._pairs

    def initial_scaling(self):
        p = self.newest
        if p is None:
            raise ValueError("empty L-BFGS memory")
        return p.sy / p.yy


def two_loop_apply(mem: LbfgsMemory, g, gamma=None):
    """Return H_t g by the two-loop recursion.

    `gamma` overrides the initial scaling ``s_t.y_t / y_t.y_t``.

    Both loops only need inner products of the pairs with the running vector.
    These are expanded into products with `g` plus corrections from cached
    ``s_i.y_j`` and ``y_i.y_j`` tables, so a call costs two (2m x n)
    mat-vecs and O(m^2) scalar work.
    """
    if mem.is_empty:
        raise ValueError("empty L-BFGS memory: take a gradient step instead")
    if gamma is None:
        gamma = mem.initial_scaling()
    g = np.asarray(g, dtype=np.float64)
    if mem._stacked is None:
        return gamma * g
    stacked, stacked_t, rho, SY, YY = mem._stacked
    m = len(rho)
    proj = (stacked @ g).tolist()
    sg, yg = proj[:m], proj[m:]

    # newest to oldest: alpha_i = rho_i s_i.(g - sum_{j>i} alpha_j y_j)
    alpha = [0.0] * m
    for i in range(m - 1, -1, -1):
        acc = sg[i]
        row = SY[i]
        for j in range(i + 1, m):
            acc -= alpha[j] * row[j]
        alpha[i] = rho[i] * acc

    # r = gamma (g - sum_j alpha_j y_j); oldest to newest:
    # beta_i = rho_i y_i.(r + sum_{j<i} (alpha_j - beta_j) s_j)
    coef = [0.0] * m
    for i in range(m):
        row = YY[i]
        acc = yg[i]
        for j in range(m):
            acc -= alpha[j] * row[j]
        acc *= gamma
        for j in range(i):
            acc += coef[j] * SY[j][i]
        coef[i] = alpha[i] - rho[i] * acc
    weights = np.array(coef + [-gamma * a for a in alpha])
    return gamma * g + stacked_t @ weights


@dataclass(frozen=True)
class EigenBoundReport:
    """Extremes of s.y/s.s and y.y/s.y over the stored pairs."""

    min_sy_ss: float
    max_sy_ss: float
    min_yy_sy: float
    max_yy_sy: float

    @property
    def min_ratio(self):
        return min(self.min_sy_ss, self.min_yy_sy)

    @property
    def max_ratio(self):
        return max(self.max_sy_ss, self.max_yy_sy)


def eigen_bound_report(mem: LbfgsMemory) -> EigenBoundReport:
    pairs = mem.pairs or ([mem.newest] if mem.newest is not None else [])
    if not pairs:
        raise ValueError("empty L-BFGS memory")
    sy_ss = [p.sy / float(p.s @ p.s) for p in pairs]
    yy_sy = [p.yy / p.sy for p in pairs]
    return EigenBoundReport(min(sy_ss), max(sy_ss), min(yy_sy), max(yy_sy))


def hessian_approx_bounds(lambda_lo, lambda_hi, n, M):
    """Conservative (mu1, mu2) with mu1 I <= H_t <= mu2 I.

    Valid whenever every pair satisfies lambda_lo <= s.y/s.s and
    y.y/s.y <= lambda_hi. The direct approximation B_t = H_t^{-1} has trace at
    most ``M3 = (n + M) lambda_hi``, which caps its largest eigenvalue, and
    determinant at least ``lambda_lo^n (lambda_lo / M3)^M``, which with the cap
    bounds its smallest eigenvalue below by ``det / M3^(n-1)``.
    """
    if not 0 < lambda_lo <= lambda_hi:
        raise ValueError("need 0 < lambda_lo <= lambda_hi")
    m3 = (n + M) * lambda_hi
    log_det_lo = n * math.log(lambda_lo) + M * (math.log(lambda_lo) - math.log(m3))
    log_bmin = log_det_lo - (n - 1) * math.log(m3)
    mu1 = 1.0 / m3
    try:
        mu2 = math.exp(-log_bmin)
    except OverflowError:
        mu2 = math.inf
    return mu1, mu2
