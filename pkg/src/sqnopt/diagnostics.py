"""Run records, relative-error monitors, test-set metrics and rate constants."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class RunRecord:
    """Metrics at one checkpoint, after `k` completed iterations."""

    k: int
    adp: int
    work: float
    train_fx: float
    test_fx: Optional[float] = None
    test_accuracy: Optional[float] = None
    grad_error: Optional[float] = None
    hv_error: Optional[float] = None
    grad_norm: Optional[float] = None

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


# ---------------------------------------------------------------------------
# op-count work model
# ---------------------------------------------------------------------------

def two_loop_work(M, n):
    return 4.0 * M * n


def sqn_iteration_work(b, b_H, L, M, n):
    """Amortized per-iteration cost of SQN: 2bn + 4Mn + 3 b_H n / L."""
    return 2.0 * b * n + 4.0 * M * n + 3.0 * b_H * n / L


def sqn_sgd_cost_ratio(b, b_H, L, M):
    """Cost of an SQN iteration over an SGD iteration under the same model.

    Both numerator and denominator use the same op counts (an SGD iteration
    is one batch gradient, 2bn), giving 1 + 2M/b + 3 b_H / (2 b L).
    """
    return sqn_iteration_work(b, b_H, L, M, 1) / (2.0 * b)


# ---------------------------------------------------------------------------
# error monitors
# ---------------------------------------------------------------------------

def grad_error(oracle, w, S):
    """||grad F(w) - batch gradient on S|| / ||grad F(w)|| against the full-data gradient."""
    full = oracle.gradient(w)
    denom = float(np.linalg.norm(full))
    if denom == 0.0:
        raise ValueError("full gradient vanishes; relative gradient error undefined")
    return float(np.linalg.norm(full - oracle.gradient_on(S, w))) / denom


def hv_error(oracle, wbar_t, wbar_prev, S_H):
    """Relative error of the sampled Hessian-vector product along wbar_t - wbar_prev."""
    s = wbar_t - wbar_prev
    full = oracle.hessian_vector(wbar_t, s)
    denom = float(np.linalg.norm(full))
    if denom == 0.0:
        raise ValueError("full Hessian-vector product vanishes; relative error undefined")
    return float(np.linalg.norm(full - oracle.hessian_vector_on(S_H, wbar_t, s))) / denom


def test_metrics(oracle, w):
    """Objective and classification accuracy of `w` on the oracle's (test) data."""
    if oracle.num_examples < 1:
        raise ValueError("empty test set")
    return {"test_fx": oracle.value(w), "test_accuracy": oracle.accuracy(w)}


# ---------------------------------------------------------------------------
# rate constants for E[F(w^k) - F*] <= Q(beta) / k
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryParams:
    """Curvature bounds lambda_lo/lambda_hi on the objective, mu1/mu2 on H_k,
    and gamma bounding the stochastic gradient norms."""

    lambda_lo: float
    lambda_hi: float
    mu1: float
    mu2: float
    gamma: float

    def __post_init__(self):
        if not 0 < self.lambda_lo <= self.lambda_hi:
            raise ValueError("need 0 < lambda_lo <= lambda_hi")
        if not 0 < self.mu1 <= self.mu2:
            raise ValueError("need 0 < mu1 <= mu2")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @property
    def beta_threshold(self):
        return 1.0 / (2.0 * self.mu1 * self.lambda_lo)

    def q_beta(self, beta, f_gap_initial):
        return q_beta(self, beta, f_gap_initial)


def q_beta(tp: TheoryParams, beta, f_gap_initial):
    denom = 2.0 * tp.mu1 * tp.lambda_lo * beta - 1.0
    if not denom > 0.0:
        raise ValueError(f"beta={beta} must exceed 1/(2 mu1 lambda) = {tp.beta_threshold}")
    noise_term = tp.lambda_hi * tp.mu2**2 * beta**2 * tp.gamma**2 / (2.0 * denom)
    return max(noise_term, float(f_gap_initial))
