"""SGD, SQN and oLBFGS iterations plus the experiment driver.

All three methods take steps ``w <- w - (beta/k) d`` with ``d`` the batch
gradient (SGD) or an L-BFGS direction ``H g`` obtained by the two-loop
recursion. They differ in where the correction pairs come from:

* SQN averages the iterates over windows of L iterations and, every L
  iterations, forms ``s = wbar_t - wbar_{t-1}`` and ``y`` as a sampled
  Hessian-vector product at ``wbar_t`` on an independent Hessian batch.
  The first 2L iterations are plain SGD steps.
* oLBFGS forms a pair at every iteration from the step just taken, with
  ``y`` the difference of two gradients evaluated on the same batch.

Each iteration charges accessed data points (adp) and work (op counts) to
its state so that runs can be compared on equal cost.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .data import EpochSampler, sample_hessian_batch
from .diagnostics import RunRecord, grad_error, hv_error, test_metrics, two_loop_work
from .lbfgs import DEFAULT_EPSILON_CURV, CorrectionPair, LbfgsMemory, accept_pair, make_pair, two_loop_apply

METHODS = ("sgd", "sqn", "olbfgs")


@dataclass(frozen=True)
class StepSchedule:
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    def __call__(self, k):
        return step_length(self, k)


def step_length(sched: StepSchedule, k):
    """alpha_k = beta / k."""
    if k < 1:
        raise ValueError("iteration counter starts at 1")
    return sched.beta / k


@dataclass
class OptimizerConfig:
    """Hyperparameters and RNG seeds of one optimizer run.

    ``olbfgs_scaling`` selects the initial matrix of oLBFGS: ``"average"``
    (mean of s.y/y.y over the last M pairs) or ``"newest"`` (the newest pair,
    as in SQN). ``olbfgs_curvature`` selects how oLBFGS measures y:
    ``"gradient"`` differences two same-batch gradients, ``"hessian"`` uses a
    Hessian-vector product on that batch instead.
    """

    method: str = "sqn"
    b: int = 50
    beta: float = 1.0
    b_H: int = 1000
    L: int = 20
    M: int = 5
    epsilon_curv: float = DEFAULT_EPSILON_CURV
    first_step_scale: float = 1e-6
    olbfgs_scaling: str = "average"
    olbfgs_curvature: str = "gradient"
    grad_seed: int = 1
    hess_seed: int = 2

    def validate(self, N=None):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.b < 1:
            raise ValueError("b must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if self.method == "sqn":
            if self.L < 1:
                raise ValueError("SQN needs L >= 1")
            if self.b_H < 1:
                raise ValueError("SQN needs b_H >= 1")
        if self.method == "olbfgs":
            if self.olbfgs_scaling not in ("average", "newest"):
                raise ValueError("olbfgs_scaling must be 'average' or 'newest'")
            if self.olbfgs_curvature not in ("gradient", "hessian"):
                raise ValueError("olbfgs_curvature must be 'gradient' or 'hessian'")
            if not self.first_step_scale > 0:
                raise ValueError("first_step_scale must be positive")
        if not self.epsilon_curv >= 0:
            raise ValueError("epsilon_curv must be >= 0")
        if N is not None:
            if self.b > N:
                raise ValueError(f"b={self.b} exceeds the number of examples N={N}")
            if self.method == "sqn" and self.b_H > N:
                raise ValueError(f"b_H={self.b_H} exceeds the number of examples N={N}")
        return self


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass
class _State:
    w: np.ndarray
    b: int
    schedule: StepSchedule
    k: int = 0
    adp: int = 0
    work: float = 0.0
    n_qn_steps: int = 0
    last_point: Optional[np.ndarray] = None
    last_batch: Optional[np.ndarray] = None
    last_grad: Optional[np.ndarray] = None


@dataclass
class SgdState(_State):
    pass


@dataclass
class SqnState(_State):
    b_H: int = 1000
    L: int = 20
    M: int = 5
    epsilon_curv: float = DEFAULT_EPSILON_CURV
    t: int = -1
    wbar_accum: Optional[np.ndarray] = None
    wbar_prev: Optional[np.ndarray] = None
    mem: Optional[LbfgsMemory] = None
    n_hv: int = 0
    n_skipped: int = 0
    last_hv: Optional[tuple] = None

    def __post_init__(self):
        if self.wbar_accum is None:
            self.wbar_accum = np.zeros_like(self.w)
        if self.mem is None:
            self.mem = LbfgsMemory(self.M)


@dataclass
class OlbfgsState(_State):
    M: int = 5
    epsilon_curv: float = DEFAULT_EPSILON_CURV
    first_step_scale: float = 1e-6
    scaling: str = "average"
    curvature: str = "gradient"
    mem: Optional[LbfgsMemory] = None
    quotients: deque = field(default_factory=deque)
    prev_w: Optional[np.ndarray] = None
    prev_batch: Optional[np.ndarray] = None
    n_hv: int = 0
    n_skipped: int = 0

    def __post_init__(self):
        if self.mem is None:
            self.mem = LbfgsMemory(self.M)
        self.quotients = deque(self.quotients, maxlen=max(self.M, 1))


def make_state(config: OptimizerConfig, w0):
    w = np.array(w0, dtype=np.float64)
    sched = StepSchedule(config.beta)
    if config.method == "sgd":
        return SgdState(w=w, b=config.b, schedule=sched)
    if config.method == "sqn":
        return SqnState(w=w, b=config.b, schedule=sched, b_H=config.b_H, L=config.L,
                        M=config.M, epsilon_curv=config.epsilon_curv)
    return OlbfgsState(w=w, b=config.b, schedule=sched, M=config.M,
                       epsilon_curv=config.epsilon_curv,
                       first_step_scale=config.first_step_scale,
                       scaling=config.olbfgs_scaling, curvature=config.olbfgs_curvature)


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

def _batch_gradient(state: _State, oracle, sampler):
    S = sampler.next_batch(state.b)
    g = oracle.gradient_on(S, state.w)
    state.adp += state.b
    state.work += oracle.gradient_work(state.b)
    state.last_point, state.last_batch, state.last_grad = state.w, S, g
    return S, g


def _lbfgs_direction(state, oracle, g, gamma=None):
    d = two_loop_apply(state.mem, g, gamma)
    state.n_qn_steps += 1
    state.work += two_loop_work(state.mem.capacity, oracle.dim)
    return d


# ---------------------------------------------------------------------------
# iterations
# ---------------------------------------------------------------------------

def sgd_step(state: SgdState, oracle, sampler: EpochSampler):
    k = state.k + 1
    alpha = step_length(state.schedule, k)
    _, g = _batch_gradient(state, oracle, sampler)
    state.w = state.w - alpha * g
    state.k = k
    return state


def sqn_step(state: SqnState, oracle, grad_sampler: EpochSampler, hess_rng):
    """One pass through the SQN loop body.

    A skipped pair still advances t and moves the anchor to the new average,
    so consecutive averaging windows stay disjoint. If every pair so far has
    been skipped the memory is empty and a gradient step is taken.
    """
    k = state.k + 1
    alpha = step_length(state.schedule, k)
    w = state.w
    _, g = _batch_gradient(state, oracle, grad_sampler)
    state.wbar_accum += w
    if k <= 2 * state.L or state.mem.is_empty:
        w_next = w - alpha * g
    else:
        w_next = w - alpha * _lbfgs_direction(state, oracle, g)

    if k % state.L == 0:
        state.t += 1
        wbar = state.wbar_accum / state.L
        if state.t > 0:
            if np.any(wbar != state.wbar_prev):
                S_H = sample_hessian_batch(hess_rng, oracle.num_examples, state.b_H)
                pair = make_pair(wbar, state.wbar_prev, oracle, S_H, state.epsilon_curv)
                state.adp += state.b_H
                state.work += oracle.hessian_vector_work(state.b_H)
                state.n_hv += 1
                state.last_hv = (wbar, state.wbar_prev, S_H)
            else:
                pair = None
            if pair is None:
                state.n_skipped += 1
            else:
                state.mem.insert(pair)
        state.wbar_prev = wbar
        state.wbar_accum = np.zeros_like(w)

    state.w = w_next
    state.k = k
    return state


def _olbfgs_scaling(state: OlbfgsState):
    if state.scaling == "newest" or not state.quotients:
        return None
    return sum(state.quotients) / len(state.quotients)


def olbfgs_step(state: OlbfgsState, oracle, sampler: EpochSampler):
    """One oLBFGS iteration: step, then a same-batch curvature pair from that step."""
    k = state.k + 1
    alpha = step_length(state.schedule, k)
    w = state.w
    S, g = _batch_gradient(state, oracle, sampler)
    if state.mem.is_empty:
        w_next = w - (state.first_step_scale * alpha) * g
    else:
        w_next = w - alpha * _lbfgs_direction(state, oracle, g, _olbfgs_scaling(state))

    s = w_next - w
    if state.curvature == "gradient":
        y = oracle.gradient_on(S, w_next) - g
        state.work += oracle.gradient_work(state.b)
    else:
        y = oracle.hessian_vector_on(S, w_next, s)
        state.work += oracle.hessian_vector_work(state.b)
        state.n_hv += 1
    state.adp += state.b
    if accept_pair(s, y, state.epsilon_curv):
        pair = CorrectionPair.from_vectors(s, y)
        state.mem.insert(pair)
        state.quotients.append(pair.sy / pair.yy)
    else:
        state.n_skipped += 1

    state.prev_w, state.prev_batch = w, S
    state.w = w_next
    state.k = k
    return state


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

@dataclass
class RunLog:
    """Checkpoint records of a run plus the final optimizer state.

    ``counters`` holds, per record, the event counts behind the adp and work
    totals (gradient iterations, quasi-Newton directions, Hessian-vector
    products) so the accounting can be recomputed independently.
    """

    config: OptimizerConfig
    records: list
    counters: list
    state: _State

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def final(self) -> RunRecord:
        return self.records[-1]


def iterations_for_epochs(epochs, N, b):
    return math.ceil(epochs * N / b)


def run(config: OptimizerConfig, oracle, *, max_epochs=None, max_iters=None, max_adp=None,
        checkpoint_every=20, checkpoints=None, w0=None, test_oracle=None,
        monitor_errors=False, callback: Optional[Callable] = None) -> RunLog:
    """Run one optimizer and record metrics at checkpoints.

    Stops after `max_iters` iterations, after ``ceil(max_epochs N / b)``
    iterations, or as soon as adp reaches `max_adp`, whichever comes first.
    Records are taken whenever k is a multiple of `checkpoint_every` or a
    member of `checkpoints`, and always after the last iteration. Error
    monitors reuse the batches the optimizer drew, so enabling them does not
    perturb the trajectory.
    """
    N = oracle.num_examples
    config.validate(N)
    if max_epochs is None and max_iters is None and max_adp is None:
        raise ValueError("a stopping budget (max_epochs, max_iters or max_adp) is required")
    if checkpoint_every is not None and checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")
    limit = math.inf
    if max_iters is not None:
        limit = min(limit, max_iters)
    if max_epochs is not None:
        limit = min(limit, iterations_for_epochs(max_epochs, N, config.b))
    extra = frozenset(checkpoints or ())

    w0 = np.zeros(oracle.dim) if w0 is None else np.asarray(w0, dtype=np.float64)
    if w0.shape != (oracle.dim,):
        raise ValueError(f"w0 must have length {oracle.dim}")
    state = make_state(config, w0)
    grad_sampler = EpochSampler(N, seed=config.grad_seed)
    if config.method == "sgd":
        step = lambda: sgd_step(state, oracle, grad_sampler)  # noqa: E731
    elif config.method == "sqn":
        hess_rng = np.random.default_rng(config.hess_seed)
        step = lambda: sqn_step(state, oracle, grad_sampler, hess_rng)  # noqa: E731
    else:
        step = lambda: olbfgs_step(state, oracle, grad_sampler)  # noqa: E731

    records, counters = [], []

    def record():
        rec = {"k": state.k, "adp": state.adp, "work": state.work, "train_fx": oracle.value(state.w)}
        if test_oracle is not None:
            m = test_metrics(test_oracle, state.w)
            rec["test_fx"], rec["test_accuracy"] = m["test_fx"], m["test_accuracy"]
        if state.last_grad is not None:
            rec["grad_norm"] = float(np.linalg.norm(state.last_grad))
        if monitor_errors and state.last_grad is not None:
            try:
                rec["grad_error"] = grad_error(oracle, state.last_point, state.last_batch)
            except ValueError:
                pass
            last_hv = getattr(state, "last_hv", None)
            if last_hv is not None:
                try:
                    rec["hv_error"] = hv_error(oracle, *last_hv)
                except ValueError:
                    pass
        records.append(RunRecord(**rec))
        counters.append({"k": state.k, "n_qn_steps": state.n_qn_steps,
                         "n_hv": getattr(state, "n_hv", 0)})

    while state.k < limit and (max_adp is None or state.adp < max_adp):
        step()
        if callback is not None:
            callback(state)
        k = state.k
        if (checkpoint_every is not None and k % checkpoint_every == 0) or k in extra:
            record()
    if not records or records[-1].k != state.k:
        record()
    return RunLog(config, records, counters, state)
