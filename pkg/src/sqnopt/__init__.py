"""Stochastic quasi-Newton optimization with sub-sampled Hessian-vector products.

Quick start::

    from sqnopt import BinaryLogistic, OptimizerConfig, generate_synthetic_binary, run

    data, _ = generate_synthetic_binary(n=50, N=7000, seed=0)
    log = run(OptimizerConfig("sqn", b=50, beta=2, b_H=600, L=10, M=10),
              BinaryLogistic(data), max_epochs=4)
    print(log.final.train_fx)
"""
from .data import (
    Dataset,
    EpochSampler,
    LibsvmFormatError,
    SparseExample,
    generate_synthetic_binary,
    generate_synthetic_multiclass,
    load_libsvm,
    next_gradient_batch,
    parse_libsvm,
    sample_hessian_batch,
    save_libsvm,
    train_test_split,
    write_libsvm,
)
from .diagnostics import (
    RunRecord,
    TheoryParams,
    grad_error,
    hv_error,
    q_beta,
    sqn_iteration_work,
    sqn_sgd_cost_ratio,
    test_metrics,
)
from .lbfgs import (
    CorrectionPair,
    LbfgsMemory,
    accept_pair,
    eigen_bound_report,
    hessian_approx_bounds,
    make_pair,
    two_loop_apply,
)
from .objective import (
    BinaryLogistic,
    MulticlassLogistic,
    NoisyQuadratic,
    Objective,
    RidgeWrapped,
    ridge_wrap,
    sigmoid,
)
from .optim import (
    OlbfgsState,
    OptimizerConfig,
    RunLog,
    SgdState,
    SqnState,
    StepSchedule,
    make_state,
    olbfgs_step,
    run,
    sgd_step,
    sqn_step,
    step_length,
)
from .vecmath import SparseVector, axpy, densify, dot, sparse_dot

__version__ = "0.1.0"
