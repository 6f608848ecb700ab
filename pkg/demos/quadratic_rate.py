"""Watch k * (F(w^k) - F*) level off for SQN on a noisy diagonal quadratic.

Run with ``python3 demos/quadratic_rate.py``.
"""
import numpy as np

from sqnopt import NoisyQuadratic, OptimizerConfig, run

curvature = np.linspace(1.0, 4.0, 10)
checkpoints = [10, 100, 1000, 5000, 10000]
gaps = []
for seed in range(20):
    q = NoisyQuadratic(curvature, noise_sigma=1.0, num_examples=20000, seed=seed)
    cfg = OptimizerConfig("sqn", b=1, beta=4.0, b_H=1, L=20, M=5,
                          grad_seed=1000 + seed, hess_seed=2000 + seed)
    log = run(cfg, q, max_iters=checkpoints[-1], checkpoint_every=None,
              checkpoints=checkpoints, w0=np.ones(10))
    # the minimizer is the origin and F* = 0, so train_fx is the optimality gap
    gaps.append([r.train_fx for r in log.records if r.k in checkpoints])

mean_gap = np.mean(gaps, axis=0)
for k, gap in zip(checkpoints, mean_gap):
    print(f"k={k:>6}  mean gap={gap:.3e}  k*gap={k * gap:.4f}")
