"""Compare SGD and SQN on synthetic logistic regression at equal data access.

Run with ``python3 demos/synthetic_sgd_vs_sqn.py``.
"""
from sqnopt import BinaryLogistic, OptimizerConfig, generate_synthetic_binary, run

data, _ = generate_synthetic_binary(n=50, N=7000, seed=0)
oracle = BinaryLogistic(data)
budget = 4 * data.num_examples

configs = {
    "sgd": OptimizerConfig("sgd", b=50, beta=5.0, grad_seed=1),
    "sqn": OptimizerConfig("sqn", b=50, beta=2.0, b_H=600, L=10, M=10, grad_seed=1, hess_seed=2),
}
logs = {name: run(cfg, oracle, max_adp=budget) for name, cfg in configs.items()}

print(f"{'adp':>8} " + " ".join(f"{name:>10}" for name in logs))
for rows in zip(*(log.records[::10] for log in logs.values())):
    print(f"{rows[0].adp:>8} " + " ".join(f"{r.train_fx:>10.5f}" for r in rows))
for name, log in logs.items():
    print(f"{name}: k={log.final.k} adp={log.final.adp} F={log.final.train_fx:.5f}")
