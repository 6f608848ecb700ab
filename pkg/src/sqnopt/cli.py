"""Command-line front end: configure a run, execute it and write checkpoint CSVs.

Two subcommands are provided::

    sqnopt run --opt sqn --synthetic 50 7000 --b 50 --bH 600 --L 10 --M 10 --beta 2 --epochs 4
    sqnopt compare sqn.conf sgd.conf

Config files hold one ``key = value`` per line, where ``key`` is a long flag
without the leading dashes (``bH = 600``, ``synthetic = 50 7000``,
``monitor-errors = true``). Flags given on the command line after
``--config FILE`` override the file.
"""
from __future__ import annotations

import argparse
import csv
import math
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .data import (
    generate_synthetic_binary,
    generate_synthetic_multiclass,
    load_libsvm,
    save_libsvm,
    train_test_split,
)
from .diagnostics import RunRecord
from .objective import BinaryLogistic, MulticlassLogistic, NoisyQuadratic, ridge_wrap
from .optim import METHODS, OptimizerConfig, RunLog, run

CSV_HEADER = ["k", "adp", "work", "train_fx", "test_fx", "test_acc", "grad_error", "hv_error", "grad_norm"]
_BOOL_FLAGS = {"monitor-errors", "scale-work"}


class ConfigError(ValueError):
    """Invalid command line or config file."""


@dataclass
class RunConfig:
    optimizer: str = "sqn"
    libsvm: Optional[str] = None
    synthetic: Optional[tuple] = None
    objective: str = "binary"
    classes: int = 3
    curvature: tuple = (1.0, 4.0)
    noise_sigma: float = 1.0
    sigma: float = 0.0
    b: int = 50
    b_H: int = 1000
    L: int = 20
    M: int = 5
    beta: float = 1.0
    epochs: Optional[float] = None
    max_iters: Optional[int] = None
    seed_data: int = 0
    seed_grad: int = 1
    seed_hess: int = 2
    checkpoint_every: int = 20
    split: Optional[float] = None
    monitor_errors: bool = False
    scale_work: bool = False
    output: Optional[str] = None
    olbfgs_scaling: str = "average"
    w0: Optional[float] = None
    dump_data: Optional[str] = None

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            method=self.optimizer, b=self.b, beta=self.beta, b_H=self.b_H, L=self.L, M=self.M,
            olbfgs_scaling=self.olbfgs_scaling, grad_seed=self.seed_grad, hess_seed=self.seed_hess,
        )

    @property
    def dataset_key(self):
        return (self.libsvm, self.synthetic, self.objective, self.classes, self.curvature,
                self.noise_sigma, self.split)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    p = _Parser(prog="sqnopt run", allow_abbrev=False,
                description="Run SGD, SQN or oLBFGS and write checkpoint metrics as CSV.")
    p.add_argument("--config", metavar="FILE", help="key=value file; later flags override it")
    p.add_argument("--opt", dest="optimizer", choices=METHODS)
    src = p.add_argument_group("data")
    src.add_argument("--libsvm", metavar="PATH", help="training data in LIBSVM format")
    src.add_argument("--synthetic", nargs=2, type=int, metavar=("n", "N"),
                     help="generate N examples with n features")
    src.add_argument("--objective", choices=("binary", "multiclass", "quadratic"))
    src.add_argument("--classes", type=int, help="number of classes for synthetic multiclass data")
    src.add_argument("--curvature", nargs=2, type=float, metavar=("LO", "HI"),
                     help="quadratic: diagonal curvature spread evenly over [LO, HI]")
    src.add_argument("--noise-sigma", type=float, help="quadratic: per-coordinate gradient noise")
    src.add_argument("--split", type=float, metavar="F", help="train on a fraction F, test on the rest")
    src.add_argument("--dump-data", metavar="PATH", help="also write the training set in LIBSVM format")
    opt = p.add_argument_group("optimizer")
    opt.add_argument("--sigma", type=float, help="ridge regularization weight")
    opt.add_argument("--b", type=int, help="gradient batch size")
    opt.add_argument("--bH", dest="b_H", type=int, help="Hessian-vector batch size (SQN)")
    opt.add_argument("--L", type=int, help="iterations between correction pairs (SQN)")
    opt.add_argument("--M", type=int, help="L-BFGS memory")
    opt.add_argument("--beta", type=float, help="step length beta/k")
    opt.add_argument("--olbfgs-scaling", choices=("average", "newest"))
    opt.add_argument("--w0", type=float, help="constant starting point (default 0, quadratic 1)")
    budget = p.add_argument_group("budget and output")
    budget.add_argument("--epochs", type=float)
    budget.add_argument("--max-iters", type=int)
    budget.add_argument("--seed-data", type=int)
    budget.add_argument("--seed-grad", type=int)
    budget.add_argument("--seed-hess", type=int)
    budget.add_argument("--checkpoint-every", type=int)
    budget.add_argument("--monitor-errors", action="store_true", default=None)
    budget.add_argument("--scale-work", action="store_true", default=None,
                        help="divide the work column by the number of variables")
    budget.add_argument("--output", "-o", metavar="PATH", help="CSV destination (default stdout)")
    return p


def read_config_file(path):
    """Translate a key=value file into the equivalent flag list."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    argv = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key in _BOOL_FLAGS:
            if value.lower() not in ("true", "false"):
                raise ConfigError(f"{path}:{lineno}: {key} must be true or false")
            if value.lower() == "true":
                argv.append("--" + key)
        else:
            argv += ["--" + key] + shlex.split(value)
    return argv


def parse_config(argv) -> RunConfig:
    """Parse `run` flags (optionally via ``--config FILE``) into a validated RunConfig."""
    argv = list(argv)
    parser = _build_parser()
    first = parser.parse_args(argv)
    if first.config:
        file_args = read_config_file(first.config)
        if "--config" in file_args:
            raise ConfigError("config files cannot include other config files")
        ns = parser.parse_args(file_args + argv)
    else:
        ns = first
    values = {k: v for k, v in vars(ns).items() if v is not None and k != "config"}
    for key in ("synthetic", "curvature"):
        if key in values:
            values[key] = tuple(values[key])
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig, N=None):
    if cfg.b < 1:
        raise ConfigError("--b must be >= 1")
    if cfg.M < 0:
        raise ConfigError("--M must be >= 0")
    if not cfg.beta > 0:
        raise ConfigError("--beta must be positive")
    if cfg.sigma < 0:
        raise ConfigError("--sigma must be >= 0")
    if cfg.optimizer == "sqn":
        if cfg.b_H < 1:
            raise ConfigError("--bH must be >= 1 for sqn")
        if cfg.L < 1:
            raise ConfigError("--L must be >= 1 for sqn")
    if cfg.checkpoint_every < 1:
        raise ConfigError("--checkpoint-every must be >= 1")
    if cfg.epochs is not None and not cfg.epochs > 0:
        raise ConfigError("--epochs must be positive")
    if cfg.max_iters is not None and cfg.max_iters < 1:
        raise ConfigError("--max-iters must be >= 1")
    if cfg.split is not None and not 0 < cfg.split < 1:
        raise ConfigError("--split must lie in (0, 1)")
    if (cfg.libsvm is None) == (cfg.synthetic is None):
        raise ConfigError("give exactly one dataset: --libsvm PATH or --synthetic n N")
    if cfg.objective == "quadratic":
        if cfg.synthetic is None:
            raise ConfigError("the quadratic objective needs --synthetic n N")
        if cfg.split is not None:
            raise ConfigError("--split does not apply to the quadratic objective")
        if not 0 < cfg.curvature[0] <= cfg.curvature[1]:
            raise ConfigError("--curvature needs 0 < LO <= HI")
    if cfg.synthetic is not None:
        n, total = cfg.synthetic
        if n < 1 or total < 1:
            raise ConfigError("--synthetic sizes must be positive")
        if N is None:
            N = total if cfg.split is None else math.ceil(round(cfg.split * total, 9))
    if N is not None:
        if cfg.b > N:
            raise ConfigError(f"--b {cfg.b} exceeds the number of training examples ({N})")
        if cfg.optimizer == "sqn" and cfg.b_H > N:
            raise ConfigError(f"--bH {cfg.b_H} exceeds the number of training examples ({N})")
    return cfg


def load_problem(cfg: RunConfig):
    """Build the training oracle and, with ``--split``, the test oracle."""
    if cfg.objective == "quadratic":
        n, N = cfg.synthetic
        d = np.linspace(cfg.curvature[0], cfg.curvature[1], n)
        return NoisyQuadratic(d, cfg.noise_sigma, num_examples=N, seed=cfg.seed_data), None, None

    multiclass = cfg.objective == "multiclass"
    if cfg.synthetic is not None:
        n, N = cfg.synthetic
        if multiclass:
            data, _ = generate_synthetic_multiclass(n, cfg.classes, N, seed=cfg.seed_data)
        else:
            data, _ = generate_synthetic_binary(n, N, seed=cfg.seed_data)
    else:
        try:
            data = load_libsvm(cfg.libsvm)
        except OSError as exc:
            raise ConfigError(f"cannot read {cfg.libsvm}: {exc.strerror}") from exc
    if not multiclass and not data.is_binary:
        raise ConfigError("labels are not binary; use --objective multiclass")

    train, test = data, None
    if cfg.split is not None:
        train, test = train_test_split(data, cfg.split, seed=cfg.seed_data)
    make = MulticlassLogistic if multiclass else BinaryLogistic

    def oracle(d):
        obj = make(d)
        return ridge_wrap(obj, cfg.sigma) if cfg.sigma > 0 else obj

    return oracle(train), (oracle(test) if test is not None else None), train


def execute(cfg: RunConfig) -> RunLog:
    oracle, test_oracle, train = load_problem(cfg)
    validate(cfg, N=oracle.num_examples)
    if cfg.dump_data is not None and train is not None:
        save_libsvm(train, cfg.dump_data)
    max_epochs = cfg.epochs
    if cfg.epochs is None and cfg.max_iters is None:
        max_epochs = 1.0
    if cfg.w0 is not None:
        w0 = np.full(oracle.dim, cfg.w0)
    else:
        w0 = np.full(oracle.dim, 1.0 if cfg.objective == "quadratic" else 0.0)
    return run(cfg.optimizer_config(), oracle, max_epochs=max_epochs, max_iters=cfg.max_iters,
               checkpoint_every=cfg.checkpoint_every, w0=w0, test_oracle=test_oracle,
               monitor_errors=cfg.monitor_errors)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(records, path=None, work_scale=None):
    """Write records as CSV to `path` (or stdout when None or ``"-"``).

    With `work_scale` the work column is divided by it.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to write")

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            work = r.work / work_scale if work_scale else r.work
            w.writerow([_cell(r.k), _cell(r.adp), _cell(work), _cell(r.train_fx), _cell(r.test_fx),
                        _cell(r.test_accuracy), _cell(r.grad_error), _cell(r.hv_error),
                        _cell(r.grad_norm)])

    if path is None or str(path) == "-":
        write(sys.stdout)
    else:
        with open(path, "w", newline="") as fh:
            write(fh)


def read_csv(path):
    """Parse a CSV written by :func:`emit_csv` back into RunRecords."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header")
        for row in reader:
            opt = [float(v) if v else None for v in row[4:]]
            out.append(RunRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]), *opt))
    return out


def run_and_emit(cfg: RunConfig, output=None) -> RunLog:
    log = execute(cfg)
    scale = log.state.w.size if cfg.scale_work else None
    emit_csv(log.records, output if output is not None else cfg.output, work_scale=scale)
    return log


def _as_config(c):
    return c if isinstance(c, RunConfig) else parse_config(["--config", str(c)])


def compare(config_a, config_b, out_dir="."):
    """Run two configurations on the same data and print a one-line summary of each.

    Arguments are RunConfig objects or config-file paths. CSVs go to each
    config's ``output`` or to ``<out_dir>/<name>.csv``. Returns a list of
    ``(name, RunLog, csv_path)``.
    """
    named = []
    for i, c in enumerate((config_a, config_b)):
        name = Path(c).stem if not isinstance(c, RunConfig) else "ab"[i]
        named.append((name, _as_config(c)))
    (na, a), (nb, b) = named
    if a.seed_data != b.seed_data:
        raise ConfigError(f"data seeds differ ({a.seed_data} vs {b.seed_data}); runs would see different data")
    if a.dataset_key != b.dataset_key:
        raise ConfigError("the two configurations describe different datasets")
    paths = [Path(c.output) if c.output else Path(out_dir) / f"{n}.csv" for n, c in named]
    if paths[0] == paths[1]:
        paths = [p.with_name(f"{p.stem}-{i + 1}{p.suffix}") for i, p in enumerate(paths)]
    results = []
    for (name, cfg), path in zip(named, paths):
        log = run_and_emit(cfg, output=path)
        results.append((name, log, path))
    for name, log, path in results:
        f = log.final
        print(f"{name}: optimizer={log.config.method} k={f.k} adp={f.adp} "
              f"train_fx={f.train_fx:.17g} csv={path}")
    return results


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    usage = "usage: sqnopt {run,compare} ...  (sqnopt run --help for flags)"
    if not argv or argv[0] in ("-h", "--help"):
        print(usage)
        return 0 if argv else 2
    cmd, rest = argv[0], argv[1:]
    try:
        if cmd == "run":
            if "-h" in rest or "--help" in rest:
                _build_parser().print_help()
                return 0
            run_and_emit(parse_config(rest))
        elif cmd == "compare":
            cp = _Parser(prog="sqnopt compare", allow_abbrev=False)
            cp.add_argument("config_a")
            cp.add_argument("config_b")
            cp.add_argument("--out-dir", default=".")
            ns = cp.parse_args(rest)
            compare(ns.config_a, ns.config_b, ns.out_dir)
        else:
            raise ConfigError(f"unknown command {cmd!r}; {usage}")
    except ConfigError as exc:
        print(f"sqnopt: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"sqnopt: error: {exc}", file=sys.stderr)
        return 1
    return 0

