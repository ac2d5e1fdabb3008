"""Command line: ``lazysparse {train,predict,verify,bench}``.

Exit codes: 0 success, 1 verification failure, 2 flag/config error,
3 I/O or parse error. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .bench import run_bench
from .data import generate_synthetic, read_libsvm, read_model, write_model
from .errors import ContractViolation, DimensionMismatch, InvalidRate, ParseError
from .kernels import RegConfig, validate_config
from .schedule import Schedule, ScheduleKind
from .trainer import predict_proba, train, train_dense

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("lazysparse")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not 0 < value < float("inf"):
        raise argparse.ArgumentTypeError(f"must be finite and > 0, got {text}")
    return value


def _add_config_flags(p):
    p.add_argument("--algo", choices=["sgd", "fobos"], default="sgd")
    p.add_argument("--l1", type=_nonneg_float, default=0.0, help="L1 strength lambda1")
    p.add_argument("--l2", type=_nonneg_float, default=0.0, help="squared-L2 strength lambda2")
    p.add_argument("--eta0", type=_positive_float, default=0.1, help="base learning rate")
    p.add_argument(
        "--schedule", choices=[k.value for k in ScheduleKind], default="inv",
        help="constant: eta0; inv: eta0/(1+t); invsqrt: eta0/sqrt(1+t)",
    )
    p.add_argument("--epochs", type=_nonneg_int, default=1)
    p.add_argument("--seed", type=int, default=0, help="seed for the example order")


def _add_data_flags(p, required):
    p.add_argument("--data", required=required, help="libsvm/svmlight file")
    p.add_argument("--dims", type=_positive_int, default=None, help="override feature dimension")
    p.add_argument("--index-base", type=int, choices=[0, 1], default=1)


def _add_synthetic_flags(p, n, d, dim_p):
    g = p.add_argument_group("synthetic data (used when --data is absent)")
    g.add_argument("--n", type=_positive_int, default=n)
    g.add_argument("--d", type=_positive_int, default=d)
    g.add_argument("--p", type=_positive_int, default=dim_p)
    g.add_argument("--weight-sparsity", type=float, default=0.1)
    g.add_argument("--data-seed", type=int, default=0, help="seed for the synthetic data")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lazysparse",
        description="Sparse logistic regression with constant-time lazy regularization.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write it to --out")
    _add_data_flags(p, required=True)
    _add_config_flags(p)
    p.add_argument("--flush-budget", type=_positive_int, default=None,
                   help="max steps between flushes (default: one epoch)")
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("predict", help="print P(y=+1) per example")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--index-base", type=int, choices=[0, 1], default=1)

    p = sub.add_parser("verify", help="compare lazy and dense trainers' weights")
    _add_data_flags(p, required=False)
    _add_synthetic_flags(p, n=2000, d=10000, dim_p=20)
    _add_config_flags(p)
    p.add_argument("--flush-budget", type=_positive_int, default=None)
    p.add_argument("--tolerance", type=_nonneg_float, default=1e-8)

    p = sub.add_parser("bench", help="per-example timing: lazy vs dense vs dense+sparse predictions")
    _add_synthetic_flags(p, n=500, d=100_000, dim_p=30)
    p.add_argument("--l1", type=_nonneg_float, default=1e-4)
    p.add_argument("--l2", type=_nonneg_float, default=1e-3)
    p.add_argument("--eta0", type=_positive_float, default=0.1)
    p.add_argument("--schedule", choices=[k.value for k in ScheduleKind], default="inv")
    p.add_argument("--epochs", type=_positive_int, default=1, help="timed epochs after warmup")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kv", action="store_true", help="also print key=value lines")
    return parser


def _config(args, parser):
    try:
        cfg = RegConfig(args.algo, args.l1, args.l2)
        sched = Schedule(ScheduleKind(args.schedule), args.eta0)
        validate_config(cfg, sched)
    except (InvalidRate, ContractViolation) as exc:
        parser.error(str(exc))
    return cfg, sched


def _load_dataset(args):
    if args.data is not None:
        return read_libsvm(args.data, index_base=args.index_base, dims=args.dims)
    if args.p > args.d:
        raise ContractViolation(f"--p {args.p} exceeds --d {args.d}")
    dataset, _ = generate_synthetic(args.n, args.d, args.p, args.weight_sparsity, args.data_seed)
    return dataset


def cmd_train(args, parser):
    cfg, sched = _config(args, parser)
    dataset = _load_dataset(args)
    weights, report = train(dataset, cfg, sched, args.epochs, args.flush_budget, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_model(weights, fh)
    print(report.summary())
    return EXIT_OK


def cmd_predict(args, parser):
    with open(args.model, encoding="utf-8") as fh:
        weights = read_model(fh)
    dataset = read_libsvm(args.data, index_base=args.index_base, dims=len(weights))
    out = sys.stdout
    for ex in dataset:
        out.write(f"{predict_proba(weights, ex):.9g}\n")
    return EXIT_OK


def cmd_verify(args, parser):
    cfg, sched = _config(args, parser)
    dataset = _load_dataset(args)
    lazy_w, _ = train(dataset, cfg, sched, args.epochs, args.flush_budget, args.seed)
    dense_w, _ = train_dense(dataset, cfg, sched, args.epochs, args.seed, vectorized=True)
    diff = np.abs(lazy_w - dense_w)
    linf = float(diff.max()) if diff.size else 0.0
    ok = linf <= args.tolerance
    print(
        f"linf={linf:.6g} l1={float(diff.sum()):.6g} tolerance={args.tolerance:g} "
        f"n={dataset.n} d={dataset.d} status={'ok' if ok else 'FAIL'}"
    )
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_bench(args, parser):
    if args.p > args.d:
        parser.error(f"--p {args.p} exceeds --d {args.d}")
    cfg = RegConfig("sgd", args.l1, args.l2)
    try:
        validate_config(cfg, Schedule(ScheduleKind(args.schedule), args.eta0))
    except InvalidRate as exc:
        parser.error(str(exc))
    report = run_bench(
        n=args.n, d=args.d, p=args.p, epochs=args.epochs, seed=args.seed,
        lambda1=args.l1, lambda2=args.l2, eta0=args.eta0, schedule=args.schedule,
        weight_sparsity=args.weight_sparsity, data_seed=args.data_seed,
    )
    print(report.format_table())
    if args.kv:
        print("\n".join(report.kv_lines()))
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args, parser)
    except (ParseError, DimensionMismatch, OSError) as exc:
        print(f"lazysparse: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidRate, ContractViolation) as exc:
        print(f"lazysparse: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
