"""Command-line surface: generate, run, evaluate, bench."""

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import kernels
from .data import (
    Dataset,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    read_assignments,
    write_assignments,
    write_csv,
    write_metrics,
    write_trace,
)
from .engine import ChainConfig, run_chain
from .evaluation import accuracy, convergence_summary, nmi

logger = logging.getLogger("minsm")


def _setup_logging():
    level = os.environ.get("MINSM_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minsm",
        description="Split-merge MCMC for Gaussian mixtures with hash-driven proposals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a synthetic labeled dataset as CSV")
    gen.add_argument("--k", type=int, default=10)
    gen.add_argument("--n", type=int, default=100)
    gen.add_argument("--d", type=int, default=25)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--mean-spread", type=float, default=10.0)
    gen.add_argument("--var-low", type=float, default=0.5)
    gen.add_argument("--var-high", type=float, default=1.5)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run one chain over a CSV dataset")
    run.add_argument("--data", required=True)
    run.add_argument("--algo", choices=("random", "lshsm", "minsm"), required=True)
    run.add_argument("--iters", type=int, required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--k", type=int, default=None, help="hashes per table")
    run.add_argument("--l", type=int, default=None, help="number of tables")
    run.add_argument("--labels", action="store_true", help="final CSV column is a label")
    run.add_argument("--init", choices=("singletons", "single", "kmeans"), default="singletons")
    run.add_argument("--init-k", type=int, default=10)
    run.add_argument("--move-mix", type=float, default=0.5)
    run.add_argument("--prior", choices=("uniform", "crp"), default="uniform")
    run.add_argument("--crp-alpha", type=float, default=1.0)
    run.add_argument("--trace-stride", type=int, default=1)
    run.add_argument("--trace", default=None, help="write the trace CSV here")
    run.add_argument("--assign", default=None, help="write final assignments here")
    run.add_argument("--metrics", default=None, help="write summary metrics here")
    run.add_argument(
        "--virtual-clock",
        action="store_true",
        help="report iteration counts instead of wall time, for byte-stable traces",
    )

    ev = sub.add_parser("evaluate", help="score an assignment dump against ground truth")
    ev.add_argument("--pred", required=True, help="assignment file from run --assign")
    ev.add_argument("--data", required=True, help="dataset CSV carrying the labels")
    ev.add_argument("--out", default=None, help="write metrics here as key=value lines")

    bench = sub.add_parser(
        "bench", help="time the transition-probability kernels across cluster sizes"
    )
    bench.add_argument("--sizes", default="1000,10000", help="comma-separated cluster sizes")
    bench.add_argument("--d", type=int, default=25)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--reps", type=int, default=5)
    bench.add_argument(
        "--backends", action="store_true", help="also compare numba and numpy backends"
    )
    return parser


def _cmd_generate(args) -> int:
    spec = SyntheticSpec(
        k=args.k,
        n=args.n,
        dim=args.d,
        seed=args.seed,
        mean_spread=args.mean_spread,
        var_range=(args.var_low, args.var_high),
    )
    write_csv(generate_synthetic(spec), args.out)
    print(f"wrote {args.n} points ({args.k} clusters, {args.d} dims) to {args.out}")
    return 0


def _cmd_run(args) -> int:
    dataset = load_csv(args.data, labels=args.labels)
    config = ChainConfig(
        algorithm=args.algo,
        iterations=args.iters,
        seed=args.seed,
        k_hashes=args.k,
        n_tables=args.l,
        move_mix=args.move_mix,
        trace_stride=args.trace_stride,
        partition_prior=args.prior,
        crp_alpha=args.crp_alpha,
        init=args.init,
        init_k=args.init_k,
        virtual_clock=args.virtual_clock,
    )
    state, trace = run_chain(dataset, config)
    if args.trace:
        write_trace(trace, args.trace)
    if args.assign:
        write_assignments(state.labels(), args.assign)
    summary = convergence_summary(trace)
    metrics = {
        "algorithm": args.algo,
        "iterations": args.iters,
        "n_clusters": state.n_clusters,
        "log_likelihood": trace[-1].log_likelihood,
        "plateau_log_likelihood": summary.plateau_log_likelihood,
        "time_to_plateau_ms": summary.time_to_plateau_ms,
        "acceptance_rate": summary.acceptance_rate,
    }
    if dataset.labels is not None:
        metrics["nmi"] = nmi(state.labels(), dataset.labels)
        metrics["accuracy"] = accuracy(state.labels(), dataset.labels)
    if args.metrics:
        write_metrics(metrics, args.metrics)
    for key, value in metrics.items():
        print(f"{key}={value}")
    return 0


def _cmd_evaluate(args) -> int:
    predicted = read_assignments(args.pred)
    dataset = load_csv(args.data, labels=True)
    metrics = {
        "nmi": nmi(predicted, dataset.labels),
        "accuracy": accuracy(predicted, dataset.labels),
    }
    if args.out:
        write_metrics(metrics, args.out)
    for key, value in metrics.items():
        print(f"{key}={value}")
    return 0


def _time_call(fn, args, reps: int) -> float:
    fn(*args)  # warm any jit compilation
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    rng = np.random.default_rng(args.seed)
    backends = kernels.available_backends()
    chosen = backends if args.backends else {kernels.BACKEND_NAME: None}

    print(f"active backend: {kernels.BACKEND_NAME}")
    header = f"{'size':>8} {'backend':>8} {'bucket-split q (s)':>20} {'anchor-pair q (s)':>20}"
    print(header)
    for size in sizes:
        coll = np.abs(rng.standard_normal((max(size // 2, 1), 2 * args.d))) + 0.01
        avoid = np.abs(rng.standard_normal((size - coll.shape[0], 2 * args.d))) + 0.01
        pts = rng.standard_normal((size, args.d))
        frac = rng.uniform(0.1, 1.0, size)
        for name in chosen:
            funcs = backends[name]
            linear = _time_call(funcs["collide_avoid_ratio"], (coll, avoid), args.reps)
            quad = _time_call(
                funcs["anchored_pair_total"],
                (pts, pts, frac, 10, 10),
                max(2, args.reps // 2),
            )
            print(f"{size:>8} {name:>8} {linear:>20.6f} {quad:>20.6f}")
    print(
        "bucket-split transition cost is linear in the cluster size; "
        "anchor-pair cost is quadratic"
    )
    return 0


def cli_main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "bench":
            return _cmd_bench(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
