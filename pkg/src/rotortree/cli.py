"""Command-line entry point: ``rotortree <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .algorithms import ALGORITHMS
from .experiments import (
    WORKLOADS,
    BadConfig,
    ExperimentConfig,
    apply_overrides,
    parse_config_text,
    preset,
    rows_to_csv,
    run_experiment,
    run_histogram,
)
from .oracle import all_sequences, competitive_report, format_report, random_sequences
from .tree import build_tree
from .workloads import InputTooShort, empirical_entropy, ingest_file

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' file; command-line flags override it")
    p.add_argument("--depth", type=int, action="append", help="tree depth L (n = 2^(L+1)-1); repeatable")
    p.add_argument("--requests", "-m", type=int, help="requests per sequence")
    p.add_argument("--algo", action="append", choices=ALGORITHMS, help="algorithm; repeatable (default: all)")
    p.add_argument("--workload", action="append", choices=WORKLOADS, help="workload; repeatable")
    p.add_argument("--p", type=float, action="append", help="temporal repeat probability; repeatable")
    p.add_argument("--a", type=float, action="append", help="Zipf skew; repeatable")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--reps", type=int, help="repetitions per cell")
    p.add_argument("--corpus", action="append", help="corpus file for the corpus workload; repeatable")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--out", help="output CSV path (default: stdout)")


def _config(args, base: ExperimentConfig) -> ExperimentConfig:
    cfg = base
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise BadConfig("config", str(exc)) from exc
        cfg = parse_config_text(text, cfg)
    cfg = apply_overrides(
        cfg,
        {
            "depths": args.depth,
            "m": args.requests,
            "algorithms": args.algo,
            "workloads": args.workload,
            "p_values": args.p,
            "a_values": args.a,
            "seed": args.seed,
            "reps": args.reps,
            "corpus": args.corpus,
            "jobs": args.jobs,
            "out": args.out,
        },
    )
    return cfg.validate()


def cmd_simulate(args) -> int:
    cfg = _config(args, ExperimentConfig("custom"))
    _emit(rows_to_csv(run_experiment(cfg)), cfg.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args, preset(args.scenario, args.scale))
    _emit(rows_to_csv(run_experiment(cfg)), cfg.out)
    return EXIT_OK


def cmd_histogram(args) -> int:
    if args.reps < 1 or args.requests < 1 or args.depth < 0:
        raise BadConfig("histogram", "need depth >= 0, requests >= 1 and reps >= 1")
    hist = run_histogram(args.depth, args.requests, args.reps, args.seed, args.algo_a, args.algo_b)
    _emit(hist.to_csv(), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_verification_suite

    report = run_verification_suite(args.scale, progress=lambda line: print(line, flush=True))
    print(report.lines()[-1])
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    if args.depth not in (1, 2):
        raise BadConfig("depth", "the oracle handles depth 1 (3 nodes) or 2 (7 nodes)")
    tree = build_tree(args.depth)
    if args.all:
        seqs = all_sequences(tree.n, args.requests)
    else:
        seqs = random_sequences(tree.n, args.requests, args.count, args.seed)
    try:
        rows = []
        for name in args.algo or ["rotor-push", "random-push"]:
            rows += competitive_report(name, [(tree, s) for s in seqs], seeds=args.seeds, base_seed=args.seed)
    except ValueError as exc:
        raise BadConfig("oracle", str(exc)) from exc
    _emit(format_report(rows), args.out)
    return EXIT_OK


def cmd_ingest(args) -> int:
    try:
        corpus = ingest_file(args.file)
    except OSError as exc:
        raise BadConfig("file", str(exc)) from exc
    seq = corpus.sequence
    text = (
        f"requests={seq.m}\nunique={corpus.unique}\ndepth={corpus.depth}\n"
        f"nodes={seq.n}\nentropy={empirical_entropy(seq):.6f}\n"
    )
    if args.out:
        seq.save(args.out)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotortree",
        description="Self-adjusting complete binary tree networks: simulation, experiments and checks.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one custom cell and print CSV rows")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a preset question q1..q5")
    p.add_argument("scenario", choices=["q1", "q2", "q3", "q4", "q5"])
    p.add_argument("--scale", choices=["quick", "full"], default="full",
                   help="quick: depth 11 and m = 10^5")
    _common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("histogram", help="per-request cost difference of two algorithms on uniform data")
    p.add_argument("--depth", type=int, default=15)
    p.add_argument("--requests", "-m", type=int, default=10**6)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algo-a", choices=ALGORITHMS, default="rotor-push")
    p.add_argument("--algo-b", choices=ALGORITHMS, default="random-push")
    p.add_argument("--out")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("verify", help="run the invariant batteries")
    p.add_argument("scale", choices=["quick", "full"], nargs="?", default="quick")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="competitive ratios against the exact offline optimum")
    p.add_argument("--depth", type=int, default=1, help="1 (3 nodes) or 2 (7 nodes)")
    p.add_argument("--requests", "-m", type=int, default=4)
    p.add_argument("--all", action="store_true", help="every sequence instead of random ones")
    p.add_argument("--count", type=int, default=200, help="random sequences")
    p.add_argument("--seeds", type=int, default=1000, help="Random-Push runs per instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algo", action="append", choices=ALGORITHMS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("ingest", help="corpus statistics; --out saves the request sequence")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BadConfig, InputTooShort) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
