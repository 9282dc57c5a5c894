"""Command line: ``nbgraph bench``, ``nbgraph record`` and ``nbgraph check``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .bench import ENGINES, PRESETS, UsageError, WorkloadConfig, emit_csv, run_bench


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def _seed(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbgraph", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="measure throughput of one engine on one workload mix")
    b.add_argument("--engine", choices=ENGINES, default="lockfree")
    b.add_argument("--threads", type=_positive_int, default=1)
    b.add_argument("--mix", choices=sorted(PRESETS), default="balanced")
    b.add_argument("--with-getpath", action="store_true", help="give get_path 10%% of the operations")
    b.add_argument("--duration", type=float, default=5.0, help="seconds (default 5)")
    b.add_argument("--seed", type=_seed, default=1)
    b.add_argument("--prefill-v", type=int, default=1000)
    b.add_argument("--prefill-deg", type=int, default=8)
    b.add_argument("--key-range", type=int, nargs=2, metavar=("LO", "HI"), default=(1, 100_000))
    b.add_argument("--scan-cap", type=_positive_int, default=4, help="collections per bounded get_path")
    b.add_argument("--csv", metavar="PATH")
    b.add_argument("--append", action="store_true", help="append to --csv instead of overwriting")
    b.add_argument("--backend", choices=("native", "python"), default=None)
    b.set_defaults(subparser=b)

    r = sub.add_parser("record", help="record a random concurrent history on the lock-free graph")
    r.add_argument("--threads", type=_positive_int, default=3)
    r.add_argument("--ops", type=_positive_int, default=15, help="operations per thread")
    r.add_argument("--keys", type=_positive_int, default=6, help="keys are 1..KEYS")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-scans", type=_positive_int, default=4)
    r.add_argument("--stall", type=float, default=0.0, help="probability of a short stall before each step")
    r.add_argument("--out", metavar="PATH", help="history file (default stdout)")
    r.add_argument("--backend", choices=("native", "python"), default=None)

    c = sub.add_parser("check", help="decide whether a recorded history is linearizable")
    c.add_argument("history", help="history file, or - for stdin")
    c.add_argument("--budget", type=_positive_int, default=2_000_000)
    c.add_argument("-v", "--verbose", action="store_true", help="print the witness order")
    return p


def _bench(args, parser) -> int:
    cfg = WorkloadConfig(
        engine=args.engine,
        threads=args.threads,
        mix=args.mix,
        with_getpath=args.with_getpath,
        duration=args.duration,
        key_lo=args.key_range[0],
        key_hi=args.key_range[1],
        prefill_v=args.prefill_v,
        prefill_deg=args.prefill_deg,
        seed=args.seed,
        scan_cap=args.scan_cap,
        backend=args.backend,
    )
    try:
        res = run_bench(cfg)
    except UsageError as exc:
        parser.error(str(exc))
    print(
        f"{res.engine} [{res.backend}] threads={res.threads} mix={res.mix}: "
        f"{res.total_ops} ops in {res.duration_s:.2f}s = {res.ops_per_sec:.2f} ops/s, "
        f"p50 {res.p50_us:.2f}us p99 {res.p99_us:.2f}us, inconclusive get_path {res.getpath_inconclusive}"
    )
    if args.csv:
        try:
            emit_csv([res], args.csv, append=args.append)
        except OSError as exc:
            print(f"nbgraph: cannot write {args.csv}: {exc}", file=sys.stderr)
            return 1
    return 0


def _record(args) -> int:
    from . import engines
    from .history import dump_history, record

    graph = engines(args.backend)["lockfree"](args.threads + 1)
    events = record(
        graph,
        threads=args.threads,
        ops_per_thread=args.ops,
        keys=range(1, args.keys + 1),
        seed=args.seed,
        max_scans=args.max_scans,
        stall=args.stall,
    )
    if args.out:
        with open(args.out, "w") as fp:
            dump_history(events, fp)
    else:
        dump_history(events, sys.stdout)
    return 0


def _check(args) -> int:
    from .checker import Status, check_linearizable
    from .history import load_history

    if args.history == "-":
        events = load_history(sys.stdin)
    else:
        with open(args.history) as fp:
            events = load_history(fp)
    verdict = check_linearizable(events, budget=args.budget)
    print(f"{verdict.status.value} ({len(events)} events, {verdict.states_explored} states)")
    if verdict.status is Status.LINEARIZABLE and args.verbose:
        for ev in verdict.witness:
            print(f"  {ev}")
    if verdict.status is Status.NOT_LINEARIZABLE:
        if verdict.failing_prefix:
            print("shortest failing prefix:")
            for ev in verdict.failing_prefix:
                print(f"  {ev}")
        return 1
    return 0 if verdict.status is Status.LINEARIZABLE else 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bench":
        return _bench(args, args.subparser)
    if args.command == "record":
        return _record(args)
    return _check(args)


if __name__ == "__main__":
    sys.exit(main())
