"""Throughput of the compiled core against the pure-Python engines.

    python3 benchmarks/compare_backends.py [--duration 2] [--threads 1 2] [--csv out.csv]

Every (engine, mix, threads) cell runs once per backend on the same seed and
prefill; the last column is the native/python speedup.
"""

import argparse
import sys

from nbgraph import NATIVE_ERROR, engines
from nbgraph.bench import PRESETS, WorkloadConfig, emit_csv, run_bench


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--threads", type=int, nargs="+", default=[1, 2])
    p.add_argument("--mix", nargs="+", choices=sorted(PRESETS), default=["lookup", "balanced", "update"])
    p.add_argument("--engines", nargs="+", default=["lockfree", "coarse"])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--csv")
    args = p.parse_args(argv)
    try:
        engines("native")
    except ImportError:
        print(f"compiled core unavailable ({NATIVE_ERROR}); nothing to compare", file=sys.stderr)
        return 1

    results = []
    print(f"{'engine':9} {'mix':9} {'thr':>3} {'native ops/s':>14} {'python ops/s':>14} {'speedup':>8}")
    for engine in args.engines:
        for mix in args.mix:
            for t in args.threads:
                if engine == "seq" and t > 1:
                    continue
                tput = {}
                for backend in ("native", "python"):
                    cfg = WorkloadConfig(engine=engine, threads=t, mix=mix, duration=args.duration,
                                         seed=args.seed, backend=backend)
                    res = run_bench(cfg)
                    results.append(res)
                    tput[backend] = res.ops_per_sec
                ratio = tput["native"] / tput["python"] if tput["python"] else float("inf")
                print(f"{engine:9} {mix:9} {t:>3} {tput['native']:>14,.0f} {tput['python']:>14,.0f} {ratio:>7.1f}x")
    if args.csv:
        emit_csv(results, args.csv)
    return 0


if __name__ == "__main__":
    sys.exit(main())
