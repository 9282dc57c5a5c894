"""Throughput benchmark: lock-free graph against coarse-locked and sequential baselines."""

from __future__ import annotations

import csv
import math
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .outcomes import INCONCLUSIVE

OP_NAMES = (
    "add_vertex",
    "remove_vertex",
    "contains_vertex",
    "add_edge",
    "remove_edge",
    "contains_edge",
    "get_path",
)
PATH = 6
ENGINES = ("lockfree", "coarse", "seq")

# basis points per op, in OP_NAMES order; lookups split between the two
# contains ops, updates split evenly over the four modifiers
PRESETS = {
    "lookup": (250, 250, 4500, 250, 250, 4500, 0),
    "balanced": (1250, 1250, 2500, 1250, 1250, 2500, 0),
    "update": (2250, 2250, 500, 2250, 2250, 500, 0),
}

CSV_HEADER = (
    "engine",
    "threads",
    "mix",
    "duration_s",
    "total_ops",
    "ops_per_sec",
    "getpath_inconclusive",
    "p50_us",
    "p99_us",
)

HIST_BUCKETS = 256 + 40 * 64
_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM = 0xD1B54A32D192ED03


class UsageError(ValueError):
    """Invalid benchmark configuration."""


def mix_for(name: str, with_getpath: bool = False) -> tuple[int, ...]:
    """Basis-point mix for a preset; ``with_getpath`` gives get_path 10% and scales the rest."""
    try:
        base = PRESETS[name]
    except KeyError:
        raise UsageError(f"unknown mix {name!r}; choose from {', '.join(PRESETS)}") from None
    if not with_getpath:
        return base
    return tuple(b * 9 // 10 for b in base[:PATH]) + (1000,)


def default_max_threads() -> int:
    raw = os.environ.get("GRAPH_MAX_THREADS")
    if raw is None:
        return 64
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"GRAPH_MAX_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("GRAPH_MAX_THREADS must be at least 1")
    return n


@dataclass
class WorkloadConfig:
    engine: str = "lockfree"
    threads: int = 1
    mix: str = "balanced"
    with_getpath: bool = False
    duration: float = 5.0
    key_lo: int = 1
    key_hi: int = 100_000
    prefill_v: int = 1000
    prefill_deg: int = 8
    seed: int = 1
    scan_cap: int = 4
    backend: Optional[str] = None
    max_threads: Optional[int] = None

    @property
    def weights(self) -> tuple[int, ...]:
        return mix_for(self.mix, self.with_getpath)

    @property
    def label(self) -> str:
        return f"{self.mix}+getpath" if self.with_getpath else self.mix

    def percentages(self) -> dict[str, float]:
        return {name: w / 100 for name, w in zip(OP_NAMES, self.weights)}

    def validate(self) -> None:
        if self.engine not in ENGINES:
            raise UsageError(f"unknown engine {self.engine!r}; choose from {', '.join(ENGINES)}")
        self.weights
        if self.threads < 1:
            raise UsageError("threads must be at least 1")
        if self.engine == "seq" and self.threads != 1:
            raise UsageError("the sequential baseline runs with exactly one thread")
        cap = self.max_threads if self.max_threads is not None else default_max_threads()
        if self.engine == "lockfree" and self.threads > cap:
            raise UsageError(f"{self.threads} threads exceed the registry capacity of {cap}")
        if self.duration <= 0:
            raise UsageError("duration must be positive")
        if not 0 < self.key_lo < self.key_hi:
            raise UsageError("key range must satisfy 0 < lo < hi")
        if self.prefill_v < 0 or self.prefill_deg < 0:
            raise UsageError("prefill counts must be non-negative")
        if self.prefill_v > self.key_hi - self.key_lo + 1:
            raise UsageError(f"{self.prefill_v} prefill vertices do not fit keys [{self.key_lo}, {self.key_hi}]")
        if self.prefill_v and self.prefill_deg >= self.prefill_v:
            raise UsageError("prefill degree must be below the prefill vertex count")
        if self.scan_cap < 1:
            raise UsageError("scan cap must be at least 1")
        if not 0 <= self.seed <= _MASK:
            raise UsageError("seed must fit in 64 bits")


@dataclass
class BenchResult:
    engine: str
    threads: int
    mix: str
    duration_s: float
    total_ops: int
    per_op: dict[str, int]
    getpath_inconclusive: int
    p50_us: float
    p99_us: float
    backend: str
    config: WorkloadConfig = field(repr=False)

    @property
    def ops_per_sec(self) -> float:
        return self.total_ops / self.duration_s if self.duration_s > 0 else 0.0

    def row(self) -> list[str]:
        return [
            self.engine,
            str(self.threads),
            self.mix,
            f"{self.duration_s:.2f}",
            str(self.total_ops),
            f"{self.ops_per_sec:.2f}",
            str(self.getpath_inconclusive),
            f"{self.p50_us:.2f}",
            f"{self.p99_us:.2f}",
        ]


# -- deterministic streams (bit-compatible with the compiled driver)


def splitmix64(state: int) -> tuple[int, int]:
    """One step: (new state, output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def stream_seed(seed: int, tid: int) -> int:
    return (seed + _STREAM * (tid + 1)) & _MASK


def draw_op(state: int, weights, lo: int, hi: int) -> tuple[int, int, int, int]:
    """(new state, op index, k, l); l equals k for vertex ops."""
    state, r = splitmix64(state)
    r %= 10000
    op = 0
    acc = weights[0]
    while r >= acc and op < PATH:
        op += 1
        acc += weights[op]
    span = hi - lo + 1
    state, x = splitmix64(state)
    k = lo + x % span
    l = k
    if op >= 3:
        while l == k:
            state, x = splitmix64(state)
            l = lo + x % span
    return state, op, k, l


def op_trace(cfg: WorkloadConfig, n: int, tid: int = 0) -> list[tuple[str, int, int]]:
    """First ``n`` draws of worker ``tid``."""
    st = stream_seed(cfg.seed, tid)
    out = []
    w = cfg.weights
    for _ in range(n):
        st, op, k, l = draw_op(st, w, cfg.key_lo, cfg.key_hi)
        out.append((OP_NAMES[op], k, l))
    return out


def apply_op(graph, op: str, k: int, l: int, scan_cap: int):
    if op == "get_path":
        return graph.get_path_bounded(k, l, scan_cap)
    if op.endswith("_vertex"):
        return getattr(graph, op)(k)
    return getattr(graph, op)(k, l)


def replay(graph, cfg: WorkloadConfig, n: int) -> list:
    """Apply the first ``n`` draws of worker 0 on one thread; returns every result."""
    return [apply_op(graph, op, k, l, cfg.scan_cap) for op, k, l in op_trace(cfg, n)]


# -- latency histogram


def hist_bucket(ns: int) -> int:
    if ns < 1024:
        return ns >> 2
    e = min(ns.bit_length() - 1, 49)
    return 256 + (e - 10) * 64 + ((ns >> (e - 6)) & 63)


def bucket_bounds(b: int) -> tuple[int, int]:
    """[lo, hi) in nanoseconds covered by bucket ``b``."""
    if b < 256:
        return 4 * b, 4 * b + 4
    e = 10 + (b - 256) // 64
    m = (b - 256) % 64
    width = 1 << (e - 6)
    lo = (64 + m) * width
    return lo, lo + width


def percentile_us(hist, q: float) -> float:
    """Bucket-midpoint estimate of the ``q`` quantile, in microseconds."""
    total = sum(hist)
    if total == 0:
        return 0.0
    target = max(1, math.ceil(q * total))
    seen = 0
    for b, c in enumerate(hist):
        seen += c
        if seen >= target:
            lo, hi = bucket_bounds(b)
            return (lo + hi) / 2 / 1000
    lo, hi = bucket_bounds(len(hist) - 1)
    return (lo + hi) / 2 / 1000


# -- running


def make_graph(cfg: WorkloadConfig):
    from . import engines

    cls = engines(cfg.backend)[cfg.engine]
    if cfg.engine == "lockfree":
        cap = cfg.max_threads if cfg.max_threads is not None else default_max_threads()
        return cls(max(cap, cfg.threads + 1))
    return cls()


def prefill(graph, cfg: WorkloadConfig) -> None:
    """Insert ``prefill_v`` distinct vertices, each with ``prefill_deg`` out-edges to other prefilled vertices."""
    st = cfg.seed & _MASK
    span = cfg.key_hi - cfg.key_lo + 1
    keys: list[int] = []
    seen = set()
    while len(keys) < cfg.prefill_v:
        st, x = splitmix64(st)
        k = cfg.key_lo + x % span
        if k not in seen:
            seen.add(k)
            keys.append(k)
            graph.add_vertex(k)
    n = len(keys)
    for i, k in enumerate(keys):
        targets = set()
        while len(targets) < cfg.prefill_deg:
            st, x = splitmix64(st)
            j = x % n
            if j != i:
                targets.add(j)
        for j in sorted(targets):
            graph.add_edge(k, keys[j])
    unregister = getattr(graph, "unregister", None)
    if unregister is not None:
        unregister()


def _run_python(graph, cfg: WorkloadConfig):
    weights = cfg.weights
    n = cfg.threads
    counts = [[0] * 7 for _ in range(n)]
    hists = [[0] * HIST_BUCKETS for _ in range(n)]
    inconclusive = [0] * n
    ends = [0] * n
    barrier = threading.Barrier(n + 1)
    start = [0]
    errors: list[BaseException] = []
    clock = time.perf_counter_ns

    def worker(tid: int) -> None:
        try:
            st = stream_seed(cfg.seed, tid)
            cnt, hist = counts[tid], hists[tid]
            barrier.wait()
            barrier.wait()
            deadline = start[0] + int(cfg.duration * 1e9)
            t1 = start[0]
            while t1 < deadline:
                st, op, k, l = draw_op(st, weights, cfg.key_lo, cfg.key_hi)
                t0 = clock()
                r = apply_op(graph, OP_NAMES[op], k, l, cfg.scan_cap)
                t1 = clock()
                hist[hist_bucket(t1 - t0)] += 1
                cnt[op] += 1
                if op == PATH and r is INCONCLUSIVE:
                    inconclusive[tid] += 1
            ends[tid] = t1
        except BaseException as exc:
            errors.append(exc)
            raise
        finally:
            unregister = getattr(graph, "unregister", None)
            if unregister is not None:
                unregister()

    workers = [threading.Thread(target=worker, args=(t,), daemon=True) for t in range(n)]
    for w in workers:
        w.start()
    barrier.wait()
    start[0] = clock()
    barrier.wait()
    for w in workers:
        w.join()
    if errors:
        raise errors[0]
    ops = [sum(c[i] for c in counts) for i in range(7)]
    hist = [sum(h[b] for h in hists) for b in range(HIST_BUCKETS)]
    elapsed = (max(ends) - start[0]) / 1e9
    return ops, sum(inconclusive), elapsed, hist


def _run_native(graph, cfg: WorkloadConfig):
    from . import _native

    out = _native.bench_run(
        cfg.engine, graph, cfg.threads, cfg.duration, list(cfg.weights), cfg.key_lo, cfg.key_hi, cfg.seed, cfg.scan_cap
    )
    return out["ops"], out["inconclusive"], out["elapsed_s"], out["hist"]


def run_bench(cfg: WorkloadConfig, graph=None) -> BenchResult:
    """Prefill, run ``cfg.threads`` workers for ``cfg.duration`` seconds, aggregate."""
    cfg.validate()
    if graph is None:
        graph = make_graph(cfg)
        prefill(graph, cfg)
    backend = getattr(graph, "backend", "python")
    run = _run_native if backend == "native" else _run_python
    ops, inconclusive, elapsed, hist = run(graph, cfg)
    return BenchResult(
        engine=cfg.engine,
        threads=cfg.threads,
        mix=cfg.label,
        duration_s=elapsed,
        total_ops=sum(ops),
        per_op=dict(zip(OP_NAMES, ops)),
        getpath_inconclusive=inconclusive,
        p50_us=percentile_us(hist, 0.50),
        p99_us=percentile_us(hist, 0.99),
        backend=backend,
        config=cfg,
    )


def emit_csv(results: Iterable[BenchResult], path, append: bool = False) -> None:
    """Write one row per result; the header goes out unless appending to a non-empty file."""
    results = list(results)
    if not results:
        raise ValueError("emit_csv needs at least one result")
    header = not (append and os.path.exists(path) and os.path.getsize(path) > 0)
    with open(path, "a" if append else "w", newline="") as fp:
        w = csv.writer(fp)
        if header:
            w.writerow(CSV_HEADER)
        for r in results:
            w.writerow(r.row())
