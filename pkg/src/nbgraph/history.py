"""Concurrent history recording and the line-oriented history format.

One event per line, space separated::

    tid op args result t_inv t_res

``args`` is one key or ``k,l``; ``result`` is ``true``/``false``, an outcome
name such as ``EDGE_ADDED``, a comma-joined key path, or ``nil``.
Timestamps are integer nanoseconds from a monotonic clock.
"""

from __future__ import annotations

import random
import sys
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, TextIO

from .oracle import OPS, VERTEX_OPS
from .outcomes import INCONCLUSIVE, EdgeOutcome


@dataclass(frozen=True)
class HistoryEvent:
    tid: int
    op: str
    args: tuple[int, ...]
    result: object
    t_inv: int
    t_res: int

    def to_line(self) -> str:
        return " ".join(
            (
                str(self.tid),
                self.op,
                ",".join(str(a) for a in self.args),
                format_result(self.result),
                str(self.t_inv),
                str(self.t_res),
            )
        )

    @classmethod
    def from_line(cls, line: str) -> HistoryEvent:
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"expected 6 fields, got {len(parts)}: {line!r}")
        tid, op, args, result, t_inv, t_res = parts
        if op not in OPS:
            raise ValueError(f"unknown operation {op!r}")
        ev = cls(
            int(tid),
            op,
            tuple(int(a) for a in args.split(",")),
            parse_result(op, result),
            int(t_inv),
            int(t_res),
        )
        if ev.t_res < ev.t_inv:
            raise ValueError(f"response before invocation: {line!r}")
        return ev

    def __str__(self) -> str:
        args = ",".join(map(str, self.args))
        return f"T{self.tid} {self.op}({args}) -> {format_result(self.result)}"


def format_result(result) -> str:
    if result is True:
        return "true"
    if result is False:
        return "false"
    if result is None:
        return "nil"
    if result is INCONCLUSIVE:
        return "inconclusive"
    if isinstance(result, EdgeOutcome):
        return result.name
    return ",".join(str(k) for k in result)


def parse_result(op: str, text: str):
    if op in VERTEX_OPS:
        if text not in ("true", "false"):
            raise ValueError(f"{op} result must be true/false, got {text!r}")
        return text == "true"
    if op == "get_path":
        if text == "nil":
            return None
        if text == "inconclusive":
            return INCONCLUSIVE
        return [int(k) for k in text.split(",")]
    return EdgeOutcome.parse(text)


def dump_history(events: Iterable[HistoryEvent], fp: TextIO) -> None:
    for ev in events:
        fp.write(ev.to_line())
        fp.write("\n")


def load_history(fp: TextIO) -> list[HistoryEvent]:
    events = []
    for line in fp:
        line = line.strip()
        if line and not line.startswith("#"):
            events.append(HistoryEvent.from_line(line))
    return events


def well_formed(events: Iterable[HistoryEvent]) -> bool:
    """True iff each thread's events are ordered and non-overlapping."""
    last: dict[int, int] = {}
    for ev in sorted(events, key=lambda e: (e.tid, e.t_inv)):
        if ev.t_res < ev.t_inv:
            return False
        if ev.tid in last and ev.t_inv < last[ev.tid]:
            return False
        last[ev.tid] = ev.t_res
    return True


def random_op(rng: random.Random, keys: list[int], ops=OPS) -> tuple[str, tuple[int, ...]]:
    op = rng.choice(ops)
    if op in VERTEX_OPS:
        return op, (rng.choice(keys),)
    k, l = rng.sample(keys, 2)
    return op, (k, l)


def record(
    graph,
    *,
    threads: int = 2,
    ops_per_thread: int | tuple[int, int] = 20,
    keys: Iterable[int] = range(1, 7),
    seed: int = 0,
    max_scans: int = 4,
    prefill: int = 0,
    stall: float = 0.0,
    ops=OPS,
    clock: Callable[[], int] = time.perf_counter_ns,
    switch_interval: Optional[float] = 1e-5,
) -> list[HistoryEvent]:
    """Run a random concurrent workload on ``graph`` and log every call.

    ``prefill`` random operations run first on the calling thread and are
    logged under tid ``threads``. ``stall`` is the probability of a short
    sleep before each operation; on the pure-Python engine it also arms the
    pause hook so threads stall between validation and CAS. A short
    ``switch_interval`` makes the interpreter interleave threads finely. Bounded
    ``get_path`` calls that come back INCONCLUSIVE are dropped.
    """
    keys = list(keys)
    rng = random.Random(seed)
    events: list[HistoryEvent] = []

    def call(op, args):
        if op == "get_path":
            return graph.get_path_bounded(*args, max_scans)
        return getattr(graph, op)(*args)

    for _ in range(prefill):
        op, args = random_op(rng, keys, ops)
        t0 = clock()
        res = call(op, args)
        t1 = clock()
        if res is not INCONCLUSIVE:
            events.append(HistoryEvent(threads, op, args, res, t0, t1))

    plans = []
    for tid in range(threads):
        n = ops_per_thread if isinstance(ops_per_thread, int) else rng.randint(*ops_per_thread)
        plans.append([random_op(rng, keys, ops) for _ in range(n)])
    stall_rngs = [random.Random(seed * 7919 + tid) for tid in range(threads)]

    old_hook = getattr(graph, "pause_hook", None)
    if stall and hasattr(graph, "pause_hook"):
        local = threading.local()

        def hook(where):
            r = getattr(local, "rng", None)
            if r is not None and r.random() < stall:
                time.sleep(r.random() * 2e-4)

        graph.pause_hook = hook
    else:
        local = None

    per_thread: list[list[HistoryEvent]] = [[] for _ in range(threads)]
    barrier = threading.Barrier(threads)
    errors: list[BaseException] = []

    def worker(tid: int) -> None:
        try:
            srng = stall_rngs[tid]
            if local is not None:
                local.rng = srng
            out = per_thread[tid]
            barrier.wait()
            for op, args in plans[tid]:
                if stall and srng.random() < stall:
                    time.sleep(srng.random() * 2e-4)
                t0 = clock()
                res = call(op, args)
                t1 = clock()
                if res is not INCONCLUSIVE:
                    out.append(HistoryEvent(tid, op, args, res, t0, t1))
        except BaseException as exc:  # surfaced after join
            errors.append(exc)
        finally:
            unregister = getattr(graph, "unregister", None)
            if unregister is not None:
                unregister()

    workers = [threading.Thread(target=worker, args=(t,)) for t in range(threads)]
    old_interval = sys.getswitchinterval()
    if switch_interval is not None:
        sys.setswitchinterval(switch_interval)
    try:
        for w in workers:
            w.start()
        for w in workers:
            w.join()
    finally:
        sys.setswitchinterval(old_interval)
    if stall and hasattr(graph, "pause_hook"):
        graph.pause_hook = old_hook
    if errors:
        raise errors[0]
    for out in per_thread:
        events.extend(out)
    events.sort(key=lambda e: (e.t_inv, e.tid))
    return events
