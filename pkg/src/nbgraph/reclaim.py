"""Thread registration and epoch-based deferred reclamation.

Python memory is garbage collected, so "freeing" a node here means handing
it to the owner's free callback, which poisons it: any later dereference
raises :class:`UseAfterFreeError`. That gives the pure-Python engine the same
use-after-free detection the native core gets from AddressSanitizer.
"""

from __future__ import annotations

import threading
from collections import deque
from typing import Callable, Iterable

from .atomics import AtomicCounter
from .outcomes import ReclamationError, RegistryFullError

# Operation kinds, shared with the native core for per-op instrumentation.
OP_KINDS = (
    "add_vertex",
    "remove_vertex",
    "contains_vertex",
    "add_edge",
    "remove_edge",
    "contains_edge",
    "get_path",
    "other",
)
OP_INDEX = {name: i for i, name in enumerate(OP_KINDS)}
OP_OTHER = OP_INDEX["other"]

_ADVANCE_EVERY = 64


class ThreadContext:
    """Per-thread state: slot id, pin state, limbo list and op counters."""

    __slots__ = (
        "tid",
        "ident",
        "depth",
        "announce",
        "limbo",
        "n_retired",
        "visit",
        "op",
        "cas",
        "faa",
        "steps",
        "collections",
        "live",
        "collecting",
    )

    def __init__(self, tid: int) -> None:
        self.tid = tid
        self.ident = threading.get_ident()
        self.depth = 0
        # (active, epoch) published as one tuple so readers never see a torn pair
        self.announce = (False, 0)
        self.limbo: deque = deque()
        self.n_retired = 0
        self.visit = 0
        self.op = OP_OTHER
        self.cas = [0] * len(OP_KINDS)
        self.faa = [0] * len(OP_KINDS)
        self.steps = 0
        self.collections = 0
        self.live = True
        self.collecting = False

    def __repr__(self) -> str:
        return f"ThreadContext(tid={self.tid}, depth={self.depth})"


class _Registration:
    # Lives in a threading.local; its finaliser releases the slot at thread exit.
    __slots__ = ("registry", "ctx", "__weakref__")

    def __init__(self, registry: ThreadRegistry, ctx: ThreadContext) -> None:
        self.registry = registry
        self.ctx = ctx

    def __del__(self) -> None:
        try:
            self.registry._release(self.ctx)
        except Exception:
            pass


class ThreadRegistry:
    """Fixed-capacity slot table; one live registration per OS thread."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self.slots: list[ThreadContext | None] = [None] * capacity
        # limbo lists outlive registrations; a new registrant inherits the slot's list
        self._orphans: list[deque] = [deque() for _ in range(capacity)]
        # visit epochs must keep growing per slot, or stale visited stamps could match
        self._visits = [0] * capacity
        self._lock = threading.Lock()
        self._local = threading.local()

    def current(self) -> ThreadContext:
        reg = getattr(self._local, "reg", None)
        if reg is not None and reg.ctx.live:
            return reg.ctx
        return self.register()

    def register(self) -> ThreadContext:
        reg = getattr(self._local, "reg", None)
        if reg is not None and reg.ctx.live:
            return reg.ctx
        with self._lock:
            for tid, slot in enumerate(self.slots):
                if slot is None:
                    ctx = ThreadContext(tid)
                    ctx.limbo = self._orphans[tid]
                    ctx.visit = self._visits[tid]
                    self.slots[tid] = ctx
                    break
            else:
                raise RegistryFullError(
                    f"all {self.capacity} thread slots are registered"
                )
        self._local.reg = _Registration(self, ctx)
        return ctx

    def unregister(self) -> None:
        reg = getattr(self._local, "reg", None)
        if reg is None:
            return
        self._release(reg.ctx)
        self._local.reg = None

    def _release(self, ctx: ThreadContext) -> None:
        if not ctx.live:
            return
        if ctx.depth:
            raise ReclamationError("cannot unregister while pinned")
        with self._lock:
            ctx.live = False
            self._visits[ctx.tid] = ctx.visit
            if self.slots[ctx.tid] is ctx:
                self.slots[ctx.tid] = None

    def active(self) -> Iterable[ThreadContext]:
        return [c for c in self.slots if c is not None]

    def registered_count(self) -> int:
        return sum(1 for c in self.slots if c is not None)


class EpochReclaimer:
    """Three-epoch deferred reclamation over a :class:`ThreadRegistry`.

    A node retired at global epoch ``e`` is handed to ``free`` once the epoch
    reaches ``e + 2``; advancing requires every pinned thread to have
    announced the current epoch, so no guard that could still see the node
    survives. ``leak=True`` retires but never frees.
    """

    def __init__(
        self,
        registry: ThreadRegistry,
        free: Callable[[ThreadContext, object], None],
        *,
        leak: bool = False,
    ) -> None:
        self.registry = registry
        self.free = free
        self.leak = leak
        self.epoch = AtomicCounter(0)
        self.retired_total = AtomicCounter(0)
        self.freed_total = AtomicCounter(0)

    def pin(self, ctx: ThreadContext) -> None:
        if ctx.depth == 0:
            # re-read until the announced epoch is still current
            while True:
                e = self.epoch.value
                ctx.announce = (True, e)
                if self.epoch.value == e:
                    break
        ctx.depth += 1

    def unpin(self, ctx: ThreadContext) -> None:
        ctx.depth -= 1
        if ctx.depth == 0:
            ctx.announce = (False, 0)
        elif ctx.depth < 0:
            ctx.depth = 0
            raise ReclamationError("unpin without matching pin")

    def retire(self, ctx: ThreadContext, node) -> None:
        if node.retired:
            raise ReclamationError(f"double retire of {node!r}")
        node.retired = True
        ctx.limbo.append((self.epoch.value, node))
        self.retired_total.faa(1)
        ctx.n_retired += 1
        # frees can retire more nodes; never re-enter collect from inside one
        if ctx.n_retired % _ADVANCE_EVERY == 0 and not self.leak and not ctx.collecting:
            self.try_advance()
            self.collect(ctx)

    def try_advance(self) -> bool:
        e = self.epoch.value
        for other in self.registry.active():
            active, seen = other.announce
            if active and seen != e:
                return False
        return self.epoch.cas(e, e + 1)

    def collect(self, ctx: ThreadContext) -> int:
        """Free this thread's limbo entries that are two epochs old."""
        if self.leak:
            return 0
        horizon = self.epoch.value - 2
        limbo = ctx.limbo
        n = 0
        ctx.collecting = True
        try:
            while limbo and limbo[0][0] <= horizon:
                _, node = limbo.popleft()
                self.free(ctx, node)
                n += 1
        finally:
            ctx.collecting = False
        if n:
            self.freed_total.faa(n)
        return n

    def limbo_nodes(self) -> list:
        nodes = []
        for limbo in self.registry._orphans:
            nodes.extend(node for _, node in limbo)
        return nodes

    def quiesce(self, ctx: ThreadContext) -> int:
        """Free every retired node. Caller guarantees no other thread is pinned."""
        for other in self.registry.active():
            if other is not ctx and other.announce[0]:
                raise ReclamationError(f"thread slot {other.tid} is still pinned")
        if self.leak:
            return 0
        n = 0
        while True:
            pending = [q for q in self.registry._orphans if q]
            if not pending:
                ctx.collecting = False
                return n
            # free callbacks may retire more nodes (vertices whose last incoming edge died)
            self.epoch.faa(2)
            ctx.collecting = True
            for limbo in pending:
                while limbo:
                    _, node = limbo.popleft()
                    self.free(ctx, node)
                    n += 1
                    self.freed_total.faa(1)
