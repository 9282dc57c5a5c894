"""Pure-Python lock-free graph engine.

The vertex list is a Harris-style sorted list with marked ``vnxt`` links; each
vertex roots a sorted edge list with marked ``enxt`` links. Modifying
traversals help finish pending physical removals; lookups and reachability
queries only read.

A removed vertex is reclaimed in two steps. One grace period after it is
unlinked its outgoing edges are freed. The node itself goes once no edge
node still points at it, since stale incoming edges are purged lazily.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, Optional

from . import reachability
from .atomics import cas_link
from .nodes import REF_DEAD, REF_ONE, ENode, VNode, make_edge_tail, poison
from .outcomes import (
    INCONCLUSIVE,
    KEY_MAX,
    KEY_MIN,
    EdgeOutcome,
    ReclamationError,
    check_key,
    check_pair,
)
from .reclaim import OP_INDEX, OP_KINDS, OP_OTHER, EpochReclaimer, ThreadContext, ThreadRegistry

_ADD_V = OP_INDEX["add_vertex"]
_REM_V = OP_INDEX["remove_vertex"]
_CON_V = OP_INDEX["contains_vertex"]
_ADD_E = OP_INDEX["add_edge"]
_REM_E = OP_INDEX["remove_edge"]
_CON_E = OP_INDEX["contains_edge"]
_PATH = OP_INDEX["get_path"]

VNP = EdgeOutcome.VERTEX_NOT_PRESENT


class LockFreeGraph:
    """Concurrent unbounded directed graph.

    ``max_threads`` fixes the number of registration slots and the length of
    every vertex's visited array. With ``reclaim=False`` retired nodes are
    never freed (leak mode). ``eager_unlink=True`` makes ``remove_vertex``
    return only once the vertex is physically detached.
    """

    backend = "python"

    def __init__(
        self,
        max_threads: int = 64,
        *,
        reclaim: bool = True,
        eager_unlink: bool = False,
    ) -> None:
        self.max_threads = max_threads
        self.eager_unlink = eager_unlink
        self.registry = ThreadRegistry(max_threads)
        self.ebr = EpochReclaimer(self.registry, self._free, leak=not reclaim)
        self.vt = VNode(KEY_MAX, max_threads, None)
        self.et = make_edge_tail(self.vt)
        self.vt.eh = ENode(KEY_MIN, self.vt, self.et)
        self.vh = VNode(KEY_MIN, max_threads, self.et)
        self.vh.vnxt.word = (self.vt, False)
        # test hooks: called between the validation read and the publishing CAS
        # of modifications, and between collections of a scan
        self.pause_hook: Optional[Callable[[str], None]] = None
        self.collection_hook: Optional[Callable[[int], None]] = None
        self.freed_vertices = 0
        self.freed_edges = 0
        self._stat_lock = threading.Lock()

    # -- thread plumbing ---------------------------------------------------

    def register(self) -> ThreadContext:
        return self.registry.register()

    def unregister(self) -> None:
        self.registry.unregister()

    @contextmanager
    def pinned(self) -> Iterator[ThreadContext]:
        """Hold a reclamation guard across several calls."""
        ctx = self.registry.current()
        self.ebr.pin(ctx)
        try:
            yield ctx
        finally:
            self.ebr.unpin(ctx)

    def _enter(self, op: int) -> ThreadContext:
        ctx = self.registry.current()
        ctx.op = op
        ctx.steps = 0
        self.ebr.pin(ctx)
        return ctx

    def _leave(self, ctx: ThreadContext) -> None:
        self.ebr.unpin(ctx)
        ctx.op = OP_OTHER

    def _cas(self, ctx: ThreadContext, cell, expected, desired) -> bool:
        ctx.cas[ctx.op] += 1
        return cas_link(cell, expected, desired)

    def _faa(self, ctx: ThreadContext, counter, delta: int = 1) -> int:
        ctx.faa[ctx.op] += 1
        return counter.faa(delta)

    def _pause(self, where: str) -> None:
        hook = self.pause_hook
        if hook is not None:
            hook(where)

    # -- reclamation -------------------------------------------------------

    def _retire_vertex(self, ctx: ThreadContext, v: VNode) -> None:
        # called once, by the winner of the unlinking CAS; stage one of two
        if v.stage != 0:
            raise ReclamationError(f"{v!r} unlinked twice")
        self.ebr.retire(ctx, v)

    def _acquire_ref(self, v: VNode) -> bool:
        refs = v.refs
        while True:
            cur = refs.value
            if cur == REF_DEAD:
                return False
            if refs.cas(cur, cur + REF_ONE):
                return True

    def _release_ref(self, ctx: ThreadContext, v: VNode) -> None:
        if v.refs.faa(-REF_ONE) - REF_ONE == REF_DEAD:
            self._retire_final(ctx, v)

    def _retire_final(self, ctx: ThreadContext, v: VNode) -> None:
        v.stage = 2
        v.retired = False
        self.ebr.retire(ctx, v)

    def _free(self, ctx: ThreadContext, node) -> None:
        if type(node) is ENode:
            self._release_ref(ctx, node.ptv)
            with self._stat_lock:
                self.freed_edges += 1
            poison(node)
            return
        if node.stage == 2:
            with self._stat_lock:
                self.freed_vertices += 1
            poison(node)
            return
        # Stage one: nobody who could still walk this vertex's edge list is
        # pinned any more, so the list goes now. The node itself waits for
        # the last incoming edge, which breaks cycles among removed vertices.
        node.stage = 1
        it = node.eh
        tail = self.et
        n = 0
        while it is not tail:
            nxt = it.enxt.word[0]
            if it is not node.eh:
                self._release_ref(ctx, it.ptv)
                n += 1
            poison(it)
            it = nxt
        with self._stat_lock:
            self.freed_edges += n
        if node.refs.faa(REF_DEAD) == 0:
            self._retire_final(ctx, node)

    def quiesce(self) -> int:
        """Free everything retired so far; no other thread may be inside an op."""
        ctx = self.registry.current()
        limbo = {id(n) for n in self.ebr.limbo_nodes()}
        if limbo:
            linked = self._reachable_ids()
            bad = limbo & linked
            if bad:
                raise ReclamationError(f"{len(bad)} retired nodes are still linked")
        return self.ebr.quiesce(ctx)

    def _reachable_ids(self) -> set[int]:
        seen = set()
        cv = self.vh
        while cv is not None:
            seen.add(id(cv))
            it = cv.eh.enxt.word[0] if cv.eh is not None else None
            while it is not None and it is not self.et:
                seen.add(id(it))
                it = it.enxt.word[0]
            cv = cv.vnxt.word[0]
        return seen

    def reclaim_stats(self) -> dict:
        return {
            "retired": self.ebr.retired_total.value,
            "freed": self.ebr.freed_total.value,
            "freed_vertices": self.freed_vertices,
            "freed_edges": self.freed_edges,
            "leak_mode": self.ebr.leak,
        }

    # -- locate ------------------------------------------------------------

    def _loc_v(self, ctx: ThreadContext, start: VNode, k: int) -> tuple[VNode, VNode]:
        vh = self.vh
        while True:
            # a marked start can never be CAS'd again; fall back to the head
            if start.vnxt.word[1]:
                start = vh
            pv = start
            cv = pv.vnxt.word[0]
            while True:
                ctx.steps += 1
                cn = cv.vnxt.word
                if cn[1]:
                    succ = cn[0]
                    if not self._cas(ctx, pv.vnxt, (cv, False), (succ, False)):
                        break
                    self._retire_vertex(ctx, cv)
                    cv = succ
                    continue
                if cv.key >= k:
                    return pv, cv
                pv = cv
                cv = cn[0]

    def _loc_c(self, ctx: ThreadContext, start: VNode, k: int) -> tuple[VNode, VNode]:
        pv = start
        cv = pv.vnxt.word[0]
        steps = 1
        while cv.key < k:
            pv = cv
            cv = cv.vnxt.word[0]
            steps += 1
        ctx.steps += steps
        return pv, cv

    def _loc_e(self, ctx: ThreadContext, u: VNode, l: int) -> tuple[ENode, ENode]:
        eh = u.eh
        while True:
            pe = eh
            ce = pe.enxt.word[0]
            while True:
                ctx.steps += 1
                cnt = ce.enxt.word
                if not cnt[1] and ce.ptv.vnxt.word[1]:
                    # edge into a removed vertex: remove it logically first
                    if not self._cas(ctx, ce.enxt, cnt, (cnt[0], True)):
                        break
                    cnt = (cnt[0], True)
                if cnt[1]:
                    self._faa(ctx, u.ecnt)
                    u.n_purge.faa(1)
                    ce.counted = True
                    if not self._cas(ctx, pe.enxt, (ce, False), (cnt[0], False)):
                        break
                    self.ebr.retire(ctx, ce)
                    ce = cnt[0]
                    continue
                if ce.key >= l:
                    return pe, ce
                pe = ce
                ce = cnt[0]

    def _locate_pair(self, ctx: ThreadContext, k: int, l: int, helping: bool):
        loc = self._loc_v if helping else self._loc_c
        vh = self.vh
        if k < l:
            _, cv1 = loc(ctx, vh, k)
            if cv1.key != k:
                return None, None, False
            _, cv2 = loc(ctx, cv1, l)
            if cv2.key != l:
                return None, None, False
        else:
            _, cv2 = loc(ctx, vh, l)
            if cv2.key != l:
                return None, None, False
            _, cv1 = loc(ctx, cv2, k)
            if cv1.key != k:
                return None, None, False
        return cv1, cv2, True

    # -- vertex operations -------------------------------------------------

    def add_vertex(self, k: int) -> bool:
        check_key(k)
        ctx = self._enter(_ADD_V)
        try:
            nv = None
            while True:
                pv, cv = self._loc_v(ctx, self.vh, k)
                if cv.key == k:
                    return False
                if nv is None:
                    nv = VNode(k, self.max_threads, self.et)
                nv.vnxt.word = (cv, False)
                self._pause("add_vertex")
                if self._cas(ctx, pv.vnxt, (cv, False), (nv, False)):
                    return True
        finally:
            self._leave(ctx)

    def remove_vertex(self, k: int) -> bool:
        check_key(k)
        ctx = self._enter(_REM_V)
        try:
            while True:
                pv, cv = self._loc_v(ctx, self.vh, k)
                if cv.key != k:
                    return False
                cn = cv.vnxt.word
                if cn[1]:
                    continue
                self._pause("remove_vertex")
                if self._cas(ctx, cv.vnxt, cn, (cn[0], True)):
                    if self._cas(ctx, pv.vnxt, (cv, False), (cn[0], False)):
                        self._retire_vertex(ctx, cv)
                    elif self.eager_unlink:
                        self._loc_v(ctx, self.vh, k)
                    return True
        finally:
            self._leave(ctx)

    def contains_vertex(self, k: int) -> bool:
        check_key(k)
        ctx = self._enter(_CON_V)
        try:
            cv = self.vh.vnxt.word[0]
            steps = 1
            while cv.key < k:
                cv = cv.vnxt.word[0]
                steps += 1
            ctx.steps = steps
            return cv.key == k and not cv.vnxt.word[1]
        finally:
            self._leave(ctx)

    # -- edge operations ---------------------------------------------------

    def add_edge(self, k: int, l: int) -> EdgeOutcome:
        check_pair(k, l)
        ctx = self._enter(_ADD_E)
        ne = None
        v = None
        try:
            u, v, ok = self._locate_pair(ctx, k, l, True)
            if not ok:
                return VNP
            while True:
                if u.vnxt.word[1] or v.vnxt.word[1]:
                    return VNP
                pe, ce = self._loc_e(ctx, u, l)
                if ce.key == l:
                    return EdgeOutcome.EDGE_PRESENT
                if ne is None:
                    if not self._acquire_ref(v):
                        return VNP
                    ne = ENode(l, v)
                ne.enxt.word = (ce, False)
                self._pause("add_edge")
                if self._cas(ctx, pe.enxt, (ce, False), (ne, False)):
                    ne = None
                    self._faa(ctx, u.ecnt)
                    u.n_add.faa(1)
                    return EdgeOutcome.EDGE_ADDED
        finally:
            if ne is not None:
                # never published, so only the reference needs dropping
                self._release_ref(ctx, v)
            self._leave(ctx)

    def remove_edge(self, k: int, l: int) -> EdgeOutcome:
        check_pair(k, l)
        ctx = self._enter(_REM_E)
        try:
            u, v, ok = self._locate_pair(ctx, k, l, True)
            if not ok:
                return VNP
            while True:
                if u.vnxt.word[1] or v.vnxt.word[1]:
                    return VNP
                pe, ce = self._loc_e(ctx, u, l)
                if ce.key != l:
                    return EdgeOutcome.EDGE_NOT_PRESENT
                cnt = ce.enxt.word
                if cnt[1]:
                    continue
                self._pause("remove_edge")
                if self._cas(ctx, ce.enxt, cnt, (cnt[0], True)):
                    self._faa(ctx, u.ecnt)
                    u.n_rem.faa(1)
                    ce.counted = True
                    if self._cas(ctx, pe.enxt, (ce, False), (cnt[0], False)):
                        self.ebr.retire(ctx, ce)
                    else:
                        # someone changed pe; a fresh pass detaches ce
                        self._loc_e(ctx, u, l)
                    return EdgeOutcome.EDGE_REMOVED
        finally:
            self._leave(ctx)

    def contains_edge(self, k: int, l: int) -> EdgeOutcome:
        check_pair(k, l)
        ctx = self._enter(_CON_E)
        try:
            u, v, ok = self._locate_pair(ctx, k, l, False)
            if not ok:
                return VNP
            ce = u.eh.enxt.word[0]
            steps = 1
            while ce.key < l:
                ce = ce.enxt.word[0]
                steps += 1
            ctx.steps += steps
            # ptv identity rules out a stale edge into an earlier v(l)
            if (
                ce.key == l
                and ce.ptv is v
                and not u.vnxt.word[1]
                and not v.vnxt.word[1]
                and not ce.enxt.word[1]
            ):
                return EdgeOutcome.EDGE_FOUND
            return EdgeOutcome.VERTEX_OR_EDGE_NOT_PRESENT
        finally:
            self._leave(ctx)

    # -- reachability ------------------------------------------------------

    def get_path(self, k: int, l: int) -> Optional[list[int]]:
        """Keys of a path from ``k`` to ``l`` (both included), or None."""
        return self._get_path(k, l, None)

    def get_path_bounded(self, k: int, l: int, max_scans: int):
        """Like :meth:`get_path` but returns INCONCLUSIVE after ``max_scans`` failed comparisons."""
        if max_scans < 1:
            raise ValueError("max_scans must be at least 1")
        return self._get_path(k, l, max_scans)

    def _get_path(self, k: int, l: int, max_rounds: Optional[int]):
        check_pair(k, l)
        ctx = self._enter(_PATH)
        ctx.collections = 0
        try:
            u, v, ok = self._locate_pair(ctx, k, l, False)
            if not ok:
                return None
            if u.vnxt.word[1] or v.vnxt.word[1]:
                return None
            res = reachability.scan(self, ctx, u, v, max_rounds)
            if res is INCONCLUSIVE:
                return INCONCLUSIVE
            found, tree = res
            return tree.path() if found else None
        finally:
            self._leave(ctx)

    def tree_collect(self, k: int, l: int) -> Optional[reachability.BFSTree]:
        """One BFS collection from v(k) towards v(l); None if either is absent.

        Identities in the returned tree are only meaningful while the caller
        holds :meth:`pinned`.
        """
        check_pair(k, l)
        ctx = self._enter(_PATH)
        try:
            u, v, ok = self._locate_pair(ctx, k, l, False)
            if not ok:
                return None
            return reachability.tree_collect(self, ctx, u, v)
        finally:
            self._leave(ctx)

    compare_tree = staticmethod(reachability.compare_tree)
    compare_path = staticmethod(reachability.compare_path)

    # -- locate helpers exposed by key ------------------------------------

    def loc_v(self, k: int, start: Optional[int] = None) -> tuple[int, int]:
        ctx = self._enter(OP_OTHER)
        try:
            node = self.vh if start is None else self._find_physical(start)
            pv, cv = self._loc_v(ctx, node, k)
            return pv.key, cv.key
        finally:
            self._leave(ctx)

    def loc_c(self, k: int, start: Optional[int] = None) -> tuple[int, int]:
        ctx = self._enter(OP_OTHER)
        try:
            node = self.vh if start is None else self._find_physical(start)
            pv, cv = self._loc_c(ctx, node, k)
            return pv.key, cv.key
        finally:
            self._leave(ctx)

    def loc_e(self, k: int, l: int) -> tuple[int, int]:
        ctx = self._enter(OP_OTHER)
        try:
            u = self._find_physical(k)
            pe, ce = self._loc_e(ctx, u, l)
            return pe.key, ce.key
        finally:
            self._leave(ctx)

    def conv_plus(self, k: int, l: int) -> tuple[Optional[int], Optional[int], bool]:
        return self._pair_keys(k, l, True)

    def conc_plus(self, k: int, l: int) -> tuple[Optional[int], Optional[int], bool]:
        return self._pair_keys(k, l, False)

    def _pair_keys(self, k, l, helping):
        check_pair(k, l)
        ctx = self._enter(OP_OTHER)
        try:
            u, v, ok = self._locate_pair(ctx, k, l, helping)
            return (u.key if ok else None, v.key if ok else None, ok)
        finally:
            self._leave(ctx)

    def _find_physical(self, k: int) -> VNode:
        # first physically linked vertex with key k, marked or not
        cv = self.vh
        while cv is not None and cv.key < k:
            cv = cv.vnxt.word[0]
        if cv is None or cv.key != k:
            raise KeyError(k)
        return cv

    # -- instrumentation and inspection -----------------------------------

    def inject_vertex_mark(self, k: int) -> bool:
        """Logically remove v(k) without unlinking it (test staging)."""
        cv = self._find_physical(k)
        w = cv.vnxt.word
        return not w[1] and cas_link(cv.vnxt, w, (w[0], True))

    def inject_edge_mark(self, k: int, l: int) -> bool:
        """Logically remove e(k, l) without unlinking it or counting it."""
        u = self._find_physical(k)
        ce = u.eh.enxt.word[0]
        while ce.key < l:
            ce = ce.enxt.word[0]
        if ce.key != l:
            raise KeyError((k, l))
        w = ce.enxt.word
        return not w[1] and cas_link(ce.enxt, w, (w[0], True))

    def op_stats(self) -> dict[str, tuple[int, int]]:
        """Per-op-kind (CAS count, FAA count) summed over registered threads."""
        out = {name: [0, 0] for name in OP_KINDS}
        for ctx in self.registry.active():
            for i, name in enumerate(OP_KINDS):
                out[name][0] += ctx.cas[i]
                out[name][1] += ctx.faa[i]
        return {k: (c, f) for k, (c, f) in out.items()}

    def reset_op_stats(self) -> None:
        for ctx in self.registry.active():
            ctx.cas = [0] * len(OP_KINDS)
            ctx.faa = [0] * len(OP_KINDS)

    def last_op_steps(self) -> int:
        return self.registry.current().steps

    def last_collections(self) -> int:
        return self.registry.current().collections

    def dump(self) -> list[tuple[int, bool, list[tuple[int, bool, bool]]]]:
        """Physical structure: (key, marked, [(dest, edge_marked, dest_marked)])."""
        out = []
        cv = self.vh.vnxt.word[0]
        while cv is not self.vt:
            edges = []
            ce = cv.eh.enxt.word[0]
            while ce is not self.et:
                edges.append((ce.key, ce.enxt.word[1], ce.ptv.vnxt.word[1]))
                ce = ce.enxt.word[0]
            out.append((cv.key, cv.vnxt.word[1], edges))
            cv = cv.vnxt.word[0]
        return out

    def snapshot(self) -> tuple[list[int], list[tuple[int, int]]]:
        """Abstract graph (vertices, edges) read at quiescence."""
        vertices = []
        edges = []
        cv = self.vh.vnxt.word[0]
        while cv is not self.vt:
            if not cv.vnxt.word[1]:
                vertices.append(cv.key)
                ce = cv.eh.enxt.word[0]
                while ce is not self.et:
                    if not ce.enxt.word[1] and not ce.ptv.vnxt.word[1]:
                        edges.append((cv.key, ce.key))
                    ce = ce.enxt.word[0]
            cv = cv.vnxt.word[0]
        return vertices, edges

    def counter_audit(self) -> list[dict]:
        """ecnt of every physically linked vertex next to its per-site counts."""
        out = []
        cv = self.vh.vnxt.word[0]
        while cv is not self.vt:
            out.append(
                {
                    "key": cv.key,
                    "ecnt": cv.ecnt.value,
                    "added": cv.n_add.value,
                    "removed": cv.n_rem.value,
                    "purged": cv.n_purge.value,
                }
            )
            cv = cv.vnxt.word[0]
        return out

    def ecnt(self, k: int) -> int:
        return self._find_physical(k).ecnt.value

    def check_structure(self) -> None:
        """Assert the quiescent invariants: sorted lists, unique live keys, counted unlinks."""
        prev = KEY_MIN
        cv = self.vh.vnxt.word[0]
        while cv is not self.vt:
            assert cv.key > prev, f"vertex list unsorted at {cv.key}"
            prev = cv.key
            eprev = KEY_MIN
            ce = cv.eh.enxt.word[0]
            while ce is not self.et:
                assert ce.key > eprev, f"edge list of {cv.key} unsorted at {ce.key}"
                eprev = ce.key
                ce = ce.enxt.word[0]
            cv = cv.vnxt.word[0]
