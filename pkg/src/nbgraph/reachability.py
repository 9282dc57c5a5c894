"""Obstruction-free reachability: repeated BFS collection with counter snapshots.

A collection records every vertex it reaches together with a snapshot of that
vertex's edge-modification counter. Two consecutive collections that agree on
vertices, snapshots and predecessors certify that nothing they depend on
changed in between, because every physical change to an edge list is preceded
by an increment of its owner's counter.
"""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING, Optional

from .outcomes import INCONCLUSIVE

if TYPE_CHECKING:
    from .graph import LockFreeGraph
    from .nodes import VNode
    from .reclaim import ThreadContext


class BFSRecord:
    __slots__ = ("n", "key", "lecnt", "p")

    def __init__(self, n: VNode, lecnt: int, p: Optional[BFSRecord]) -> None:
        self.n = n
        # copied so the tree stays readable after the guard is dropped
        self.key = n.key
        self.lecnt = lecnt
        self.p = p

    def triple(self) -> tuple:
        return (self.n, self.lecnt, None if self.p is None else self.p.n)

    def __repr__(self) -> str:
        parent = None if self.p is None else self.p.key
        return f"BFSRecord({self.key}, lecnt={self.lecnt}, p={parent})"


class BFSTree:
    """Records of one collection in visit order; ``records[0]`` is the root."""

    __slots__ = ("records", "found")

    def __init__(self) -> None:
        self.records: list[BFSRecord] = []
        self.found = False

    def __len__(self) -> int:
        return len(self.records)

    @property
    def head(self) -> BFSRecord:
        return self.records[0]

    @property
    def tail(self) -> BFSRecord:
        return self.records[-1]

    def keys(self) -> list[int]:
        return [r.key for r in self.records]

    def lecnts(self) -> list[int]:
        return [r.lecnt for r in self.records]

    def parents(self) -> list[Optional[int]]:
        return [None if r.p is None else r.p.key for r in self.records]

    def triples(self) -> list[tuple]:
        """(node identity, counter snapshot, parent identity) per record."""
        return [(id(n), c, None if p is None else id(p)) for n, c, p in (r.triple() for r in self.records)]

    def path(self) -> list[int]:
        """Keys along the predecessor chain from the root to the tail."""
        out = []
        rec: Optional[BFSRecord] = self.tail
        while rec is not None:
            out.append(rec.key)
            rec = rec.p
        out.reverse()
        return out

    def __repr__(self) -> str:
        return f"BFSTree(found={self.found}, keys={self.keys()})"


def tree_collect(graph: LockFreeGraph, ctx: ThreadContext, u: VNode, v: VNode) -> BFSTree:
    tid = ctx.tid
    ctx.visit += 1
    cnt = ctx.visit
    tail = graph.et
    tree = BFSTree()
    records = tree.records
    u.visited[tid] = cnt
    root = BFSRecord(u, u.ecnt.value, None)
    records.append(root)
    que = deque((root,))
    steps = 0
    while que:
        cvn = que.popleft()
        itn = cvn.n.eh.enxt.word[0]
        while itn is not tail:
            steps += 1
            word = itn.enxt.word
            if not word[1]:
                adjn = itn.ptv
                if not adjn.vnxt.word[1]:
                    if adjn is v:
                        records.append(BFSRecord(adjn, adjn.ecnt.value, cvn))
                        tree.found = True
                        ctx.steps += steps
                        return tree
                    if adjn.visited[tid] != cnt:
                        adjn.visited[tid] = cnt
                        rec = BFSRecord(adjn, adjn.ecnt.value, cvn)
                        records.append(rec)
                        que.append(rec)
            itn = word[0]
    ctx.steps += steps
    return tree


def compare_tree(ot: Optional[BFSTree], nt: Optional[BFSTree]) -> bool:
    if ot is None or nt is None:
        return False
    if len(ot.records) != len(nt.records):
        return False
    for a, b in zip(ot.records, nt.records):
        if a.n is not b.n or a.lecnt != b.lecnt:
            return False
        if (a.p is None) != (b.p is None):
            return False
        if a.p is not None and a.p.n is not b.p.n:
            return False
    return True


def compare_path(ot: Optional[BFSTree], nt: Optional[BFSTree]) -> bool:
    if ot is None or nt is None or not ot.records or not nt.records:
        return False
    a: Optional[BFSRecord] = ot.tail
    b: Optional[BFSRecord] = nt.tail
    while a is not None and b is not None:
        if a.n is not b.n or a.lecnt != b.lecnt:
            return False
        pa = None if a.p is None else a.p.n
        pb = None if b.p is None else b.p.n
        if pa is not pb:
            return False
        a, b = a.p, b.p
    return a is None and b is None


def scan(graph: LockFreeGraph, ctx: ThreadContext, u: VNode, v: VNode, max_rounds: Optional[int] = None):
    """Double-collect until two consecutive collections agree.

    Returns ``(found, tree)``; ``tree`` is None when no path was found. With
    ``max_rounds`` set, gives up after that many comparisons and returns
    :data:`INCONCLUSIVE`.
    """
    ot = tree_collect(graph, ctx, u, v)
    ctx.collections = 1
    rounds = 0
    while True:
        if max_rounds is not None and rounds >= max_rounds:
            return INCONCLUSIVE
        hook = graph.collection_hook
        if hook is not None:
            hook(ctx.collections)
        nt = tree_collect(graph, ctx, u, v)
        ctx.collections += 1
        rounds += 1
        if ot.found and nt.found and compare_path(ot, nt):
            return True, nt
        if not ot.found and not nt.found and compare_tree(ot, nt):
            return False, None
        ot = nt
