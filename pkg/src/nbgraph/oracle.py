"""Sequential reference graph.

Plain sorted maps and sets, no concurrency. Removing a vertex drops every
incident edge immediately, which is what the concurrent engines must look
like from the outside.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

from .outcomes import EdgeOutcome, check_key, check_pair

OPS = (
    "add_vertex",
    "remove_vertex",
    "contains_vertex",
    "add_edge",
    "remove_edge",
    "contains_edge",
    "get_path",
)
VERTEX_OPS = frozenset(OPS[:3])


def bfs_path(adj, k: int, l: int) -> Optional[list[int]]:
    """BFS from k visiting out-neighbours in ascending key order.

    ``adj`` maps key -> iterable of out-neighbours; neighbours that are not
    themselves keys of ``adj`` are ignored.
    """
    if k not in adj or l not in adj:
        return None
    parent = {k: None}
    que = deque((k,))
    while que:
        x = que.popleft()
        for y in sorted(adj[x]):
            if y not in adj:
                continue
            if y == l:
                path = [l, x]
                while parent[x] is not None:
                    x = parent[x]
                    path.append(x)
                path.reverse()
                return path
            if y not in parent:
                parent[y] = x
                que.append(y)
    return None


class SeqGraph:
    """Sorted map key -> set of out-neighbour keys."""

    def __init__(self) -> None:
        self.adj: dict[int, set[int]] = {}

    def copy(self) -> SeqGraph:
        g = SeqGraph()
        g.adj = {k: set(v) for k, v in self.adj.items()}
        return g

    def add_vertex(self, k: int) -> bool:
        check_key(k)
        if k in self.adj:
            return False
        self.adj[k] = set()
        return True

    def remove_vertex(self, k: int) -> bool:
        check_key(k)
        if k not in self.adj:
            return False
        del self.adj[k]
        for out in self.adj.values():
            out.discard(k)
        return True

    def contains_vertex(self, k: int) -> bool:
        check_key(k)
        return k in self.adj

    def add_edge(self, k: int, l: int) -> EdgeOutcome:
        check_pair(k, l)
        if k not in self.adj or l not in self.adj:
            return EdgeOutcome.VERTEX_NOT_PRESENT
        if l in self.adj[k]:
            return EdgeOutcome.EDGE_PRESENT
        self.adj[k].add(l)
        return EdgeOutcome.EDGE_ADDED

    def remove_edge(self, k: int, l: int) -> EdgeOutcome:
        check_pair(k, l)
        if k not in self.adj or l not in self.adj:
            return EdgeOutcome.VERTEX_NOT_PRESENT
        if l not in self.adj[k]:
            return EdgeOutcome.EDGE_NOT_PRESENT
        self.adj[k].discard(l)
        return EdgeOutcome.EDGE_REMOVED

    def contains_edge(self, k: int, l: int) -> EdgeOutcome:
        check_pair(k, l)
        if k not in self.adj or l not in self.adj:
            return EdgeOutcome.VERTEX_NOT_PRESENT
        if l in self.adj[k]:
            return EdgeOutcome.EDGE_FOUND
        return EdgeOutcome.VERTEX_OR_EDGE_NOT_PRESENT

    def get_path(self, k: int, l: int) -> Optional[list[int]]:
        check_pair(k, l)
        return bfs_path(self.adj, k, l)

    def get_path_bounded(self, k: int, l: int, max_scans: int):
        if max_scans < 1:
            raise ValueError("max_scans must be at least 1")
        return self.get_path(k, l)

    def snapshot(self) -> tuple[list[int], list[tuple[int, int]]]:
        vertices = sorted(self.adj)
        edges = [(k, l) for k in vertices for l in sorted(self.adj[k])]
        return vertices, edges


def seq_apply(graph: SeqGraph, op: str, args: Iterable[int]):
    """Apply one ADT operation to ``graph`` and return its result."""
    if op not in OPS:
        raise ValueError(f"unknown operation {op!r}")
    args = tuple(args)
    expected = 1 if op in VERTEX_OPS else 2
    if len(args) != expected:
        raise ValueError(f"{op} takes {expected} key(s), got {args!r}")
    return getattr(graph, op)(*args)
