"""Blocking baselines: a sequential adjacency list and a coarse-locked wrapper.

The sequential graph uses the same sorted linked-list layout as the lock-free
engine (including lazy purging of edges into removed vertices) so that
throughput comparisons measure synchronisation, not data-structure choice.
"""

from __future__ import annotations

import threading
from collections import deque
from typing import Optional

from .outcomes import KEY_MAX, KEY_MIN, EdgeOutcome, check_key, check_pair

VNP = EdgeOutcome.VERTEX_NOT_PRESENT


class _SV:
    __slots__ = ("key", "nxt", "eh", "dead", "stamp")

    def __init__(self, key: int, nxt: Optional[_SV]) -> None:
        self.key = key
        self.nxt = nxt
        self.eh = _SE(KEY_MIN, None, None)
        self.dead = False
        self.stamp = 0


class _SE:
    __slots__ = ("key", "target", "nxt")

    def __init__(self, key: int, target: Optional[_SV], nxt: Optional[_SE]) -> None:
        self.key = key
        self.target = target
        self.nxt = nxt


class SequentialGraph:
    """Single-threaded adjacency list. Not safe for concurrent use."""

    backend = "python"

    def __init__(self) -> None:
        self.vt = _SV(KEY_MAX, None)
        self.vh = _SV(KEY_MIN, self.vt)
        self._stamp = 0

    def _find(self, k: int) -> tuple[_SV, _SV]:
        pv = self.vh
        cv = pv.nxt
        while cv.key < k:
            pv = cv
            cv = cv.nxt
        return pv, cv

    def _vertex(self, k: int) -> Optional[_SV]:
        cv = self._find(k)[1]
        return cv if cv.key == k else None

    def _find_edge(self, u: _SV, l: int) -> tuple[_SE, Optional[_SE]]:
        # drops edges into removed vertices on the way, like the lock-free locate
        pe = u.eh
        ce = pe.nxt
        while ce is not None:
            if ce.target.dead:
                pe.nxt = ce.nxt
                ce = ce.nxt
                continue
            if ce.key >= l:
                break
            pe = ce
            ce = ce.nxt
        return pe, ce

    def add_vertex(self, k: int) -> bool:
        check_key(k)
        pv, cv = self._find(k)
        if cv.key == k:
            return False
        pv.nxt = _SV(k, cv)
        return True

    def remove_vertex(self, k: int) -> bool:
        check_key(k)
        pv, cv = self._find(k)
        if cv.key != k:
            return False
        pv.nxt = cv.nxt
        cv.dead = True
        return True

    def contains_vertex(self, k: int) -> bool:
        check_key(k)
        return self._find(k)[1].key == k

    def _pair(self, k: int, l: int):
        check_pair(k, l)
        u = self._vertex(k)
        if u is None:
            return None, None
        v = self._vertex(l)
        if v is None:
            return None, None
        return u, v

    def add_edge(self, k: int, l: int) -> EdgeOutcome:
        u, v = self._pair(k, l)
        if u is None:
            return VNP
        pe, ce = self._find_edge(u, l)
        if ce is not None and ce.key == l:
            return EdgeOutcome.EDGE_PRESENT
        pe.nxt = _SE(l, v, ce)
        return EdgeOutcome.EDGE_ADDED

    def remove_edge(self, k: int, l: int) -> EdgeOutcome:
        u, v = self._pair(k, l)
        if u is None:
            return VNP
        pe, ce = self._find_edge(u, l)
        if ce is None or ce.key != l:
            return EdgeOutcome.EDGE_NOT_PRESENT
        pe.nxt = ce.nxt
        return EdgeOutcome.EDGE_REMOVED

    def contains_edge(self, k: int, l: int) -> EdgeOutcome:
        u, v = self._pair(k, l)
        if u is None:
            return VNP
        ce = u.eh.nxt
        while ce is not None and ce.key < l:
            ce = ce.nxt
        if ce is not None and ce.key == l and ce.target is v:
            return EdgeOutcome.EDGE_FOUND
        return EdgeOutcome.VERTEX_OR_EDGE_NOT_PRESENT

    def get_path(self, k: int, l: int) -> Optional[list[int]]:
        u, v = self._pair(k, l)
        if u is None:
            return None
        self._stamp += 1
        stamp = self._stamp
        u.stamp = stamp
        parent: dict[int, Optional[_SV]] = {id(u): None}
        que = deque((u,))
        while que:
            x = que.popleft()
            ce = x.eh.nxt
            while ce is not None:
                y = ce.target
                if not y.dead:
                    if y is v:
                        path = [v.key]
                        while x is not None:
                            path.append(x.key)
                            x = parent[id(x)]
                        path.reverse()
                        return path
                    if y.stamp != stamp:
                        y.stamp = stamp
                        parent[id(y)] = x
                        que.append(y)
                ce = ce.nxt
        return None

    def get_path_bounded(self, k: int, l: int, max_scans: int):
        if max_scans < 1:
            raise ValueError("max_scans must be at least 1")
        return self.get_path(k, l)

    def snapshot(self) -> tuple[list[int], list[tuple[int, int]]]:
        vertices, edges = [], []
        cv = self.vh.nxt
        while cv is not self.vt:
            vertices.append(cv.key)
            ce = cv.eh.nxt
            while ce is not None:
                if not ce.target.dead:
                    edges.append((cv.key, ce.key))
                ce = ce.nxt
            cv = cv.nxt
        return vertices, edges


class CoarseGraph:
    """The sequential graph behind one global lock."""

    backend = "python"

    def __init__(self) -> None:
        self._g = SequentialGraph()
        self._lock = threading.Lock()

    def add_vertex(self, k: int) -> bool:
        with self._lock:
            return self._g.add_vertex(k)

    def remove_vertex(self, k: int) -> bool:
        with self._lock:
            return self._g.remove_vertex(k)

    def contains_vertex(self, k: int) -> bool:
        with self._lock:
            return self._g.contains_vertex(k)

    def add_edge(self, k: int, l: int) -> EdgeOutcome:
        with self._lock:
            return self._g.add_edge(k, l)

    def remove_edge(self, k: int, l: int) -> EdgeOutcome:
        with self._lock:
            return self._g.remove_edge(k, l)

    def contains_edge(self, k: int, l: int) -> EdgeOutcome:
        with self._lock:
            return self._g.contains_edge(k, l)

    def get_path(self, k: int, l: int) -> Optional[list[int]]:
        with self._lock:
            return self._g.get_path(k, l)

    def get_path_bounded(self, k: int, l: int, max_scans: int):
        with self._lock:
            return self._g.get_path_bounded(k, l, max_scans)

    def snapshot(self) -> tuple[list[int], list[tuple[int, int]]]:
        with self._lock:
            return self._g.snapshot()
