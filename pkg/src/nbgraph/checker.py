"""Linearizability checking for graph histories.

Wing & Gong search over real-time-respecting orders, with Lowe's memoisation
of (linearised set, abstract state) pairs. The abstract state is the pair of
frozensets (vertices, edges); responses are judged against it, so a result is
accepted whenever it is one the sequential graph could legitimately give.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .history import HistoryEvent
from .outcomes import INCONCLUSIVE, EdgeOutcome

State = tuple[frozenset, frozenset]
EMPTY: State = (frozenset(), frozenset())

_E = EdgeOutcome


class Status(enum.Enum):
    LINEARIZABLE = "linearizable"
    NOT_LINEARIZABLE = "not linearizable"
    BUDGET_EXCEEDED = "budget exceeded"


@dataclass
class Verdict:
    status: Status
    witness: Optional[list[HistoryEvent]] = None
    failing_prefix: Optional[list[HistoryEvent]] = None
    states_explored: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def linearizable(self) -> Optional[bool]:
        if self.status is Status.BUDGET_EXCEEDED:
            return None
        return self.status is Status.LINEARIZABLE

    def __bool__(self) -> bool:
        return self.status is Status.LINEARIZABLE


@lru_cache(maxsize=65536)
def _reachable(state: State, k: int, l: int) -> bool:
    vertices, edges = state
    if k not in vertices or l not in vertices:
        return False
    seen = {k}
    que = deque((k,))
    while que:
        x = que.popleft()
        for a, b in edges:
            if a == x and b not in seen:
                if b == l:
                    return True
                seen.add(b)
                que.append(b)
    return False


def _valid_path(state: State, k: int, l: int, path) -> bool:
    vertices, edges = state
    if not path or path[0] != k or path[-1] != l or len(path) < 2:
        return False
    if any(x not in vertices for x in path):
        return False
    return all((a, b) in edges for a, b in zip(path, path[1:]))


def step(state: State, op: str, args: Sequence[int], result) -> Optional[State]:
    """Successor state if ``result`` is a legal response in ``state``, else None."""
    vertices, edges = state
    if op == "add_vertex":
        (k,) = args
        if result:
            return None if k in vertices else (vertices | {k}, edges)
        return state if k in vertices else None
    if op == "remove_vertex":
        (k,) = args
        if result:
            if k not in vertices:
                return None
            return (vertices - {k}, frozenset(e for e in edges if k not in e))
        return state if k not in vertices else None
    if op == "contains_vertex":
        (k,) = args
        return state if bool(result) == (k in vertices) else None

    k, l = args
    both = k in vertices and l in vertices
    present = both and (k, l) in edges
    if op == "get_path":
        if result is None:
            return None if _reachable(state, k, l) else state
        return state if _valid_path(state, k, l, result) else None
    if result is _E.VERTEX_NOT_PRESENT:
        return None if both else state
    if op == "add_edge":
        if result is _E.EDGE_PRESENT:
            return state if present else None
        if result is _E.EDGE_ADDED:
            return (vertices, edges | {(k, l)}) if both and not present else None
    elif op == "remove_edge":
        if result is _E.EDGE_NOT_PRESENT:
            return state if both and not present else None
        if result is _E.EDGE_REMOVED:
            return (vertices, edges - {(k, l)}) if present else None
    elif op == "contains_edge":
        if result in (_E.EDGE_FOUND, _E.EDGE_PRESENT):
            return state if present else None
        if result is _E.VERTEX_OR_EDGE_NOT_PRESENT:
            return None if present else state
    return None


def _search(events: list[HistoryEvent], initial: State, budget: int, optional: frozenset = frozenset()):
    """DFS for a legal order. Events whose index is in ``optional`` were still
    pending at a cut: they may take effect (with their recorded result) or not."""
    n = len(events)
    if n == 0:
        return Status.LINEARIZABLE, [], 0
    order = sorted(range(n), key=lambda i: events[i].t_inv)
    inv = [events[i].t_inv for i in order]
    inf = float("inf")
    res = [inf if order[i] in optional else events[order[i]].t_res for i in range(n)]
    goal = 0
    for i in range(n):
        if order[i] not in optional:
            goal |= 1 << i
    seen: set = set()
    explored = 0
    # explicit DFS: frames of (mask, state, candidate iterator)
    path: list[int] = []
    stack = [(0, initial, None)]
    while stack:
        mask, state, it = stack[-1]
        if mask & goal == goal:
            return Status.LINEARIZABLE, [events[order[i]] for i in path], explored
        if it is None:
            # candidates: pending events invoked before the earliest pending response
            pending = [i for i in range(n) if not mask >> i & 1]
            horizon = min(res[i] for i in pending)
            it = iter([i for i in pending if inv[i] <= horizon])
            stack[-1] = (mask, state, it)
        advanced = False
        for i in it:
            ev = events[order[i]]
            nxt = step(state, ev.op, ev.args, ev.result)
            if nxt is None:
                continue
            key = (mask | 1 << i, nxt)
            if key in seen:
                continue
            seen.add(key)
            explored += 1
            if explored > budget:
                return Status.BUDGET_EXCEEDED, None, explored
            path.append(i)
            stack.append((mask | 1 << i, nxt, None))
            advanced = True
            break
        if not advanced:
            stack.pop()
            if path:
                path.pop()
    return Status.NOT_LINEARIZABLE, None, explored


def check_linearizable(
    events: Iterable[HistoryEvent],
    initial: Optional[State] = None,
    *,
    budget: int = 2_000_000,
    find_prefix: bool = True,
) -> Verdict:
    """Decide whether ``events`` is linearizable with respect to the sequential graph.

    INCONCLUSIVE reachability results are not part of the ADT and are dropped.
    """
    events = [e for e in events if e.result is not INCONCLUSIVE]
    if initial is None:
        initial = EMPTY
    else:
        initial = (frozenset(initial[0]), frozenset(map(tuple, initial[1])))
    status, witness, explored = _search(events, initial, budget)
    verdict = Verdict(status, witness, None, explored)
    if status is Status.NOT_LINEARIZABLE and find_prefix:
        verdict.failing_prefix = _minimal_prefix(events, initial, budget)
    return verdict


def _minimal_prefix(events: list[HistoryEvent], initial: State, budget: int):
    """Shortest failing cut, as the events invoked by the m-th response.

    Events still running at the cut are optional, which makes cuts closed
    under linearizability and lets us bisect.
    """
    cuts = sorted(e.t_res for e in events)

    def fails(m: int):
        t = cuts[m - 1]
        sub = [e for e in events if e.t_inv <= t]
        optional = frozenset(i for i, e in enumerate(sub) if e.t_res > t)
        status, _, _ = _search(sub, initial, budget, optional)
        return status is Status.NOT_LINEARIZABLE, sub

    lo, hi = 1, len(cuts)
    while lo < hi:
        mid = (lo + hi) // 2
        if fails(mid)[0]:
            hi = mid
        else:
            lo = mid + 1
    return fails(lo)[1]


def respects_real_time(witness: Sequence[HistoryEvent]) -> bool:
    """No event in the order precedes (in real time) an event placed before it."""
    for i, a in enumerate(witness):
        for b in witness[i + 1 :]:
            if b.t_res < a.t_inv:
                return False
    return True


def replays(witness: Sequence[HistoryEvent], initial: State = EMPTY) -> bool:
    state = initial
    for ev in witness:
        state = step(state, ev.op, ev.args, ev.result)
        if state is None:
            return False
    return True
