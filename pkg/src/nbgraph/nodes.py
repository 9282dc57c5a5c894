"""Vertex and edge records of the pure-Python engine."""

from __future__ import annotations

from .atomics import AtomicCounter, AtomicRef
from .outcomes import KEY_MAX, KEY_MIN, UseAfterFreeError

# Incoming-edge reference word: (count << 1) | dead. The dead bit is set once the
# vertex's own edge list is freed; the node is retired when no ENode points at it.
REF_DEAD = 1
REF_ONE = 2


class VNode:
    __slots__ = (
        "key",
        "vnxt",
        "eh",
        "ecnt",
        "visited",
        "refs",
        "n_add",
        "n_rem",
        "n_purge",
        "retired",
        "stage",
    )

    def __init__(self, key: int, n_threads: int, edge_tail: ENode | None) -> None:
        self.key = key
        self.vnxt = AtomicRef()
        self.ecnt = AtomicCounter()
        self.visited = [0] * n_threads
        self.refs = AtomicCounter()
        # instrumentation: ecnt increments split by the site that made them
        self.n_add = AtomicCounter()
        self.n_rem = AtomicCounter()
        self.n_purge = AtomicCounter()
        self.retired = False
        # reclamation stage: 0 live or unlinked, 1 edge list freed, 2 node retired
        self.stage = 0
        self.eh = ENode(KEY_MIN, self, edge_tail) if edge_tail is not None else None

    def __repr__(self) -> str:
        return f"VNode({self.key})"

    @property
    def marked(self) -> bool:
        return self.vnxt.word[1]


class ENode:
    __slots__ = ("key", "ptv", "enxt", "counted", "retired")

    def __init__(self, key: int, ptv: VNode | None, nxt: ENode | None = None) -> None:
        self.key = key
        self.ptv = ptv
        self.enxt = AtomicRef(nxt)
        # set once an ecnt increment has been made on this edge's behalf
        self.counted = False
        self.retired = False

    def __repr__(self) -> str:
        return f"ENode({self.key})"


def make_edge_tail(vertex_tail: VNode) -> ENode:
    return ENode(KEY_MAX, vertex_tail, None)


def _poisoned(name: str):
    def get(self):
        raise UseAfterFreeError(f"read of {name} on a reclaimed {type(self).__mro__[1].__name__}")

    def put(self, value):
        raise UseAfterFreeError(f"write of {name} on a reclaimed {type(self).__mro__[1].__name__}")

    return property(get, put)


class _FreedVNode(VNode):
    __slots__ = ()
    key = _poisoned("key")
    vnxt = _poisoned("vnxt")
    eh = _poisoned("eh")
    ecnt = _poisoned("ecnt")
    visited = _poisoned("visited")

    def __repr__(self) -> str:
        return "VNode(<freed>)"


class _FreedENode(ENode):
    __slots__ = ()
    key = _poisoned("key")
    ptv = _poisoned("ptv")
    enxt = _poisoned("enxt")

    def __repr__(self) -> str:
        return "ENode(<freed>)"


def poison(node: VNode | ENode) -> None:
    if type(node) is VNode:
        node.__class__ = _FreedVNode
    elif type(node) is ENode:
        node.__class__ = _FreedENode
    else:
        raise UseAfterFreeError(f"double free of {node!r}")


def is_freed(node: object) -> bool:
    return isinstance(node, (_FreedVNode, _FreedENode))
