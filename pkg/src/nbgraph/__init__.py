"""Lock-free concurrent directed graph with linearizable reachability queries.

The engine comes in two builds with the same API: a compiled core and a
pure-Python fallback. ``NBGRAPH_BACKEND=python`` or ``=native`` forces one;
by default the compiled core is used when it imports.
"""

from __future__ import annotations

import os

from . import graph as _pygraph
from .baseline import CoarseGraph as PyCoarseGraph
from .baseline import SequentialGraph as PySequentialGraph
from .checker import Status, Verdict, check_linearizable
from .history import HistoryEvent, dump_history, load_history, record
from .oracle import SeqGraph, seq_apply
from .outcomes import (
    INCONCLUSIVE,
    KEY_MAX,
    KEY_MIN,
    EdgeOutcome,
    GraphError,
    KeyDomainError,
    ReclamationError,
    RegistryFullError,
    SelfLoopError,
    UseAfterFreeError,
)

PyLockFreeGraph = _pygraph.LockFreeGraph

_choice = os.environ.get("NBGRAPH_BACKEND", "auto").lower()
if _choice not in ("auto", "native", "python"):
    raise ImportError(f"NBGRAPH_BACKEND must be auto, native or python, not {_choice!r}")

NativeLockFreeGraph = NativeCoarseGraph = NativeSequentialGraph = None
NATIVE_ERROR: str | None = None
if _choice != "python":
    try:
        from ._native import CoarseGraph as NativeCoarseGraph
        from ._native import LockFreeGraph as NativeLockFreeGraph
        from ._native import SequentialGraph as NativeSequentialGraph
    except ImportError as exc:
        if _choice == "native":
            raise
        NATIVE_ERROR = str(exc)

if NativeLockFreeGraph is not None:
    BACKEND = "native"
    LockFreeGraph = NativeLockFreeGraph
    CoarseGraph = NativeCoarseGraph
    SequentialGraph = NativeSequentialGraph
else:
    BACKEND = "python"
    LockFreeGraph = PyLockFreeGraph
    CoarseGraph = PyCoarseGraph
    SequentialGraph = PySequentialGraph


def engines(backend: str | None = None) -> dict:
    """Engine classes for ``backend`` ("native" or "python"; default: the active one)."""
    backend = backend or BACKEND
    if backend == "python":
        return {"lockfree": PyLockFreeGraph, "coarse": PyCoarseGraph, "seq": PySequentialGraph}
    if NativeLockFreeGraph is None:
        raise ImportError(f"native core unavailable: {NATIVE_ERROR}")
    return {"lockfree": NativeLockFreeGraph, "coarse": NativeCoarseGraph, "seq": NativeSequentialGraph}


__all__ = [
    "BACKEND",
    "CoarseGraph",
    "EdgeOutcome",
    "GraphError",
    "HistoryEvent",
    "INCONCLUSIVE",
    "KEY_MAX",
    "KEY_MIN",
    "KeyDomainError",
    "LockFreeGraph",
    "ReclamationError",
    "RegistryFullError",
    "SelfLoopError",
    "SeqGraph",
    "SequentialGraph",
    "Status",
    "UseAfterFreeError",
    "Verdict",
    "check_linearizable",
    "dump_history",
    "engines",
    "load_history",
    "record",
    "seq_apply",
]
