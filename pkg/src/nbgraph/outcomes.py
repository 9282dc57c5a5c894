"""Result types, key domain and errors shared by every engine."""

from __future__ import annotations

import enum

KEY_MIN = -(2**63)
KEY_MAX = 2**63 - 1


class EdgeOutcome(enum.Enum):
    """Indicative results of the edge operations.

    ``EDGE_FOUND`` is what ``contains_edge`` reports; the ADT calls the same
    case "EDGE PRESENT", so :meth:`parse` accepts either spelling for it.
    """

    VERTEX_NOT_PRESENT = "VERTEX NOT PRESENT"
    EDGE_PRESENT = "EDGE PRESENT"
    EDGE_ADDED = "EDGE ADDED"
    EDGE_NOT_PRESENT = "EDGE NOT PRESENT"
    EDGE_REMOVED = "EDGE REMOVED"
    EDGE_FOUND = "EDGE FOUND"
    VERTEX_OR_EDGE_NOT_PRESENT = "VERTEX OR EDGE NOT PRESENT"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> EdgeOutcome:
        text = text.strip()
        if text in cls.__members__:
            return cls[text]
        return cls(text.replace("_", " "))


# Integer codes used by the native core; order is part of the C ABI.
OUTCOME_CODES = (
    EdgeOutcome.VERTEX_NOT_PRESENT,
    EdgeOutcome.EDGE_PRESENT,
    EdgeOutcome.EDGE_ADDED,
    EdgeOutcome.EDGE_NOT_PRESENT,
    EdgeOutcome.EDGE_REMOVED,
    EdgeOutcome.EDGE_FOUND,
    EdgeOutcome.VERTEX_OR_EDGE_NOT_PRESENT,
)


class _Inconclusive:
    __slots__ = ()

    def __repr__(self) -> str:
        return "INCONCLUSIVE"

    def __reduce__(self):
        return "INCONCLUSIVE"


INCONCLUSIVE = _Inconclusive()
"""Returned by ``get_path_bounded`` when the scan budget ran out."""


class GraphError(Exception):
    pass


class KeyDomainError(GraphError, ValueError):
    """Key outside the open interval (KEY_MIN, KEY_MAX)."""


class SelfLoopError(GraphError, ValueError):
    """Edge operations and reachability queries need two distinct keys."""


class RegistryFullError(GraphError, RuntimeError):
    """More threads registered than the graph was sized for."""


class UseAfterFreeError(GraphError, RuntimeError):
    """A reclaimed node was dereferenced."""


class ReclamationError(GraphError, RuntimeError):
    """Reclamation bookkeeping was violated (double retire, retire while linked)."""


def check_key(k: int) -> int:
    if not isinstance(k, int):
        raise TypeError(f"keys are integers, got {type(k).__name__}")
    if not KEY_MIN < k < KEY_MAX:
        raise KeyDomainError(f"key {k} outside ({KEY_MIN}, {KEY_MAX})")
    return k


def check_pair(k: int, l: int) -> None:
    check_key(k)
    check_key(l)
    if k == l:
        raise SelfLoopError(f"self-loop ({k}, {l}) is not supported")
