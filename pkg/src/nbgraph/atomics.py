"""Tagged links and counters for the pure-Python engine.

A link word is a ``(target, marked)`` tuple. Tuples are immutable, so a plain
attribute read of a cell always yields a consistent pair. Compare-and-swap and
fetch-and-add are emulated with a short critical section on a striped lock,
which plays the role of the hardware's locked bus cycle.
"""

from __future__ import annotations

import threading
from typing import Any

_STRIPES = 64
_LOCKS = tuple(threading.Lock() for _ in range(_STRIPES))

NIL_WORD = (None, False)


def _lock_for(obj: object) -> threading.Lock:
    return _LOCKS[(id(obj) >> 4) % _STRIPES]


def mark_ref(word: tuple) -> tuple:
    return (word[0], True)


def unmark_ref(word: tuple) -> tuple:
    return (word[0], False)


def is_marked(word: tuple) -> bool:
    return word[1]


class AtomicRef:
    """A single-word ``(target, mark)`` cell."""

    __slots__ = ("word",)

    def __init__(self, target: Any = None, marked: bool = False) -> None:
        self.word = (target, marked)

    def load(self) -> tuple:
        return self.word

    def store(self, word: tuple) -> None:
        self.word = word

    def __repr__(self) -> str:
        target, marked = self.word
        key = getattr(target, "key", target)
        return f"AtomicRef({key!r}{', marked' if marked else ''})"


def cas_link(cell: AtomicRef, expected: tuple, desired: tuple) -> bool:
    # A marked word is terminal; nobody may expect one.
    assert not expected[1], "CAS against a marked link"
    with _lock_for(cell):
        cur = cell.word
        if cur[0] is expected[0] and cur[1] is expected[1]:
            cell.word = desired
            return True
        return False


class AtomicCounter:
    __slots__ = ("value",)

    def __init__(self, value: int = 0) -> None:
        self.value = value

    def load(self) -> int:
        return self.value

    def faa(self, delta: int = 1) -> int:
        """Fetch-and-add; returns the value before the addition."""
        with _lock_for(self):
            old = self.value
            self.value = old + delta
            return old

    def cas(self, expected: int, desired: int) -> bool:
        with _lock_for(self):
            if self.value == expected:
                self.value = desired
                return True
            return False

    def __repr__(self) -> str:
        return f"AtomicCounter({self.value})"


def faa(counter: AtomicCounter, delta: int = 1) -> int:
    return counter.faa(delta)
