import sys
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nbgraph.atomics import AtomicCounter, AtomicRef, cas_link, is_marked, mark_ref, unmark_ref

from conftest import skip_without_native


def test_mark_is_a_flag_on_the_word():
    target = object()
    w = (target, False)
    assert not is_marked(w)
    m = mark_ref(w)
    assert is_marked(m) and m[0] is target
    assert unmark_ref(m) == w


def test_cas_succeeds_only_on_exact_word():
    a, b = object(), object()
    cell = AtomicRef(a)
    assert not cas_link(cell, (b, False), (b, False))
    assert cas_link(cell, (a, False), (b, False))
    assert cell.word == (b, False)
    assert cas_link(cell, (b, False), (b, True))
    # the mark is terminal: a clean expectation no longer matches
    assert not cas_link(cell, (b, False), (a, False))
    assert cell.word == (b, True)


def test_cas_rejects_marked_expectation():
    cell = AtomicRef(None)
    with pytest.raises(AssertionError):
        cas_link(cell, (None, True), (None, False))


def _race(n_threads, rounds, body):
    old = sys.getswitchinterval()
    sys.setswitchinterval(1e-6)
    barrier = threading.Barrier(n_threads)

    def run(i):
        barrier.wait()
        body(i)

    ts = [threading.Thread(target=run, args=(i,)) for i in range(n_threads)]
    try:
        for t in ts:
            t.start()
        for t in ts:
            t.join()
    finally:
        sys.setswitchinterval(old)


def test_cas_race_has_one_winner_per_cell():
    start = object()
    cells = [AtomicRef(start) for _ in range(500)]
    wins = [0] * 4

    def body(i):
        me = object()
        for c in cells:
            if cas_link(c, (start, False), (me, False)):
                wins[i] += 1

    _race(4, 500, body)
    assert sum(wins) == len(cells)


def test_faa_is_atomic_under_contention():
    c = AtomicCounter()
    olds = [[] for _ in range(4)]

    def body(i):
        for _ in range(2000):
            olds[i].append(c.faa(1))

    _race(4, 2000, body)
    assert c.value == 8000
    # every pre-value is handed out exactly once
    assert sorted(x for o in olds for x in o) == list(range(8000))


def test_counter_cas():
    c = AtomicCounter(3)
    assert not c.cas(2, 9)
    assert c.cas(3, 9)
    assert c.load() == 9


@given(st.integers(min_value=0, max_value=(1 << 61) - 1))
def test_native_tag_bits(n):
    skip_without_native()
    from nbgraph import _native

    w = n << 3  # aligned pointer: low three bits clear
    assert not _native.is_marked(w)
    m = _native.mark_ref(w)
    assert m == w | 1 and _native.is_marked(m)
    assert _native.unmark_ref(m) == w
    assert _native.mark_ref(m) == m


def test_native_cas_race_one_winner_per_cell():
    skip_without_native()
    from nbgraph import _native

    assert _native.cas_race(8, 20000) == 20000


def test_native_faa_no_lost_updates():
    skip_without_native()
    from nbgraph import _native

    assert _native.faa_stress(8, 100000) == 800000
