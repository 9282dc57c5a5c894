import threading

import pytest

from nbgraph import (
    KEY_MAX,
    KEY_MIN,
    EdgeOutcome,
    KeyDomainError,
    ReclamationError,
    RegistryFullError,
    SelfLoopError,
)

from conftest import build

E = EdgeOutcome
LOOKUPS = ("contains_vertex", "contains_edge", "get_path")


def no_lookup_writes(g):
    stats = g.op_stats()
    return all(stats[op] == (0, 0) for op in LOOKUPS)


# -- vertices


def test_add_vertex_twice(g):
    assert g.add_vertex(5) is True
    assert g.add_vertex(5) is False
    assert g.contains_vertex(5)


def test_remove_vertex(g):
    build(g, [5])
    assert g.remove_vertex(5) is True
    assert g.remove_vertex(5) is False
    assert not g.contains_vertex(5)


def test_remove_missing_vertex(g):
    assert g.remove_vertex(7) is False


def test_readd_after_remove(g):
    build(g, [1])
    g.remove_vertex(1)
    assert g.add_vertex(1)
    assert g.snapshot() == ([1], [])


def test_vertex_list_stays_sorted(g):
    for k in (9, 3, 7, 1, 5):
        g.add_vertex(k)
    assert g.snapshot()[0] == [1, 3, 5, 7, 9]
    g.check_structure()


@pytest.mark.parametrize("bad", [KEY_MIN, KEY_MAX, 2**64, -(2**64)])
def test_sentinel_keys_rejected(g, bad):
    with pytest.raises(KeyDomainError):
        g.add_vertex(bad)


@pytest.mark.parametrize("bad", ["1", 1.0, None])
def test_non_integer_keys_rejected(g, bad):
    with pytest.raises(TypeError):
        g.contains_vertex(bad)


def test_extreme_valid_keys(g):
    assert g.add_vertex(KEY_MIN + 1) and g.add_vertex(KEY_MAX - 1)
    assert g.add_edge(KEY_MAX - 1, KEY_MIN + 1) is E.EDGE_ADDED
    assert g.get_path(KEY_MAX - 1, KEY_MIN + 1) == [KEY_MAX - 1, KEY_MIN + 1]


def test_negative_keys(g):
    build(g, [-5, 0, 5], [(-5, 0), (0, 5)])
    assert g.get_path(-5, 5) == [-5, 0, 5]


def test_marked_vertex_is_absent_and_loc_c_leaves_it(g):
    build(g, [1, 2, 3])
    assert g.inject_vertex_mark(2)
    assert not g.contains_vertex(2)
    assert g.loc_c(2) == (1, 2)
    assert (2, True, []) in g.dump()
    assert no_lookup_writes(g)


def test_loc_v_unlinks_marked_vertices(g):
    build(g, [1, 2, 3, 4])
    g.inject_vertex_mark(2)
    g.inject_vertex_mark(3)
    assert g.loc_v(4) == (1, 4)
    assert [k for k, _, _ in g.dump()] == [1, 4]


def test_loc_v_from_marked_start_falls_back_to_head(g):
    build(g, [1, 2, 3])
    g.inject_vertex_mark(1)
    assert g.loc_v(3, start=1) == (2, 3)
    assert [k for k, _, _ in g.dump()] == [2, 3]


def test_add_vertex_helps_past_marked_twin(g):
    build(g, [1, 2])
    g.inject_vertex_mark(2)
    assert g.add_vertex(2)
    assert g.dump() == [(1, False, []), (2, False, [])]


def test_eager_unlink_detaches_before_return(make):
    g = make(4, eager_unlink=True)
    build(g, [1, 2, 3])
    g.remove_vertex(2)
    assert [k for k, _, _ in g.dump()] == [1, 3]


def test_conv_and_conc_plus(g):
    build(g, [1, 2, 3])
    assert g.conv_plus(3, 1) == (3, 1, True)
    assert g.conc_plus(1, 4) == (None, None, False)
    g.inject_vertex_mark(1)
    # the non-helping variant still sees the marked node physically
    assert g.conc_plus(1, 3)[2]
    assert g.conv_plus(2, 3) == (2, 3, True)
    assert [k for k, _, _ in g.dump()] == [2, 3]


# -- edges


def test_add_edge_outcomes(g):
    build(g, [1, 2])
    assert g.add_edge(1, 2) is E.EDGE_ADDED
    assert g.add_edge(1, 2) is E.EDGE_PRESENT
    assert g.add_edge(1, 9) is E.VERTEX_NOT_PRESENT
    assert g.add_edge(9, 1) is E.VERTEX_NOT_PRESENT


def test_edges_are_directed(g):
    build(g, [1, 2], [(1, 2)])
    assert g.contains_edge(1, 2) is E.EDGE_FOUND
    assert g.contains_edge(2, 1) is E.VERTEX_OR_EDGE_NOT_PRESENT


def test_remove_edge_outcomes(g):
    build(g, [1, 2], [(1, 2)])
    assert g.remove_edge(1, 2) is E.EDGE_REMOVED
    assert g.remove_edge(1, 2) is E.EDGE_NOT_PRESENT
    assert g.remove_edge(1, 3) is E.VERTEX_NOT_PRESENT
    assert g.contains_edge(1, 2) is E.VERTEX_OR_EDGE_NOT_PRESENT


def test_contains_edge_missing_vertex(g):
    build(g, [1])
    assert g.contains_edge(1, 2) is E.VERTEX_NOT_PRESENT


def test_self_loops_rejected(g):
    build(g, [1])
    for op in ("add_edge", "remove_edge", "contains_edge", "get_path"):
        with pytest.raises(SelfLoopError):
            getattr(g, op)(1, 1)


def test_edge_list_sorted(g):
    build(g, [1, 2, 3, 4, 5], [(1, 5), (1, 3), (1, 2), (1, 4)])
    assert g.dump()[0][2] == [(2, False, False), (3, False, False), (4, False, False), (5, False, False)]
    g.check_structure()


def test_remove_vertex_kills_incident_edges(g):
    build(g, [1, 2, 3], [(1, 2), (2, 3), (3, 2)])
    g.remove_vertex(2)
    assert g.get_path(1, 3) is None
    assert g.contains_edge(1, 2) is E.VERTEX_NOT_PRESENT
    assert g.snapshot() == ([1, 3], [])


def test_stale_edge_into_readded_vertex_is_not_reported(g):
    build(g, [1, 2], [(1, 2)])
    g.remove_vertex(2)
    g.add_vertex(2)
    # the edge node into the old v(2) may still be linked; it must not count
    assert g.contains_edge(1, 2) is E.VERTEX_OR_EDGE_NOT_PRESENT
    assert g.get_path(1, 2) is None
    assert g.add_edge(1, 2) is E.EDGE_ADDED
    assert g.contains_edge(1, 2) is E.EDGE_FOUND
    assert g.snapshot() == ([1, 2], [(1, 2)])


def test_marked_edge_is_absent(g):
    build(g, [1, 2], [(1, 2)])
    assert g.inject_edge_mark(1, 2)
    assert g.contains_edge(1, 2) is E.VERTEX_OR_EDGE_NOT_PRESENT
    assert g.dump()[0][2] == [(2, True, False)]
    assert g.add_edge(1, 2) is E.EDGE_ADDED
    assert g.dump()[0][2] == [(2, False, False)]


def test_loc_e_purges_edges_into_removed_vertices(g):
    build(g, [1, 2, 3], [(1, 2), (1, 3)])
    g.inject_vertex_mark(2)
    before = g.ecnt(1)
    assert g.loc_e(1, 3) == (KEY_MIN, 3)
    assert g.ecnt(1) == before + 1
    row = next(r for r in g.counter_audit() if r["key"] == 1)
    assert row["purged"] == 1


def test_ecnt_counts_every_edge_list_change(g):
    build(g, [1, 2, 3])
    assert g.ecnt(1) == 0
    g.add_edge(1, 2)
    g.add_edge(1, 2)  # present: no change
    g.remove_edge(1, 2)
    g.remove_edge(1, 2)  # absent: no change
    g.add_edge(1, 3)
    assert g.ecnt(1) == 3
    for row in g.counter_audit():
        assert row["ecnt"] == row["added"] + row["removed"] + row["purged"]


def test_lookups_never_write(g):
    build(g, [1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)])
    g.inject_vertex_mark(3)
    g.inject_edge_mark(1, 2)
    g.reset_op_stats()
    for k in range(1, 6):
        g.contains_vertex(k)
        for l in range(1, 6):
            if k != l:
                g.contains_edge(k, l)
                g.get_path(k, l)
    assert no_lookup_writes(g)


def test_op_stats_attribute_modifications(g):
    g.reset_op_stats()
    build(g, [1, 2], [(1, 2)])
    stats = g.op_stats()
    assert stats["add_vertex"][0] == 2
    assert stats["add_edge"] == (1, 1)


def test_lookup_step_bound(g):
    keys = list(range(1, 21))
    build(g, keys, [(1, k) for k in keys[1:]])
    n = len(keys)
    for k in keys + [0, 99]:
        g.contains_vertex(k)
        assert g.last_op_steps() <= n + 2
    for l in keys[1:]:
        g.contains_edge(1, l)
        assert g.last_op_steps() <= 2 * (n + 2)


# -- staged interleavings


def _paused(g, op, where, args):
    """Run ``op(*args)`` on a thread that stops at the ``where`` pause point."""
    at = threading.Event()
    go = threading.Event()
    out = {}

    def hook(name):
        if name == where and threading.current_thread() is t and not at.is_set():
            at.set()
            go.wait(10)

    def run():
        out["r"] = getattr(g, op)(*args)
        g.unregister()

    t = threading.Thread(target=run)
    g.pause_hook = hook
    t.start()
    assert at.wait(10), "operation never reached its pause point"
    return t, go, out


def test_add_edge_published_before_removal_is_legal(g):
    # the edge lands before the source's removal takes effect; the removal then kills it
    build(g, [1, 2])
    t, go, out = _paused(g, "add_edge", "add_edge", (1, 2))
    assert g.remove_vertex(1)
    go.set()
    t.join()
    g.pause_hook = None
    assert out["r"] is E.EDGE_ADDED
    assert g.snapshot() == ([2], [])


def test_add_edge_rechecks_endpoints_after_failed_cas(g):
    # the publishing CAS fails, and the retry must notice that v(k) is gone
    build(g, [1, 3, 5])
    t, go, out = _paused(g, "add_edge", "add_edge", (1, 5))
    assert g.add_edge(1, 3) is E.EDGE_ADDED
    assert g.remove_vertex(1)
    assert g.add_vertex(1)
    go.set()
    t.join()
    g.pause_hook = None
    assert out["r"] is E.VERTEX_NOT_PRESENT
    assert g.snapshot() == ([1, 3, 5], [])


def test_add_edge_rechecks_target_after_failed_cas(g):
    build(g, [1, 3, 5])
    t, go, out = _paused(g, "add_edge", "add_edge", (1, 5))
    g.add_edge(1, 3)
    g.remove_vertex(5)
    g.add_vertex(5)
    go.set()
    t.join()
    g.pause_hook = None
    # v(5) was absent for part of the call, so VERTEX_NOT_PRESENT is a legal answer
    assert out["r"] is E.VERTEX_NOT_PRESENT
    assert g.contains_edge(1, 5) is E.VERTEX_OR_EDGE_NOT_PRESENT
    assert g.snapshot() == ([1, 3, 5], [(1, 3)])


def test_concurrent_remove_edge_single_winner(g):
    build(g, [1, 2], [(1, 2)])
    t, go, out = _paused(g, "remove_edge", "remove_edge", (1, 2))
    assert g.remove_edge(1, 2) is E.EDGE_REMOVED
    go.set()
    t.join()
    g.pause_hook = None
    assert out["r"] is E.EDGE_NOT_PRESENT


def test_concurrent_add_vertex_single_winner(g):
    t, go, out = _paused(g, "add_vertex", "add_vertex", (4,))
    assert g.add_vertex(4)
    go.set()
    t.join()
    g.pause_hook = None
    assert out["r"] is False
    assert g.snapshot() == ([4], [])


# -- registration


def test_registry_capacity(make):
    g = make(1)
    g.add_vertex(1)
    err = []

    def other():
        try:
            g.add_vertex(2)
        except RegistryFullError as exc:
            err.append(exc)

    t = threading.Thread(target=other)
    t.start()
    t.join()
    assert err
    g.unregister()
    t = threading.Thread(target=other)
    t.start()
    t.join()
    assert len(err) == 1 and g.contains_vertex(2)


def test_unregister_while_pinned_fails(g):
    with g.pinned():
        with pytest.raises(ReclamationError):
            g.unregister()
    g.unregister()
    assert not g.contains_vertex(1)


def test_thread_exit_releases_slot(make):
    g = make(2)
    for i in range(10):
        t = threading.Thread(target=g.add_vertex, args=(i + 1,))
        t.start()
        t.join()
    assert len(g.snapshot()[0]) == 10
