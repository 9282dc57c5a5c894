import pytest

from nbgraph import check_linearizable, record
from nbgraph.history import well_formed


def overlapping_pairs(events):
    n = 0
    for i, a in enumerate(events):
        for b in events[i + 1 :]:
            if b.t_inv < a.t_res and a.tid != b.tid:
                n += 1
    return n


def test_record_respects_bound(make):
    events = record(make(4), threads=2, ops_per_thread=20, keys=range(1, 6), seed=1)
    assert len(events) <= 40
    assert well_formed(events)


def test_single_thread_history_is_already_linear(make):
    events = record(make(4), threads=1, ops_per_thread=30, seed=2)
    assert all(a.t_res <= b.t_inv for a, b in zip(events, events[1:]))
    v = check_linearizable(events)
    assert v.linearizable and v.witness == events


def test_stalled_threads_still_well_formed(make):
    total = 0
    for seed in range(10):
        events = record(make(4), threads=3, ops_per_thread=15, seed=seed, stall=0.5)
        assert well_formed(events)
        total += overlapping_pairs(events)
        assert check_linearizable(events).linearizable
    assert total > 0


@pytest.mark.parametrize("threads", [2, 3, 4])
def test_recorded_histories_linearize(make, threads):
    for seed in range(40):
        g = make(threads + 1)
        events = record(g, threads=threads, ops_per_thread=(10, 20), seed=seed, stall=0.2 if seed % 2 else 0.0)
        v = check_linearizable(events)
        assert v.linearizable, [str(e) for e in v.failing_prefix]


def test_coarse_histories_linearize(eng):
    for seed in range(20):
        events = record(eng["coarse"](), threads=3, ops_per_thread=15, seed=seed)
        assert check_linearizable(events).linearizable


def test_record_prefill_runs_first(make):
    events = record(make(4), threads=2, ops_per_thread=5, seed=3, prefill=6)
    pre = [e for e in events if e.tid == 2]
    assert len(pre) <= 6
    assert well_formed(events)
