import csv
import random

import pytest

from nbgraph import engines
from nbgraph.bench import (
    CSV_HEADER,
    HIST_BUCKETS,
    OP_NAMES,
    PRESETS,
    UsageError,
    WorkloadConfig,
    bucket_bounds,
    draw_op,
    emit_csv,
    hist_bucket,
    mix_for,
    op_trace,
    percentile_us,
    prefill,
    replay,
    run_bench,
    splitmix64,
    stream_seed,
)
from nbgraph.cli import main

from conftest import skip_without_native


def test_presets_sum_to_whole():
    for name in PRESETS:
        for gp in (False, True):
            assert sum(mix_for(name, gp)) == 10000


def test_preset_lookup_shares():
    lookups = lambda m: m[2] + m[5]  # noqa: E731
    assert lookups(PRESETS["lookup"]) == 9000
    assert lookups(PRESETS["balanced"]) == 5000
    assert lookups(PRESETS["update"]) == 1000


def test_getpath_variant_takes_ten_points():
    m = mix_for("lookup", True)
    assert m[6] == 1000
    assert m[:6] == (225, 225, 4050, 225, 225, 4050)


def test_percentages():
    p = WorkloadConfig(mix="balanced").percentages()
    assert p["contains_vertex"] == 25.0 and p["get_path"] == 0.0


def test_splitmix_reference_values():
    # reference outputs for seed 1234567 from the published splitmix64 generator
    state = 1234567
    outs = []
    for _ in range(3):
        state, x = splitmix64(state)
        outs.append(x)
    assert outs == [6457827717110365317, 3203168211198807973, 9817491932198370423]


def test_python_stream_matches_compiled_driver():
    skip_without_native()
    from nbgraph import _native

    for seed in (0, 1, 2**64 - 1):
        for tid in (0, 5):
            cfg = WorkloadConfig(seed=seed, mix="update", with_getpath=True)
            want = op_trace(cfg, 500, tid)
            got = _native.draw_ops(seed, tid, 500, list(cfg.weights), cfg.key_lo, cfg.key_hi)
            assert [(OP_NAMES[o], k, l) for o, k, l in got] == want


def test_draws_respect_mix_and_range():
    cfg = WorkloadConfig(mix="lookup", key_lo=10, key_hi=20)
    trace = op_trace(cfg, 5000)
    counts = {n: 0 for n in OP_NAMES}
    for op, k, l in trace:
        counts[op] += 1
        assert 10 <= k <= 20 and 10 <= l <= 20
        if op.endswith("_edge") or op == "get_path":
            assert k != l
    assert counts["get_path"] == 0
    assert 0.86 < (counts["contains_vertex"] + counts["contains_edge"]) / 5000 < 0.94


def test_same_seed_same_sequence():
    cfg = WorkloadConfig(seed=42)
    assert op_trace(cfg, 300) == op_trace(WorkloadConfig(seed=42), 300)
    assert op_trace(cfg, 300) != op_trace(WorkloadConfig(seed=43), 300)
    assert stream_seed(42, 0) != stream_seed(42, 1)


def test_hist_buckets():
    assert hist_bucket(0) == 0 and hist_bucket(1023) == 255
    assert hist_bucket(1024) == 256
    assert hist_bucket(2**60) < HIST_BUCKETS
    rng = random.Random(0)
    for _ in range(2000):
        ns = rng.randrange(1 << rng.randrange(1, 50))
        lo, hi = bucket_bounds(hist_bucket(ns))
        assert lo <= ns < hi
        # relative bucket width stays under 2%
        assert ns < 1024 or (hi - lo) / lo <= 1 / 64


def test_hist_bucket_matches_compiled():
    skip_without_native()
    from nbgraph import _native

    rng = random.Random(1)
    for _ in range(2000):
        ns = rng.randrange(1 << rng.randrange(1, 63))
        assert _native.hist_bucket(ns) == hist_bucket(ns)


def test_percentiles():
    hist = [0] * HIST_BUCKETS
    hist[hist_bucket(2000)] = 99
    hist[hist_bucket(50_000)] = 1
    assert abs(percentile_us(hist, 0.5) - 2.0) < 0.05
    assert abs(percentile_us(hist, 0.99) - 2.0) < 0.05
    assert abs(percentile_us(hist, 1.0) - 50.0) < 1.0
    assert percentile_us([0] * HIST_BUCKETS, 0.5) == 0.0


@pytest.mark.parametrize(
    "kw",
    [
        dict(engine="btree"),
        dict(mix="chaos"),
        dict(threads=0),
        dict(engine="seq", threads=2),
        dict(duration=0),
        dict(key_lo=5, key_hi=5),
        dict(prefill_v=200, key_lo=1, key_hi=100),
        dict(prefill_v=4, prefill_deg=4),
        dict(scan_cap=0),
        dict(threads=9, max_threads=8),
    ],
)
def test_invalid_configs(kw):
    with pytest.raises(UsageError):
        WorkloadConfig(**kw).validate()


def test_env_capacity_override(monkeypatch):
    monkeypatch.setenv("GRAPH_MAX_THREADS", "2")
    with pytest.raises(UsageError):
        WorkloadConfig(threads=3).validate()
    WorkloadConfig(threads=2).validate()
    WorkloadConfig(engine="coarse", threads=3).validate()
    monkeypatch.setenv("GRAPH_MAX_THREADS", "lots")
    with pytest.raises(UsageError):
        WorkloadConfig().validate()


def test_single_thread_engines_agree(eng):
    cfg = WorkloadConfig(key_lo=1, key_hi=40, prefill_v=20, prefill_deg=3, mix="update", with_getpath=True, seed=9)
    results = []
    for name in ("lockfree", "coarse", "seq"):
        g = eng[name](4) if name == "lockfree" else eng[name]()
        prefill(g, cfg)
        results.append((replay(g, cfg, 3000), g.snapshot()))
    assert results[0] == results[1] == results[2]


def test_prefill_shape(eng):
    cfg = WorkloadConfig(prefill_v=50, prefill_deg=4, key_hi=1000)
    g = eng["seq"]()
    prefill(g, cfg)
    vertices, edges = g.snapshot()
    assert len(vertices) == 50 and len(edges) == 200


@pytest.mark.parametrize("engine,threads", [("lockfree", 2), ("coarse", 2), ("seq", 1)])
def test_run_bench(backend, engine, threads):
    cfg = WorkloadConfig(engine=engine, threads=threads, duration=0.2, prefill_v=100, prefill_deg=4,
                         key_hi=2000, with_getpath=True, backend=backend)
    r = run_bench(cfg)
    assert r.backend == backend
    assert r.total_ops == sum(r.per_op.values()) > 0
    assert r.per_op["get_path"] > 0
    assert 0.15 < r.duration_s < 2.0
    assert abs(r.ops_per_sec - r.total_ops / r.duration_s) < 1e-6
    assert 0 < r.p50_us <= r.p99_us
    assert r.mix == "balanced+getpath"


def test_scan_cap_one_can_be_inconclusive(backend):
    cfg = WorkloadConfig(threads=3, duration=0.3, mix="update", with_getpath=True, scan_cap=1,
                         prefill_v=50, prefill_deg=6, key_hi=60, backend=backend)
    r = run_bench(cfg)
    assert 0 <= r.getpath_inconclusive <= r.per_op["get_path"]


def _result(engine="lockfree"):
    cfg = WorkloadConfig(engine=engine, duration=0.05, prefill_v=10, prefill_deg=2, key_hi=100)
    return run_bench(cfg)


def test_emit_csv(tmp_path):
    path = tmp_path / "out.csv"
    a, b = _result(), _result("coarse")
    emit_csv([a, b], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0] == ",".join(CSV_HEADER)
    row = next(csv.DictReader(lines))
    assert row["engine"] == "lockfree"
    for col in ("ops_per_sec", "p50_us", "p99_us", "duration_s"):
        assert len(row[col].split(".")[1]) <= 2
    emit_csv([a], path, append=True)
    assert len(path.read_text().splitlines()) == 4
    emit_csv([a], path)
    assert len(path.read_text().splitlines()) == 2


def test_emit_csv_needs_results(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "x.csv")


# -- command line


def test_cli_bench_writes_csv(tmp_path, capsys):
    path = tmp_path / "b.csv"
    argv = ["bench", "--engine", "coarse", "--threads", "2", "--mix", "lookup", "--with-getpath",
            "--duration", "0.1", "--seed", "7", "--prefill-v", "50", "--prefill-deg", "3",
            "--csv", str(path), "--scan-cap", "3"]
    assert main(argv) == 0
    assert main(argv + ["--append"]) == 0
    rows = list(csv.DictReader(path.read_text().splitlines()))
    assert len(rows) == 2 and rows[0]["mix"] == "lookup+getpath" and rows[0]["threads"] == "2"
    assert "ops/s" in capsys.readouterr().out


def test_cli_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--engine", "seq", "--threads", "4", "--duration", "0.1"])
    assert exc.value.code == 2
    assert "exactly one thread" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["bench", "--mix", "chaos"])


def test_cli_unwritable_csv(tmp_path, capsys):
    argv = ["bench", "--duration", "0.05", "--prefill-v", "10", "--prefill-deg", "2",
            "--csv", str(tmp_path / "missing" / "x.csv")]
    assert main(argv) == 1
    assert "cannot write" in capsys.readouterr().err


def test_cli_record_and_check(tmp_path, capsys):
    hist = tmp_path / "h.txt"
    assert main(["record", "--threads", "3", "--ops", "12", "--seed", "5", "--out", str(hist)]) == 0
    assert main(["check", str(hist)]) == 0
    assert capsys.readouterr().out.startswith("linearizable")


def test_cli_check_reports_violation(tmp_path, capsys):
    from nbgraph import dump_history

    from corpus import FIG4

    hist = tmp_path / "fig4.txt"
    with open(hist, "w") as fp:
        dump_history(FIG4, fp)
    assert main(["check", str(hist)]) == 1
    out = capsys.readouterr().out
    assert out.startswith("not linearizable") and "add_edge(1,2)" in out
