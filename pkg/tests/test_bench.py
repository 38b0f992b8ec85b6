import json
import math

import pytest

from spheresep import bench
from spheresep.bench import RunConfig, RunRecord


@pytest.fixture(scope="module")
def iqp10():
    return bench.run_experiment(RunConfig("iqp", L=4, realizations=10, seed=1))


def test_iqp_rows_and_aggregate(iqp10, tmp_path):
    assert len(iqp10) == 10 and not any(r.failed for r in iqp10)
    text = bench.emit_report(iqp10, "csv", tmp_path / "r.csv")
    rows = bench.read_csv_report(tmp_path / "r.csv")
    assert len(rows) == 11 and text.count("\n") == 12
    agg = rows[-1]
    assert agg["row"] == "aggregate" and agg["status"] == "ok=10 failed=0"
    assert float(agg["ssa"]) <= float(agg["sidewise"])


def test_per_row_bound_ordering(iqp10):
    for r in iqp10:
        assert r.ssa <= r.theorem2
        assert r.planar <= r.theorem2
        assert r.N == 16 and r.L == 4
        assert r.fallbacks is not None and r.ssa_retries is not None


def test_aggregate_by_hand(iqp10):
    agg = bench.aggregate(iqp10)
    for col in ("ssa", "theorem2", "explicit"):
        vals = [getattr(r, col) for r in iqp10]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
        assert agg[col] == pytest.approx(mean, rel=1e-12)
        assert agg[f"{col}_se"] == pytest.approx(math.sqrt(var / len(vals)), rel=1e-9)
    assert agg["n_ok"] == 10 and agg["n_failed"] == 0
    assert agg["external_cost"] is None


def test_repeat_runs_byte_identical(tmp_path):
    cfg = dict(family="sycamore", L=4, realizations=3, seed=5, params={"q": 1})
    a = bench.emit_report(bench.run_experiment(RunConfig(**cfg)), "csv")
    b = bench.emit_report(bench.run_experiment(RunConfig(**cfg)), "csv")
    assert a == b


def test_workers_match_serial():
    cfg = dict(family="iqp", L=3, realizations=4, seed=2, bounds=("theorem2", "ssa"))
    serial = bench.run_experiment(RunConfig(**cfg))
    par = bench.run_experiment(RunConfig(workers=2, **cfg))
    assert bench.emit_report(serial) == bench.emit_report(par)


def test_realization_seeds_distinct():
    seeds = {bench.realization_seed(0, i) for i in range(100)}
    assert len(seeds) == 100
    assert bench.realization_seed(3, 7) == bench.realization_seed(3, 7)


def test_execute_iqp_l3():
    recs = bench.run_experiment(RunConfig("iqp", L=3, realizations=2, seed=0, execute=True,
                                          bounds=("theorem2",)))
    for r in recs:
        assert not r.failed, r.error
        # no measurement: the expectation of the identity is 1
        assert abs(r.value - 1) <= 1e-8 and abs(r.oracle - 1) <= 1e-8


def test_csv_line_count():
    recs = [RunRecord(index=i, seed=i, ssa=float(i)) for i in range(3)]
    text = bench.emit_report(recs, "csv")
    lines = text.splitlines()
    assert len(lines) == 5
    assert lines[0].split(",") == list(bench.CSV_COLUMNS)
    assert "wall_time" not in lines[0]
    assert "wall_time" in bench.emit_report(recs, "csv", timing=True).splitlines()[0]


def test_json_roundtrip(iqp10, tmp_path):
    bench.emit_report(iqp10, "json", tmp_path / "r.json")
    rows = json.loads((tmp_path / "r.json").read_text())
    assert len(rows) == 11
    for r, d in zip(iqp10, rows):
        assert d["row"] == "realization"
        assert d["ssa"] == r.ssa and d["seed"] == r.seed
        assert "wall_time" not in d
    assert rows[-1]["row"] == "aggregate" and rows[-1]["n_ok"] == 10


def test_failed_row_recorded(tmp_path, monkeypatch):
    def boom(config, rng):
        raise RuntimeError("bad generator")

    monkeypatch.setattr(bench, "make_circuit", boom)
    recs = bench.run_experiment(RunConfig("iqp", L=4, realizations=2))
    assert all(r.status == "failed" and "bad generator" in r.error for r in recs)
    text = bench.emit_report(recs, "csv")
    assert text.splitlines()[-1].startswith("aggregate,,,ok=0 failed=2")


def test_timeout_row():
    recs = bench.run_experiment(RunConfig("iqp", L=8, realizations=1, timeout=1e-3))
    assert recs[0].status == "timeout"


def test_missing_file_circuit_fails_row(tmp_path):
    recs = bench.run_experiment(RunConfig("file", circuit_path=str(tmp_path / "nope.json"), L=None))
    assert recs[0].failed and "nope.json" in recs[0].error


def test_file_family(tmp_path):
    from spheresep import generators as gen
    c = gen.gen_iqp(gen.IqpParams(4, seed=3))
    c.to_json(tmp_path / "c.json")
    rec = bench.run_experiment(RunConfig("file", circuit_path=str(tmp_path / "c.json"), L=None))[0]
    assert not rec.failed and rec.L == 4 and rec.sum_f == c.profile().sum_f


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig("nope")
    with pytest.raises(ValueError):
        RunConfig("iqp", bounds=("ssa", "magic"))
    with pytest.raises(ValueError):
        RunConfig("iqp", realizations=0)
    with pytest.raises(ValueError):
        RunConfig("iqp", L=6, execute=True)
    with pytest.raises(ValueError):
        RunConfig("file")
    assert RunConfig("iqp", bounds=("ssa", "theorem1")).bounds == ("theorem1", "ssa")


def test_unwritable_output(iqp10):
    with pytest.raises(OSError):
        bench.emit_report(iqp10, "csv", "/nonexistent-dir/x.csv")


def test_gate_free_realization_is_not_a_failure():
    recs = bench.run_experiment(RunConfig("sycamore", L=3, params={"q": 1, "p_idle": 1.0},
                                          execute=True))
    r = recs[0]
    assert not r.failed, r.error
    assert r.sum_f == 0 and r.theorem2 is None and r.ssa is None
    assert r.explicit == pytest.approx(math.log2(8 * 9) + 2)
    assert r.value == pytest.approx(1.0, abs=1e-12)
