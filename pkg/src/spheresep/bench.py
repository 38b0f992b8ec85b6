"""Experiment harness: generate circuits, plan contractions, compare bounds.

Every realization gets its own seed derived from ``(config.seed, index)``;
the circuit and the separator hierarchy draw from independent streams of
that seed, so records do not depend on worker scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import signal
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import circuit as circ
from . import generators as gen
from . import separator as sep
from . import tncore

ALL_BOUNDS = ("theorem1", "theorem2", "planar", "sidewise", "explicit", "ssa")
FAMILIES = ("iqp", "sycamore", "random3d", "file")
LOG2_COLUMNS = ALL_BOUNDS + ("external_cost",)
DEFAULT_TIMEOUT = 300.0
EXEC_RTOL = 1e-8
EXEC_MEMORY_CAP = 2**25

CSV_COLUMNS = ("row", "index", "seed", "status", "L", "N", "sum_f", "F", "n_tensors", "k",
               *ALL_BOUNDS, "external_cost", "ssa_retries", "fallbacks", "value", "oracle",
               "error", *(f"{c}_se" for c in LOG2_COLUMNS))


class RealizationTimeout(RuntimeError):
    pass


@dataclass
class RunConfig:
    family: str = "iqp"
    params: dict = field(default_factory=dict)
    L: int | None = 4
    realizations: int = 1
    seed: int = 0
    bounds: tuple = ALL_BOUNDS
    execute: bool = False
    out: str | None = None
    format: str = "csv"
    circuit_path: str | None = None
    workers: int = 1
    timeout: float | None = DEFAULT_TIMEOUT
    timing: bool = False
    statevector_cap: int = circ.DEFAULT_STATEVECTOR_CAP
    leaf_size: int = 8
    exec_memory_cap: int = EXEC_MEMORY_CAP
    exec_plan_tries: int = 8

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        unknown = set(self.bounds) - set(ALL_BOUNDS)
        if unknown:
            raise ValueError(f"unknown bounds {sorted(unknown)}")
        self.bounds = tuple(b for b in ALL_BOUNDS if b in set(self.bounds))
        if self.family == "file":
            if not self.circuit_path:
                raise ValueError("family 'file' needs circuit_path")
        elif self.L is None or self.L < 2:
            raise ValueError("generated families need L >= 2")
        if self.execute and self.family != "file" and self.L * self.L > self.statevector_cap:
            raise ValueError(f"execute needs N <= {self.statevector_cap}, got N = {self.L * self.L}")


@dataclass
class RunRecord:
    index: int
    seed: int
    status: str = "ok"
    L: int | None = None
    N: int | None = None
    sum_f: int | None = None
    F: int | None = None
    n_tensors: int | None = None
    k: int | None = None
    theorem1: float | None = None
    theorem2: float | None = None
    planar: float | None = None
    sidewise: float | None = None
    explicit: float | None = None
    ssa: float | None = None
    external_cost: float | None = None
    ssa_retries: int | None = None
    fallbacks: int | None = None
    value: float | None = None
    oracle: float | None = None
    error: str = ""
    wall_time: float | None = None

    @property
    def failed(self) -> bool:
        return self.status != "ok"


def realization_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def make_circuit(config: RunConfig, rng) -> circ.Circuit:
    p = dict(config.params)
    if config.family == "file":
        return circ.Circuit.from_json(config.circuit_path)
    if config.family == "iqp":
        return gen.gen_iqp(gen.IqpParams(config.L, seed=rng, **p))
    if config.family == "sycamore":
        if "pattern" in p:
            p["pattern"] = tuple(p["pattern"])
        return gen.gen_sycamore(gen.SycamoreParams(config.L, seed=rng, **p))
    return gen.gen_random3d(gen.Random3dParams(config.L, seed=rng, **p))


def _on_alarm(signum, frame):
    raise RealizationTimeout("realization exceeded the time limit")


def _run_one(config: RunConfig, index: int) -> RunRecord:
    rs = realization_seed(config.seed, index)
    rec = RunRecord(index=index, seed=rs)
    t0 = time.perf_counter()
    use_alarm = bool(config.timeout) and hasattr(signal, "SIGALRM")
    if use_alarm:
        old = signal.signal(signal.SIGALRM, _on_alarm)
        signal.setitimer(signal.ITIMER_REAL, config.timeout)
    try:
        _fill(rec, config, rs)
    except RealizationTimeout as exc:
        rec.status, rec.error = "timeout", str(exc)
    except Exception as exc:  # per-row failure, the run goes on
        rec.status, rec.error = "failed", f"{type(exc).__name__}: {exc}"
    finally:
        if use_alarm:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, old)
    rec.wall_time = time.perf_counter() - t0
    return rec


def _fill(rec: RunRecord, config: RunConfig, rs: int):
    c = make_circuit(config, np.random.default_rng([rs, 0]))
    c.validate()
    prof = c.profile()
    rec.L = circ.hypercubic_side(c)
    rec.N, rec.sum_f, rec.F = c.N, prof.sum_f, prof.F
    want = set(config.bounds)
    if prof.sum_f == 0:
        # no two-qubit gates: only the baselines are defined, the network is a scalar
        want -= {"theorem1", "theorem2", "planar", "ssa"}
    if "theorem2" in want:
        rec.theorem2 = circ.theorem2_bound(prof, c.d, c.l, c.r)
    if "planar" in want:
        rec.planar = circ.theorem2_planar_bound(prof, c.d, c.l, c.r)
    if want & {"sidewise", "explicit"}:
        base = circ.baseline_bounds(c, sidewise="sidewise" in want)
        rec.sidewise = base.get("sidewise")
        rec.explicit = base["explicit"]
    if not (want & {"ssa", "theorem1"}) and not config.execute:
        return
    net, emb, kb = circ.circuit_to_network(c)
    rec.n_tensors, rec.k = len(net.tensors), kb
    if "theorem1" in want:
        M = max(net.entry_count(t) for t in net.tensors)
        rec.theorem1 = tncore.theorem1_bound(len(net.tensors), max(M, 2), kb, c.d)
    if config.execute and not net.tensors:
        _check_value(rec, complex(net.prefactor), c, config)
        return
    if "ssa" in want or config.execute:
        stats = sep.BuildStats()
        params = sep.SeparatorParams(k=kb, d=c.d, leaf_size=config.leaf_size)
        root = sep.build_hierarchy(net, emb, params, np.random.default_rng([rs, 1]), stats=stats)
        rec.ssa_retries, rec.fallbacks = stats.circle_attempts, stats.fallbacks
        if "ssa" in want:
            rec.ssa = tncore.hierarchy_cost(root, net).log2_scalar_ops
            if rec.theorem2 is not None and rec.ssa > rec.theorem2:
                raise RuntimeError(f"ssa cost {rec.ssa} exceeds the theorem2 bound {rec.theorem2}")
        if config.execute:
            xroot = sep.execution_hierarchy(net, emb, params, np.random.default_rng([rs, 2]),
                                            tries=config.exec_plan_tries,
                                            target=config.exec_memory_cap // 64)
            val = complex(tncore.execute_plan(net, xroot, memory_cap=config.exec_memory_cap))
            _check_value(rec, val, c, config)


def _check_value(rec: RunRecord, val: complex, c, config: RunConfig):
    ora = circ.statevector_expectation(c, cap=config.statevector_cap)
    rec.value, rec.oracle = val.real, float(ora)
    if abs(val - ora) > EXEC_RTOL * max(abs(ora), 1.0):
        raise RuntimeError(f"contraction {val} disagrees with oracle {ora}")


def run_experiment(config: RunConfig) -> list:
    """One record per realization, ordered by index."""
    idx = range(config.realizations)
    if config.workers > 1 and config.realizations > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            return list(pool.map(_run_one, [config] * config.realizations, idx))
    return [_run_one(config, i) for i in idx]


def aggregate(records) -> dict:
    """Mean and standard error (sample std / sqrt(n)) of each log2 column over ok rows."""
    ok = [r for r in records if not r.failed]
    out = {}
    for col in LOG2_COLUMNS:
        vals = [getattr(r, col) for r in ok if getattr(r, col) is not None]
        if not vals:
            out[col] = out[f"{col}_se"] = None
            continue
        arr = np.array(vals, dtype=float)
        out[col] = float(arr.mean())
        out[f"{col}_se"] = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    out["n_ok"] = len(ok)
    out["n_failed"] = len(records) - len(ok)
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(records, fmt: str = "csv", path=None, timing: bool = False) -> str:
    """Write records plus an aggregate row as CSV or JSON; returns the text.

    Wall time is only written when ``timing`` is set, so reports of the
    same configuration are byte-identical.
    """
    if not records:
        raise ValueError("no records to report")
    agg = aggregate(records)
    if fmt == "json":
        rows = []
        for r in records:
            d = asdict(r)
            if not timing:
                d.pop("wall_time")
            rows.append({"row": "realization", **d})
        rows.append({"row": "aggregate", **agg})
        text = json.dumps(rows, indent=1) + "\n"
    elif fmt == "csv":
        cols = CSV_COLUMNS + (("wall_time",) if timing else ())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            d = asdict(r)
            w.writerow([_fmt("realization" if c == "row" else d.get(c)) for c in cols])
        arow = {"row": "aggregate", "status": f"ok={agg['n_ok']} failed={agg['n_failed']}", **agg}
        w.writerow([_fmt(arow.get(c)) for c in cols])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def read_csv_report(path):
    """Parse a CSV report back into dicts (empty cells become None)."""
    with open(path, newline="") as fh:
        return [{k: (v if v != "" else None) for k, v in row.items()} for row in csv.DictReader(fh)]


def record_fields():
    return [f.name for f in fields(RunRecord)]
