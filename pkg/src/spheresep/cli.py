"""Command-line interface: ``spheresep {gen,plan,exec,bench}``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench, circuit, generators, separator, tncore

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

# bench flags that a TOML config may set; command-line values take precedence
BENCH_KEYS = ("family", "L", "realizations", "seed", "bounds", "execute", "out", "format",
              "circuit", "workers", "timeout", "timing", "leaf_size")


def _add_family_params(p, family):
    if family == "iqp":
        p.add_argument("--T", type=int, help="time steps (default L^2)")
        p.add_argument("--gamma", type=float, help="pair density parameter (default 3)")
    elif family == "sycamore":
        p.add_argument("--q", type=int, help="number of periods (default 5)")
        p.add_argument("--p-idle", dest="p_idle", type=float, help="idle probability per period")
        p.add_argument("--gates-per-coupling", dest="gates_per_coupling", type=int)
    elif family == "random3d":
        p.add_argument("--alpha", type=float, help="T = round(alpha * L)")
        p.add_argument("--S-cavity", dest="S_cavity", type=int, help="cavity edge length")
        p.add_argument("--sigma", type=float)
        p.add_argument("--lam", type=float, help="Poisson mean of cavity attempts")


FAMILY_PARAM_NAMES = ("T", "gamma", "q", "p_idle", "gates_per_coupling", "alpha", "S_cavity",
                      "sigma", "lam")


def _family_params(args):
    return {k: getattr(args, k) for k in FAMILY_PARAM_NAMES
            if getattr(args, k, None) is not None}


def build_parser():
    parser = argparse.ArgumentParser(prog="spheresep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a circuit JSON file")
    gsub = g.add_subparsers(dest="family", required=True)
    for fam in ("iqp", "sycamore", "random3d"):
        p = gsub.add_parser(fam)
        p.add_argument("--L", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default stdout)")
        _add_family_params(p, fam)

    p = sub.add_parser("plan", help="build a separator hierarchy and report costs")
    p.add_argument("circuit", help="circuit JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--leaf-size", dest="leaf_size", type=int, default=8)
    p.add_argument("--out", help="write the hierarchy JSON here")

    p = sub.add_parser("exec", help="contract a circuit network and compare with the statevector")
    p.add_argument("circuit", help="circuit JSON file")
    p.add_argument("--measurement", help="measurement JSON file (default |0><0| everywhere)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-oracle", dest="oracle", action="store_false")

    b = sub.add_parser("bench", help="run an experiment sweep")
    b.add_argument("--config", help="TOML file with the same keys as the flags")
    b.add_argument("--family", choices=bench.FAMILIES)
    b.add_argument("--circuit", help="circuit JSON for --family file")
    b.add_argument("--L", type=int)
    b.add_argument("--realizations", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--bounds", help="comma-separated subset of " + ",".join(bench.ALL_BOUNDS))
    b.add_argument("--execute", action="store_true", default=None)
    b.add_argument("--out")
    b.add_argument("--format", choices=("csv", "json"))
    b.add_argument("--workers", type=int)
    b.add_argument("--timeout", type=float, help="seconds per realization (0 disables)")
    b.add_argument("--timing", action="store_true", default=None, help="add a wall_time column")
    b.add_argument("--leaf-size", dest="leaf_size", type=int)
    for fam in ("iqp", "sycamore", "random3d"):
        _add_family_params(b, fam)
    return parser


def bench_config(args) -> bench.RunConfig:
    """Merge TOML config and flags (flags win) into a :class:`bench.RunConfig`."""
    conf = {}
    params = {}
    if args.config:
        with open(args.config, "rb") as fh:
            doc = tomllib.load(fh)
        params.update(doc.pop("params", {}))
        unknown = set(doc) - set(BENCH_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        conf.update(doc)
    for key in BENCH_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            conf[key] = val
    params.update(_family_params(args))
    if isinstance(conf.get("bounds"), str):
        conf["bounds"] = tuple(b.strip() for b in conf["bounds"].split(",") if b.strip())
    if "circuit" in conf:
        conf["circuit_path"] = conf.pop("circuit")
    if conf.get("timeout") == 0:
        conf["timeout"] = None
    return bench.RunConfig(params=params, **conf)


def cmd_gen(args):
    params = _family_params(args)
    if args.family == "iqp":
        c = generators.gen_iqp(generators.IqpParams(args.L, seed=args.seed, **params))
    elif args.family == "sycamore":
        c = generators.gen_sycamore(generators.SycamoreParams(args.L, seed=args.seed, **params))
    else:
        c = generators.gen_random3d(generators.Random3dParams(args.L, seed=args.seed, **params))
    text = c.to_json(args.out)
    if args.out is None:
        print(text)
    return 0


def cmd_plan(args):
    c = circuit.Circuit.from_json(args.circuit)
    net, emb, kb = circuit.circuit_to_network(c)
    stats = separator.BuildStats()
    params = separator.SeparatorParams(k=kb, d=c.d, leaf_size=args.leaf_size)
    root = separator.build_hierarchy(net, emb, params, np.random.default_rng(args.seed), stats=stats)
    ledger = tncore.hierarchy_cost(root, net)
    if args.out:
        root.to_json(args.out)
    prof = c.profile()
    summary = {"n_tensors": len(net.tensors), "k": kb, "depth": root.depth(),
               "ssa_log2": ledger.log2_scalar_ops, "exact_ops": str(ledger.exact_ops),
               "separator_calls": stats.separator_calls, "fallbacks": stats.fallbacks}
    if prof.sum_f > 0:
        summary["theorem2_log2"] = circuit.theorem2_bound(prof, c.d, c.l, c.r)
    summary.update({f"{k}_log2": v for k, v in circuit.baseline_bounds(
        c, sidewise=circuit.hypercubic_side(c) is not None).items()})
    print(json.dumps(summary, indent=1))
    return 0


def cmd_exec(args):
    c = circuit.Circuit.from_json(args.circuit)
    m = circuit.Measurement.from_json(args.measurement) if args.measurement else None
    net, emb, kb = circuit.circuit_to_network(c, m)
    params = separator.SeparatorParams(k=kb, d=c.d)
    root = separator.execution_hierarchy(net, emb, params, np.random.default_rng(args.seed))
    value = complex(tncore.execute_plan(net, root))
    out = {"value_real": value.real, "value_imag": value.imag}
    status = 0
    if args.oracle:
        ora = circuit.statevector_expectation(c, m)
        out["oracle"] = ora
        out["agree"] = abs(value - ora) <= bench.EXEC_RTOL * max(abs(ora), 1.0)
        status = 0 if out["agree"] else 1
    print(json.dumps(out, indent=1))
    return status


def cmd_bench(args):
    config = bench_config(args)
    records = bench.run_experiment(config)
    text = bench.emit_report(records, config.format, config.out, timing=config.timing)
    if config.out is None:
        sys.stdout.write(text)
    failed = sum(r.failed for r in records)
    if failed:
        print(f"{failed} of {len(records)} realizations failed", file=sys.stderr)
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"gen": cmd_gen, "plan": cmd_plan, "exec": cmd_exec, "bench": cmd_bench}[args.command]
    try:
        return handler(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
