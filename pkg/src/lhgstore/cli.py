"""Command-line driver: ``lhgstore {bench,analytics,microbench,sweep-t,verify,generate}``.

Exit status is 0 on success, 1 for a bad configuration, 2 for an I/O
failure and 3 when a verification or cross-T digest check fails.  The
default seed and output directory can be set with ``LHGSTORE_SEED`` and
``LHGSTORE_OUT_DIR``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import analytics
from .baselines import STORE_KINDS, make_store
from .edge_index import DEFAULT_THRESHOLD
from .verify import minimal_failing_prefix, verification_ops
from .workload import (
    EdgeListError,
    SyntheticGraphSpec,
    WorkloadSpec,
    build_workload,
    crossover_microbench,
    generate_skewed_graph,
    load_edge_list,
    measure_workload,
    run_reads_parallel,
    sweep_T,
    write_edge_list,
)

log = logging.getLogger("lhgstore")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_MISMATCH = 0, 1, 2, 3
SEED_ENV = "LHGSTORE_SEED"
OUT_DIR_ENV = "LHGSTORE_OUT_DIR"
METRIC_FIELDS = ("store_kind", "workload", "T", "ops_per_second", "p50_ns", "p99_ns", "memory_bytes", "wall_time_s", "digest")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; that code is reserved for I/O here
    def error(self, message: str) -> None:
        raise ConfigError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list must be non-empty")
    return vals


def parse_gen(text: str, seed: int) -> SyntheticGraphSpec:
    """``n=1000,m=5000[,exp=2.0][,seed=1][,weighted=1]`` to a generator spec."""
    fields: dict[str, str] = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        if not sep:
            raise ConfigError(f"--gen: expected key=value, got {part!r}")
        fields[key.strip()] = val.strip()
    unknown = set(fields) - {"n", "m", "exp", "seed", "weighted"}
    if unknown:
        raise ConfigError(f"--gen: unknown keys {sorted(unknown)}")
    if "n" not in fields or "m" not in fields:
        raise ConfigError("--gen needs both n= and m=")
    try:
        spec = SyntheticGraphSpec(
            vertex_count=int(fields["n"]),
            edge_count=int(fields["m"]),
            skew_exponent=float(fields.get("exp", 2.0)),
            seed=int(fields.get("seed", seed)),
            weighted=fields.get("weighted", "0") not in ("0", "false", ""),
        )
    except ValueError as exc:
        raise ConfigError(f"--gen: {exc}") from None
    if spec.edge_count > spec.vertex_count * max(spec.vertex_count - 1, 0):
        raise ConfigError(f"--gen: {spec.edge_count} edges do not fit in a simple graph on {spec.vertex_count} vertices")
    return spec


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lhgstore", description="Benchmark and verify learned graph stores.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser, graph: bool = True, store: bool = True) -> None:
        sp.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
        sp.add_argument("--out", type=Path, default=None, help=f"output file (default under ${OUT_DIR_ENV} or .)")
        if store:
            sp.add_argument("--store", choices=STORE_KINDS, default="lhg")
            sp.add_argument("--T", type=int, default=DEFAULT_THRESHOLD, help="degree threshold for lhg")
        if graph:
            src = sp.add_mutually_exclusive_group()
            src.add_argument("--input", type=Path, help="edge-list file, 'u v [w]' per line")
            src.add_argument("--gen", help="synthetic graph, e.g. n=1000,m=5000,exp=2.0")
            sp.add_argument("--undirected", action="store_true", help="input edges are inserted in both directions")

    b = sub.add_parser("bench", help="run workload A, B or C")
    common(b)
    b.add_argument("--workload", choices=("A", "B", "C"), default="A")
    b.add_argument("--ops", type=int, default=None, help="operation count (default from the edge count)")
    b.add_argument("--read-target", choices=("existing-edge", "mixed"), default="existing-edge")
    b.add_argument("--delete-fraction", type=float, default=0.0)
    b.add_argument("--repetitions", type=int, default=3)
    b.add_argument("--warmup", type=int, default=1)
    b.add_argument("--parallelism", type=int, default=1, help="reader threads, workload C only")

    a = sub.add_parser("analytics", help="run one graph kernel")
    common(a)
    a.add_argument("--algorithm", required=True, help=f"one of {', '.join(analytics.ALGORITHMS)}")
    a.add_argument("--source", type=int, default=None, help="source vertex for bfs and sssp")
    a.add_argument("--view", choices=("directed", "undirected"), default="directed", help="traversal direction for bfs and sssp")
    a.add_argument("--iterations", type=int, default=20)
    a.add_argument("--damping", type=float, default=0.85)
    a.add_argument("--timing-out", type=Path, default=None, help="timing JSON (default next to --out)")

    m = sub.add_parser("microbench", help="array vs learned index latency by size")
    common(m, graph=False, store=False)
    m.add_argument("--sizes", type=_int_list, default=[1, 8, 64, 512, 4096])
    m.add_argument("--trials", type=int, default=2000)
    m.add_argument("--rounds", type=int, default=5)

    s = sub.add_parser("sweep-t", help="rebuild the lhg store for each degree threshold")
    common(s, store=False)
    s.add_argument("--t", dest="t_values", type=_int_list, default=[1, 2, 10, 60, 150])
    s.add_argument("--workload", choices=("A", "B"), default="A")
    s.add_argument("--ops", type=int, default=None)
    s.add_argument("--algorithms", default="", help="comma-separated kernels to time per T")
    s.add_argument("--source", type=int, default=None)
    s.add_argument("--repetitions", type=int, default=1)
    s.add_argument("--warmup", type=int, default=0)

    v = sub.add_parser("verify", help="replay random operations against the oracle")
    common(v, graph=False)
    v.add_argument("--ops", type=int, default=100_000)
    v.add_argument("--vertex-space", type=int, default=2000)
    v.add_argument("--fault-at", type=int, default=None, help=argparse.SUPPRESS)

    g = sub.add_parser("generate", help="write a synthetic skewed graph")
    common(g, graph=False, store=False)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--exponent", type=float, default=2.0)
    g.add_argument("--weighted", action="store_true")
    return p


# -- configuration checks ----------------------------------------------------


def _resolve_out(args: argparse.Namespace, default_name: str) -> Path:
    out = args.out if args.out is not None else _out_dir() / default_name
    parent = out.parent if str(out.parent) else Path(".")
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    return out


def _check_graph_source(args: argparse.Namespace, what: str) -> SyntheticGraphSpec | None:
    if args.input is None and args.gen is None:
        raise ConfigError(f"{what} needs a graph: pass --input PATH or --gen n=..,m=..")
    if args.input is not None:
        if not args.input.is_file():
            raise OSError(f"input file not found: {args.input}")
        return None
    return parse_gen(args.gen, args.seed)


def _load_graph(args: argparse.Namespace, gen: SyntheticGraphSpec | None) -> list:
    if gen is not None:
        edges = generate_skewed_graph(gen)
        if args.undirected:
            edges = edges + [(v, u, w) for u, v, w in edges]
        return edges
    return load_edge_list(args.input, directed=not args.undirected)


def _positive(name: str, value: int | None, minimum: int = 1) -> None:
    if value is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")


def _write_json(path: Path, doc: dict[str, Any]) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, rows: list[dict[str, Any]], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


# -- commands ----------------------------------------------------------------


def cmd_bench(args: argparse.Namespace) -> int:
    if args.workload == "C" and args.input is None and args.gen is None:
        raise ConfigError("workload C reads a preloaded graph: pass --input PATH or --gen n=..,m=..")
    gen = _check_graph_source(args, "bench")
    _positive("--T", args.T)
    _positive("--ops", args.ops, 0)
    _positive("--repetitions", args.repetitions)
    _positive("--warmup", args.warmup, 0)
    _positive("--parallelism", args.parallelism)
    if args.parallelism > 1 and args.workload != "C":
        raise ConfigError("--parallelism > 1 is only allowed for read-only workload C")
    try:
        spec = WorkloadSpec(
            kind=args.workload,
            op_count=args.ops,
            read_target=args.read_target,
            seed=args.seed,
            T=args.T,
            store_kind=args.store,
            delete_fraction=args.delete_fraction,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _resolve_out(args, f"bench-{args.store}-{args.workload}.json")

    edges = _load_graph(args, gen)
    try:
        workload = build_workload(edges, spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    def factory():
        return make_store(args.store, args.T)

    if args.parallelism > 1:
        store = factory()
        store.load(workload.preload)
        metrics = run_reads_parallel(store, workload, args.parallelism)
    else:
        metrics, _ = measure_workload(factory, workload, repetitions=args.repetitions, warmup=args.warmup)
    doc = {
        "store_kind": args.store,
        "workload": args.workload,
        "T": args.T,
        "seed": args.seed,
        "read_target": args.read_target,
        "parallelism": args.parallelism,
        **metrics.to_dict(),
    }
    _write_json(out, doc)
    print(json.dumps({k: doc[k] for k in METRIC_FIELDS}, sort_keys=True))
    return EXIT_OK


def cmd_analytics(args: argparse.Namespace) -> int:
    if args.algorithm not in analytics.ALGORITHMS:
        raise ConfigError(f"unknown algorithm {args.algorithm!r}; valid: {', '.join(analytics.ALGORITHMS)}")
    gen = _check_graph_source(args, "analytics")
    _positive("--T", args.T)
    if args.algorithm in ("bfs", "sssp") and args.source is None:
        raise ConfigError(f"{args.algorithm} needs --source")
    if args.algorithm == "pagerank":
        _positive("--iterations", args.iterations)
        if not 0.0 < args.damping < 1.0:
            raise ConfigError(f"--damping must be in (0, 1), got {args.damping}")
    out = _resolve_out(args, f"{args.algorithm}-{args.store}.tsv")
    timing_out = args.timing_out or out.with_suffix(".timing.json")
    if not timing_out.parent.is_dir():
        raise OSError(f"output directory does not exist: {timing_out.parent}")

    store = make_store(args.store, args.T)
    t0 = time.perf_counter()
    store.load(_load_graph(args, gen))
    load_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        result = analytics.run(
            args.algorithm,
            store,
            source=args.source,
            directed=args.view == "directed",
            iterations=args.iterations,
            damping=args.damping,
        )
    except analytics.UnknownVertexError:
        raise ConfigError(f"source vertex {args.source} is not in the graph") from None
    run_s = time.perf_counter() - t0
    analytics.write_results(out, result)
    digest = analytics.result_digest(result)
    _write_json(
        timing_out,
        {
            "algorithm": args.algorithm,
            "store_kind": args.store,
            "T": args.T,
            "vertices": len(result),
            "load_s": load_s,
            "run_s": run_s,
            "digest": digest,
        },
    )
    print(json.dumps({"algorithm": args.algorithm, "store_kind": args.store, "run_s": run_s, "digest": digest}))
    return EXIT_OK


def cmd_microbench(args: argparse.Namespace) -> int:
    for n in args.sizes:
        _positive("--sizes entries", n)
    _positive("--trials", args.trials)
    _positive("--rounds", args.rounds)
    out = _resolve_out(args, "microbench.csv")
    rows = crossover_microbench(args.sizes, trials=args.trials, seed=args.seed, rounds=args.rounds)
    _write_csv(out, rows, ("n", "structure", "op", "mean_ns"))
    for r in rows:
        print(f"{r['n']:>8} {r['structure']:<8} {r['op']:<7} {r['mean_ns']:10.1f} ns")
    return EXIT_OK


def cmd_sweep_t(args: argparse.Namespace) -> int:
    gen = _check_graph_source(args, "sweep-t")
    for t in args.t_values:
        _positive("--t entries", t)
    _positive("--ops", args.ops, 0)
    _positive("--repetitions", args.repetitions)
    _positive("--warmup", args.warmup, 0)
    algos = [a for a in args.algorithms.split(",") if a]
    bad = [a for a in algos if a not in analytics.ALGORITHMS]
    if bad:
        raise ConfigError(f"unknown algorithm(s) {bad}; valid: {', '.join(analytics.ALGORITHMS)}")
    if any(a in ("bfs", "sssp") for a in algos) and args.source is None:
        raise ConfigError("bfs and sssp need --source")
    out = _resolve_out(args, "sweep-t.csv")

    edges = _load_graph(args, gen)
    spec = WorkloadSpec(kind=args.workload, op_count=args.ops, seed=args.seed)
    try:
        rows = sweep_T(
            edges,
            args.t_values,
            spec,
            algorithms=algos,
            repetitions=args.repetitions,
            warmup=args.warmup,
            analytics_options={"source": args.source},
        )
    except analytics.UnknownVertexError:
        raise ConfigError(f"source vertex {args.source} is not in the graph") from None
    columns = ["T", "workload", *METRIC_FIELDS[3:], "correctness_digest", *(f"{a}_s" for a in algos)]
    _write_csv(out, rows, columns)
    for r in rows:
        print(f"T={r['T']:<5} {r['ops_per_second']:12.0f} ops/s {r['memory_bytes']:>12} B  {r['correctness_digest']}")
    if len({r["correctness_digest"] for r in rows}) != 1:
        print("error: correctness digests differ across T", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def _fault_hook(at: int):
    # negative control: change the store behind the oracle's back
    def hook(i: int, store) -> None:
        if i != at:
            return
        first = next(iter(store.edges()), None)
        if first is not None:
            store.delete_edge(first[0], first[1])
        else:
            store.insert_edge(0, 1, 1.0)

    return hook


def cmd_verify(args: argparse.Namespace) -> int:
    if args.store == "oracle":
        raise ConfigError("verify compares a store against the oracle; pick --store lhg or lg")
    _positive("--T", args.T)
    _positive("--ops", args.ops, 0)
    _positive("--vertex-space", args.vertex_space)
    if args.out is not None and not (args.out.parent if str(args.out.parent) else Path(".")).is_dir():
        raise OSError(f"output directory does not exist: {args.out.parent}")
    ops = verification_ops(args.ops, args.seed, vertex_space=args.vertex_space)
    hook = _fault_hook(args.fault_at) if args.fault_at is not None else None
    t0 = time.perf_counter()
    bad = minimal_failing_prefix(lambda: make_store(args.store, args.T), ops, hook=hook)
    elapsed = time.perf_counter() - t0
    report = {"store_kind": args.store, "T": args.T, "ops": args.ops, "seed": args.seed, "ok": bad is None}
    if bad is not None:
        report.update(prefix_length=bad.prefix_length, operation=str(bad.op),
                      expected=repr(bad.expected), observed=repr(bad.observed))
    if args.out is not None:
        _write_json(args.out, report)
    if bad is not None:
        print(f"FAIL {args.store}: {bad}", file=sys.stderr)
        print(f"minimal failing prefix: {bad.prefix_length} ops", file=sys.stderr)
        return EXIT_MISMATCH
    print(f"OK {args.store}: {args.ops} ops match the oracle ({elapsed:.1f}s)")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    _positive("--n", args.n)
    _positive("--m", args.m, 0)
    try:
        spec = SyntheticGraphSpec(args.n, args.m, args.exponent, args.seed, args.weighted)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if spec.edge_count > spec.vertex_count * (spec.vertex_count - 1):
        raise ConfigError(f"{args.m} edges do not fit in a simple graph on {args.n} vertices")
    out = _resolve_out(args, f"graph-n{args.n}-m{args.m}-s{args.seed}.txt")
    edges = generate_skewed_graph(spec)
    write_edge_list(out, edges, weighted=args.weighted)
    print(f"wrote {len(edges)} edges to {out}")
    return EXIT_OK


COMMANDS = {
    "bench": cmd_bench,
    "analytics": cmd_analytics,
    "microbench": cmd_microbench,
    "sweep-t": cmd_sweep_t,
    "verify": cmd_verify,
    "generate": cmd_generate,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed is None:
            args.seed = _default_seed()
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EdgeListError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
