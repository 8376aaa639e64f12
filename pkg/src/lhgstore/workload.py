"""Graph inputs, workload construction and measurement.

Covers edge-list files, the synthetic skewed-graph generator, workloads A
(write only), B (half writes, half reads) and C (read only), the runner that
measures throughput, latency and memory, the array-vs-learned-index
crossover microbenchmark, and the degree-threshold sweep.
"""

from __future__ import annotations

import hashlib
import logging
import os
import random
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .baselines import make_store
from .edge_index import DEFAULT_THRESHOLD, UnsortedArray
from .graph_store import Edge, GraphStore
from .learned_index import IndexConfig, LearnedIndex

log = logging.getLogger(__name__)

__all__ = [
    "EdgeListError",
    "INSERT",
    "FIND",
    "DELETE",
    "RunMetrics",
    "SyntheticGraphSpec",
    "Workload",
    "WorkloadSpec",
    "build_workload",
    "crossover_microbench",
    "generate_skewed_graph",
    "load_edge_list",
    "measure_workload",
    "run_workload",
    "run_reads_parallel",
    "sweep_T",
    "write_edge_list",
]

INSERT, FIND, DELETE = 0, 1, 2
OP_NAMES = {INSERT: "insert", FIND: "find", DELETE: "delete"}


class EdgeListError(ValueError):
    def __init__(self, path: str | os.PathLike, lineno: int, message: str) -> None:
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


# -- edge-list files -------------------------------------------------------


def load_edge_list(path: str | os.PathLike, directed: bool = True, weighted: bool = True) -> list[Edge]:
    """Parse ``u v [w]`` lines; ``#`` lines and blank lines are skipped.

    Missing weights, or every weight when ``weighted`` is False, become 1.0.
    Undirected input yields both directions of each edge.
    """
    edges: list[Edge] = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise EdgeListError(path, lineno, f"expected 'u v [w]', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if weighted and len(parts) == 3 else 1.0
            except ValueError:
                raise EdgeListError(path, lineno, f"unparseable edge {line!r}") from None
            if u < 0 or v < 0:
                raise EdgeListError(path, lineno, "vertex ids must be non-negative")
            edges.append((u, v, w))
            if not directed and u != v:
                edges.append((v, u, w))
    return edges


def write_edge_list(path: str | os.PathLike, edges: Iterable[Sequence], weighted: bool = True) -> None:
    with open(path, "w", encoding="ascii") as fh:
        if weighted:
            fh.writelines(f"{e[0]} {e[1]} {float(e[2])!r}\n" for e in edges)
        else:
            fh.writelines(f"{e[0]} {e[1]}\n" for e in edges)


# -- synthetic graphs ------------------------------------------------------


@dataclass(frozen=True)
class SyntheticGraphSpec:
    vertex_count: int
    edge_count: int
    skew_exponent: float = 2.0
    seed: int = 0
    weighted: bool = False


def _degree_sequence(n: int, m: int, a: float, rng: np.random.Generator) -> np.ndarray:
    cap = n - 1
    support = np.arange(1, n, dtype=np.float64)
    p = support**-a
    p /= p.sum()
    raw = rng.choice(support, size=n, p=p)
    scaled = raw * (m / raw.sum())
    deg = np.minimum(np.floor(scaled).astype(np.int64), cap)
    short = m - int(deg.sum())
    if short > 0:
        # largest remainders first, then spread any overflow from capped vertices
        rem = np.where(deg < cap, scaled - np.floor(scaled), -1.0)
        order = np.argsort(-rem, kind="stable")
        bump = order[: min(short, int((rem >= 0).sum()))]
        deg[bump] += 1
        short = m - int(deg.sum())
    while short > 0:
        room = cap - deg
        open_ = np.flatnonzero(room > 0)
        pick = rng.choice(open_, size=min(short, open_.size), replace=False, p=(deg[open_] + 1) / (deg[open_] + 1).sum())
        deg[pick] += 1
        short = m - int(deg.sum())
    return deg


def generate_skewed_graph(spec: SyntheticGraphSpec) -> list[Edge]:
    """Simple directed graph with power-law out-degrees and uniform targets.

    Out-degrees are drawn from ``P(d) ~ d**-skew_exponent`` on ``[1, n-1]``
    and rescaled to sum to ``edge_count``.  Targets are distinct, uniformly
    chosen, never the source.  Edges are returned sorted by ``(u, v)``.
    """
    n, m = spec.vertex_count, spec.edge_count
    if n < 0 or m < 0:
        raise ValueError("vertex_count and edge_count must be non-negative")
    if m == 0:
        return []
    if m > n * (n - 1):
        raise ValueError(f"infeasible: {m} edges need more than {n} vertices without self-loops")
    if spec.skew_exponent <= 0:
        raise ValueError("skew_exponent must be positive")
    rng = np.random.default_rng(spec.seed)
    deg = _degree_sequence(n, m, spec.skew_exponent, rng)

    dense = np.flatnonzero(deg > (n - 1) // 2)
    sparse_deg = deg.copy()
    sparse_deg[dense] = 0
    src = np.repeat(np.arange(n, dtype=np.int64), sparse_deg)
    dst = rng.integers(0, n - 1, size=src.size)
    dst += dst >= src
    while True:
        code = src * n + dst
        order = np.argsort(code, kind="stable")
        dup = np.zeros(code.size, dtype=bool)
        dup[order[1:]] = code[order[1:]] == code[order[:-1]]
        k = int(dup.sum())
        if not k:
            break
        redo = rng.integers(0, n - 1, size=k)
        redo += redo >= src[dup]
        dst[dup] = redo
    parts_src = [src]
    parts_dst = [dst]
    for u in dense:
        t = rng.choice(n - 1, size=int(deg[u]), replace=False)
        t += t >= u
        parts_src.append(np.full(t.size, u, dtype=np.int64))
        parts_dst.append(t)
    src = np.concatenate(parts_src)
    dst = np.concatenate(parts_dst)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    if spec.weighted:
        w = np.round(rng.uniform(1.0, 10.0, size=src.size), 3)
    else:
        w = np.ones(src.size)
    return list(zip(src.tolist(), dst.tolist(), w.tolist()))


def degree_histogram(edges: Iterable[Sequence]) -> dict[int, int]:
    """Out-degree -> number of source vertices with that degree."""
    counts: dict[int, int] = {}
    for e in edges:
        counts[e[0]] = counts.get(e[0], 0) + 1
    hist: dict[int, int] = {}
    for d in counts.values():
        hist[d] = hist.get(d, 0) + 1
    return hist


# -- workloads -------------------------------------------------------------


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "A"
    op_count: int | None = None
    read_target: str = "existing-edge"
    seed: int = 0
    T: int = DEFAULT_THRESHOLD
    store_kind: str = "lhg"
    delete_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("A", "B", "C"):
            raise ValueError(f"workload kind must be A, B or C, got {self.kind!r}")
        if self.read_target not in ("existing-edge", "mixed"):
            raise ValueError(f"read_target must be 'existing-edge' or 'mixed', got {self.read_target!r}")
        if self.op_count is not None and self.op_count < 0:
            raise ValueError("op_count must be non-negative")
        if not 0.0 <= self.delete_fraction < 1.0:
            raise ValueError("delete_fraction must be in [0, 1)")
        if self.T < 1:
            raise ValueError("T must be >= 1")


@dataclass
class Workload:
    """Operation sequence as parallel lists; ``preload`` is loaded before timing starts."""

    kind: str
    ops: list[int] = field(default_factory=list)
    src: list[int] = field(default_factory=list)
    dst: list[int] = field(default_factory=list)
    weight: list[float] = field(default_factory=list)
    preload: list[Edge] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return zip(self.ops, self.src, self.dst, self.weight)

    def counts(self) -> dict[str, int]:
        return {name: self.ops.count(code) for code, name in OP_NAMES.items()}

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(bytes(self.ops))
        h.update(np.asarray(self.src, dtype=np.uint64).tobytes())
        h.update(np.asarray(self.dst, dtype=np.uint64).tobytes())
        h.update(np.asarray(self.weight, dtype=np.float64).tobytes())
        return h.hexdigest()


def _absent_edge(rng: random.Random, present: set, hi: int) -> tuple[int, int]:
    while True:
        u = rng.randrange(hi)
        v = rng.randrange(hi)
        if (u, v) not in present:
            return u, v


def build_workload(edges: Sequence[Sequence], spec: WorkloadSpec) -> Workload:
    """Deterministic operation sequence for ``spec`` over ``edges``.

    A inserts the edges in shuffled order.  B interleaves inserts with reads
    that target an edge inserted earlier (or, for ``mixed``, an absent edge
    half of the time).  C preloads every edge and probes them at random.
    """
    rng = random.Random(spec.seed)
    uniq: dict[tuple[int, int], float] = {}
    for e in edges:
        uniq[(e[0], e[1])] = float(e[2]) if len(e) > 2 else 1.0
    pool = list(uniq.items())
    m = len(pool)
    id_hi = 1 + max((max(u, v) for u, v in uniq), default=0)
    wl = Workload(spec.kind)
    ops, src, dst, wt = wl.ops, wl.src, wl.dst, wl.weight

    def emit(op: int, u: int, v: int, w: float) -> None:
        ops.append(op)
        src.append(u)
        dst.append(v)
        wt.append(w)

    if spec.kind == "C":
        n_ops = m if spec.op_count is None else spec.op_count
        if n_ops and not m:
            raise ValueError("workload C needs a non-empty preload edge set")
        wl.preload = [(u, v, w) for (u, v), w in pool]
        present = set(uniq)
        for _ in range(n_ops):
            if spec.read_target == "mixed" and rng.random() < 0.5:
                u, v = _absent_edge(rng, present, id_hi)
            else:
                (u, v), _w = pool[rng.randrange(m)]
            emit(FIND, u, v, 0.0)
        return wl

    order = list(range(m))
    rng.shuffle(order)
    if spec.kind == "A":
        n_writes = m if spec.op_count is None else spec.op_count
        n_reads = 0
    else:
        total = 2 * m if spec.op_count is None else spec.op_count
        n_writes = total // 2
        n_reads = total - n_writes
    if n_writes > m:
        raise ValueError(f"op_count asks for {n_writes} writes but only {m} distinct edges exist")
    if n_reads and not n_writes:
        raise ValueError("workload B needs at least one write before reads")
    mix = [INSERT] * n_writes + [FIND] * n_reads
    rng.shuffle(mix)
    if mix and mix[0] != INSERT:
        j = mix.index(INSERT)
        mix[0], mix[j] = mix[j], mix[0]

    all_edges = set(uniq)
    present: set = set()
    live: list[tuple[int, int]] = []
    written = 0
    for op in mix:
        if op == INSERT:
            if spec.delete_fraction and live and rng.random() < spec.delete_fraction:
                j = rng.randrange(len(live))
                u, v = live[j]
                live[j] = live[-1]
                live.pop()
                present.discard((u, v))
                emit(DELETE, u, v, 0.0)
                continue
            (u, v), w = pool[order[written]]
            written += 1
            present.add((u, v))
            live.append((u, v))
            emit(INSERT, u, v, w)
        else:
            if spec.read_target == "mixed" and rng.random() < 0.5:
                u, v = _absent_edge(rng, all_edges, id_hi)
            elif live:
                u, v = live[rng.randrange(len(live))]
            else:
                u, v = _absent_edge(rng, present, id_hi)
            emit(FIND, u, v, 0.0)
    return wl


# -- running ---------------------------------------------------------------


@dataclass
class RunMetrics:
    op_count: int
    ops_per_second: float
    p50_ns: float
    p99_ns: float
    memory_bytes: int
    wall_time_s: float
    true_reads: int
    edge_count: int
    vertex_count: int
    digest: str

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _digest(results: bytearray, edge_count: int, vertex_count: int) -> str:
    h = hashlib.sha256()
    h.update(bytes(results))
    h.update(f"|{edge_count}|{vertex_count}".encode())
    return h.hexdigest()[:32]


def run_workload(store: GraphStore, workload: Workload, measure_memory: bool = True) -> RunMetrics:
    """Execute every operation once, timing each; the preload is not applied here."""
    clock = time.perf_counter_ns
    find, insert, delete = store.find_edge, store.insert_edge, store.delete_edge
    lat = [0] * len(workload)
    results = bytearray()
    i = 0
    start = clock()
    for op, u, v, w in workload:
        t0 = clock()
        if op == INSERT:
            insert(u, v, w)
        elif op == FIND:
            results.append(find(u, v))
        else:
            delete(u, v)
        lat[i] = clock() - t0
        i += 1
    wall = (clock() - start) / 1e9
    n = len(lat)
    if n:
        arr = np.asarray(lat, dtype=np.float64)
        p50, p99 = (float(x) for x in np.percentile(arr, [50, 99]))
    else:
        p50 = p99 = 0.0
    vcount = store.vertex_count
    return RunMetrics(
        op_count=n,
        ops_per_second=n / wall if n and wall > 0 else 0.0,
        p50_ns=p50,
        p99_ns=p99,
        memory_bytes=store.memory_bytes() if measure_memory else 0,
        wall_time_s=wall,
        true_reads=sum(results),
        edge_count=store.edge_count,
        vertex_count=vcount,
        digest=_digest(results, store.edge_count, vcount),
    )


def run_reads_parallel(store: GraphStore, workload: Workload, workers: int = 2) -> RunMetrics:
    """Workload C split into contiguous chunks over ``workers`` threads.

    Only read-only workloads are accepted.  Results keep sequence order, so the
    digest matches :func:`run_workload`.
    """
    from concurrent.futures import ThreadPoolExecutor

    if workers < 1:
        raise ValueError("workers must be >= 1")
    if any(op != FIND for op in workload.ops):
        raise ValueError("parallel runs are limited to read-only workloads")
    n = len(workload)
    bounds = [n * i // workers for i in range(workers + 1)]
    src, dst = workload.src, workload.dst
    find = store.find_edge
    clock = time.perf_counter_ns

    def chunk(lo: int, hi: int) -> tuple[bytearray, list[int]]:
        res = bytearray()
        lat = []
        for i in range(lo, hi):
            t0 = clock()
            res.append(find(src[i], dst[i]))
            lat.append(clock() - t0)
        return res, lat

    start = clock()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(chunk, bounds[:-1], bounds[1:]))
    wall = (clock() - start) / 1e9
    results = bytearray().join(r for r, _ in parts)
    lat = [x for _, part in parts for x in part]
    if lat:
        p50, p99 = (float(x) for x in np.percentile(np.asarray(lat, dtype=np.float64), [50, 99]))
    else:
        p50 = p99 = 0.0
    vcount = store.vertex_count
    return RunMetrics(
        op_count=n,
        ops_per_second=n / wall if n and wall > 0 else 0.0,
        p50_ns=p50,
        p99_ns=p99,
        memory_bytes=store.memory_bytes(),
        wall_time_s=wall,
        true_reads=sum(results),
        edge_count=store.edge_count,
        vertex_count=vcount,
        digest=_digest(results, store.edge_count, vcount),
    )


def measure_workload(
    store_factory: Callable[[], GraphStore],
    workload: Workload,
    repetitions: int = 3,
    warmup: int = 1,
) -> tuple[RunMetrics, GraphStore]:
    """Median-throughput run over ``repetitions`` fresh stores, after ``warmup`` discarded runs.

    Returns the median metrics and the store from that run.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    runs: list[tuple[RunMetrics, GraphStore]] = []
    for r in range(warmup + repetitions):
        store = store_factory()
        store.load(workload.preload)
        metrics = run_workload(store, workload)
        if r >= warmup:
            runs.append((metrics, store))
    digests = {m.digest for m, _ in runs}
    if len(digests) != 1:
        raise RuntimeError(f"non-deterministic workload results: {sorted(digests)}")
    runs.sort(key=lambda ms: ms[0].ops_per_second)
    return runs[len(runs) // 2]


# -- crossover microbenchmark ----------------------------------------------


def _timed_mean(fn: Callable[[int], Any], keys: Sequence[int], after: Callable[[int], Any] | None = None) -> float:
    clock = time.perf_counter_ns
    total = 0
    for k in keys:
        t0 = clock()
        fn(k)
        total += clock() - t0
        if after is not None:
            after(k)
    return total / len(keys)


def crossover_microbench(
    sizes: Sequence[int],
    trials: int = 2000,
    seed: int = 0,
    rounds: int = 5,
    index_config: IndexConfig | None = None,
) -> list[dict[str, Any]]:
    """Mean lookup/insert latency of an unsorted array vs a learned index holding ``n`` entries.

    Each size gets its own seeded key set.  Inserts use absent keys and are
    undone untimed, so the structure stays at ``n`` entries.  Each round
    runs one warmup pass and the reported value is the median of the round means.
    """
    if not sizes:
        raise ValueError("sizes must be non-empty")
    rows: list[dict[str, Any]] = []
    for n in sizes:
        if n < 1:
            raise ValueError("sizes must be positive")
        rng = random.Random(seed * 1_000_003 + n)
        pool = rng.sample(range(1 << 32), n + trials)
        present, fresh = pool[:n], pool[n:]
        arr = UnsortedArray()
        for k in present:
            arr.insert(k, 1.0)
        idx = LearnedIndex.bulk_load(sorted((k, 1.0) for k in present), index_config)
        probes = [present[rng.randrange(n)] for _ in range(trials)]
        ins_keys = fresh[:trials]

        def arr_insert(k: int) -> bool:
            return arr.insert(k, 1.0)

        def idx_insert(k: int) -> bool:
            return idx.insert(k, 1.0)

        cases = [
            ("array", "lookup", arr.find, None),
            ("learned", "lookup", idx.lookup, None),
            ("array", "insert", arr_insert, arr.remove),
            ("learned", "insert", idx_insert, idx.remove),
        ]
        for structure, op, fn, undo in cases:
            keys = probes if op == "lookup" else ins_keys
            means = []
            for _ in range(rounds):
                _timed_mean(fn, keys[: max(1, len(keys) // 10)], undo)
                means.append(_timed_mean(fn, keys, undo))
            rows.append({"n": n, "structure": structure, "op": op, "mean_ns": statistics.median(means)})
    return rows


# -- threshold sweep ---------------------------------------------------------


def sweep_T(
    edges: Sequence[Sequence],
    T_values: Sequence[int],
    workload_spec: WorkloadSpec | None = None,
    algorithms: Sequence[str] = (),
    repetitions: int = 1,
    warmup: int = 0,
    index_config: IndexConfig | None = None,
    analytics_options: dict[str, Any] | None = None,
) -> list[dict[str, Any]]:
    """Rebuild an LHG store per T, run the workload plus any analytics, record metrics and digests."""
    from . import analytics

    if not T_values:
        raise ValueError("T_values must be non-empty")
    spec = workload_spec or WorkloadSpec("A")
    workload = build_workload(edges, spec)
    opts = analytics_options or {}
    rows = []
    for T in T_values:
        metrics, store = measure_workload(
            lambda: make_store("lhg", T, index_config), workload, repetitions=repetitions, warmup=warmup
        )
        row: dict[str, Any] = {"T": T, "workload": spec.kind, **metrics.to_dict()}
        digests = [metrics.digest]
        for name in algorithms:
            t0 = time.perf_counter()
            result = analytics.run(name, store, **opts)
            row[f"{name}_s"] = time.perf_counter() - t0
            digests.append(analytics.result_digest(result))
        row["correctness_digest"] = hashlib.sha256("|".join(digests).encode()).hexdigest()[:32]
        rows.append(row)
        log.info("T=%s: %.0f ops/s, %d bytes", T, metrics.ops_per_second, metrics.memory_bytes)
    return rows
