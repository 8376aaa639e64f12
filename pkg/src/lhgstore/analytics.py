"""Graph kernels over any :class:`~lhgstore.graph_store.GraphStore`.

The vertex set of a run is every vertex that appears as a source or target
in the store, plus any ids passed through ``vertices``.  Kernels only read
the store, so a quiesced store can be shared across threads.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import os
from collections import deque
from typing import Any, Callable, Iterable

from .graph_store import GraphStore

__all__ = [
    "ALGORITHMS",
    "UNREACHED",
    "bfs",
    "lcc",
    "pagerank",
    "read_results",
    "result_digest",
    "run",
    "sssp",
    "wcc",
    "write_results",
]

UNREACHED = math.inf
ALGORITHMS = ("bfs", "pagerank", "lcc", "wcc", "sssp")

# LCC switches from pairwise edge probes to neighbor-set intersection above this degree
PAIR_PROBE_MAX_DEGREE = 64


class UnknownVertexError(KeyError):
    pass


def _universe(store: GraphStore, vertices: Iterable[int] | None = None) -> list[int]:
    seen = set(vertices or ())
    for u, nbrs in store.adjacency():
        seen.add(u)
        seen.update(v for v, _ in nbrs)
    return sorted(seen)


def _undirected(store: GraphStore, vertices: Iterable[int] | None = None) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v: set() for v in vertices or ()}
    for u, nbrs in store.adjacency():
        out = adj.setdefault(u, set())
        for v, _ in nbrs:
            if v != u:
                out.add(v)
                adj.setdefault(v, set()).add(u)
            else:
                adj.setdefault(v, set())
    return adj


def _reverse(store: GraphStore) -> dict[int, list[tuple[int, float]]]:
    rev: dict[int, list[tuple[int, float]]] = {}
    for u, nbrs in store.adjacency():
        for v, w in nbrs:
            rev.setdefault(v, []).append((u, w))
    return rev


def bfs(store: GraphStore, source: int, directed: bool = True, vertices: Iterable[int] | None = None) -> dict[int, float]:
    """Hop distance from ``source``; unreached vertices get :data:`UNREACHED`."""
    universe = _universe(store, vertices)
    level: dict[int, float] = dict.fromkeys(universe, UNREACHED)
    if source not in level:
        raise UnknownVertexError(source)
    rev = None if directed else _reverse(store)
    level[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        nxt = level[u] + 1
        for v, _ in store.neighbors(u):
            if level[v] == UNREACHED:
                level[v] = nxt
                queue.append(v)
        if rev is not None:
            for v, _ in rev.get(u, ()):
                if level[v] == UNREACHED:
                    level[v] = nxt
                    queue.append(v)
    return level


def pagerank(
    store: GraphStore,
    iterations: int = 20,
    damping: float = 0.85,
    vertices: Iterable[int] | None = None,
) -> dict[int, float]:
    """Power iteration with a fixed iteration count.

    Rank of vertices without out-edges is spread uniformly.  Each pass scans
    every vertex and its adjacency in id order, so the result is bitwise
    identical for any store holding the same edge set.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    universe = _universe(store, vertices)
    n = len(universe)
    if n == 0:
        return {}
    pos = {v: i for i, v in enumerate(universe)}
    has_out = bytearray(n)
    for u in store.vertex_ids():
        has_out[pos[u]] = 1
    dangling_ix = [i for i in range(n) if not has_out[i]]
    rank = [1.0 / n] * n
    base = (1.0 - damping) / n
    for _ in range(iterations):
        incoming = [0.0] * n
        for u, nbrs in store.adjacency():
            targets = [pos[v] for v, _ in nbrs]
            share = damping * rank[pos[u]] / len(targets)
            for t in targets:
                incoming[t] += share
        dangling = damping * math.fsum(rank[i] for i in dangling_ix) / n
        rank = [base + dangling + x for x in incoming]
    return dict(zip(universe, rank))


def lcc(store: GraphStore, vertices: Iterable[int] | None = None) -> dict[int, float]:
    """Local clustering coefficient on the undirected view.

    For a vertex with ``d`` distinct neighbors, the closed fraction of its
    ``d * (d - 1)`` ordered neighbor pairs, where ``a - b`` counts as an edge
    if either direction is stored.  Degree below 2 gives 0.
    """
    adj = _undirected(store, vertices)
    find = store.find_edge
    out: dict[int, float] = {}
    for v in sorted(adj):
        nbrs = adj[v]
        d = len(nbrs)
        if d < 2:
            out[v] = 0.0
            continue
        if d <= PAIR_PROBE_MAX_DEGREE:
            ordered = sorted(nbrs)
            closed = 0
            for i, a in enumerate(ordered):
                for b in ordered[i + 1 :]:
                    if find(a, b) or find(b, a):
                        closed += 2
        else:
            closed = sum(len(adj[a] & nbrs) for a in nbrs)
        out[v] = closed / (d * (d - 1))
    return out


def wcc(store: GraphStore, vertices: Iterable[int] | None = None) -> dict[int, int]:
    """Weakly connected components, each labelled by its smallest vertex id."""
    adj = _undirected(store, vertices)
    label: dict[int, int] = {}
    for root in sorted(adj):
        if root in label:
            continue
        label[root] = root
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in label:
                    label[v] = root
                    queue.append(v)
    return label


def sssp(store: GraphStore, source: int, directed: bool = True, vertices: Iterable[int] | None = None) -> dict[int, float]:
    """Shortest weighted distances from ``source`` (Dijkstra).

    Raises ValueError on a negative weight reachable from ``source``.
    """
    universe = _universe(store, vertices)
    dist: dict[int, float] = dict.fromkeys(universe, UNREACHED)
    if source not in dist:
        raise UnknownVertexError(source)
    rev = None if directed else _reverse(store)
    dist[source] = 0.0
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        edges: Iterable[tuple[int, float]] = store.neighbors(u)
        if rev is not None:
            edges = [*edges, *rev.get(u, ())]
        for v, w in edges:
            if w < 0:
                raise ValueError(f"negative weight {w} on edge ({u}, {v})")
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


_KERNELS: dict[str, Callable[..., dict]] = {
    "bfs": bfs,
    "pagerank": pagerank,
    "lcc": lcc,
    "wcc": wcc,
    "sssp": sssp,
}


def run(name: str, store: GraphStore, **options: Any) -> dict[int, Any]:
    """Dispatch by kernel name.  ``source`` is required for bfs and sssp."""
    try:
        kernel = _KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; valid: {', '.join(ALGORITHMS)}") from None
    if name in ("bfs", "sssp"):
        if options.get("source") is None:
            raise ValueError(f"{name} needs a source vertex")
        return kernel(store, options["source"], directed=options.get("directed", True), vertices=options.get("vertices"))
    if name == "pagerank":
        return kernel(
            store,
            iterations=options.get("iterations", 20),
            damping=options.get("damping", 0.85),
            vertices=options.get("vertices"),
        )
    return kernel(store, vertices=options.get("vertices"))


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        if value == UNREACHED:
            return "inf"
        return repr(value)
    return str(value)


def format_results(result: dict[int, Any]) -> str:
    return "".join(f"{v}\t{_fmt(result[v])}\n" for v in sorted(result))


def write_results(path: str | os.PathLike, result: dict[int, Any]) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_results(result))


def read_results(path: str | os.PathLike) -> dict[int, float]:
    out: dict[int, float] = {}
    with open(path, encoding="ascii") as fh:
        for line in fh:
            v, value = line.rstrip("\n").split("\t")
            out[int(v)] = float(value)
    return out


def result_digest(result: dict[int, Any]) -> str:
    return hashlib.sha256(format_results(result).encode()).hexdigest()[:32]
