"""Reference stores: the flat learned-index baseline and an adjacency-dict oracle."""

from __future__ import annotations

from typing import Iterator

from .edge_index import DEFAULT_THRESHOLD
from .graph_store import GraphStore, LHGStore, _check_ids
from .learned_index import IndexConfig, LearnedIndex

__all__ = ["LGStore", "OracleStore", "STORE_KINDS", "make_store"]

_SHIFT = 64
_LOW = (1 << _SHIFT) - 1


class LGStore(GraphStore):
    """One learned index over every edge, keyed by the packed pair ``(u << 64) | v``.

    Keys order lexicographically by ``(u, v)``, so a vertex's edges form one
    contiguous run.  The models only see ``u``: every edge of a vertex is
    predicted to the same slot, and lookups and inserts work through that
    vertex's run of edges.  Each edge stores its full composite key.
    """

    kind = "lg"

    def __init__(self, index_config: IndexConfig | None = None) -> None:
        self.index = LearnedIndex(index_config, model_shift=_SHIFT, key_bytes=16, payload_bytes=8)

    @property
    def edge_count(self) -> int:
        return len(self.index)

    def find_edge(self, u: int, v: int) -> bool:
        if u < 0 or v < 0:
            return False
        return self.index.lookup((u << _SHIFT) | v) is not None

    def edge_weight(self, u: int, v: int) -> float | None:
        if u < 0 or v < 0:
            return None
        return self.index.lookup((u << _SHIFT) | v)

    def insert_edge(self, u: int, v: int, w: float = 1.0) -> bool:
        _check_ids(u, v)
        if v > _LOW:
            raise ValueError(f"neighbor id {v} does not fit in 64 bits")
        return self.index.insert((u << _SHIFT) | v, w)

    def delete_edge(self, u: int, v: int) -> bool:
        if u < 0 or v < 0:
            return False
        return self.index.remove((u << _SHIFT) | v)

    def neighbors(self, u: int) -> Iterator[tuple[int, float]]:
        if u < 0:
            return iter(())
        run = self.index.range_scan(u << _SHIFT, (u + 1) << _SHIFT)
        return ((k & _LOW, w) for k, w in run)

    def degree(self, u: int) -> int:
        if u < 0:
            return 0
        return len(self.index.range_scan(u << _SHIFT, (u + 1) << _SHIFT))

    def vertex_ids(self) -> Iterator[int]:
        last = -1
        for k in self.index.keys():
            u = k >> _SHIFT
            if u != last:
                yield u
                last = u

    def adjacency(self) -> Iterator[tuple[int, Iterator[tuple[int, float]]]]:
        """``(u, neighbors)`` per source vertex from a single pass over the index."""
        u = -1
        run: list = []
        for k, w in self.index.items():
            src = k >> _SHIFT
            if src != u:
                if run:
                    yield u, iter(run)
                u = src
                run = []
            run.append((k & _LOW, w))
        if run:
            yield u, iter(run)

    def memory_bytes(self) -> int:
        return self.index.memory_bytes()


class OracleStore(GraphStore):
    """Plain dict-of-dicts store used as ground truth."""

    kind = "oracle"
    ENTRY_BYTES = 16
    VERTEX_BYTES = 16

    def __init__(self) -> None:
        self.adj: dict[int, dict[int, float]] = {}
        self._edges = 0

    @property
    def edge_count(self) -> int:
        return self._edges

    def find_edge(self, u: int, v: int) -> bool:
        nbrs = self.adj.get(u)
        return nbrs is not None and v in nbrs

    def edge_weight(self, u: int, v: int) -> float | None:
        nbrs = self.adj.get(u)
        return None if nbrs is None else nbrs.get(v)

    def insert_edge(self, u: int, v: int, w: float = 1.0) -> bool:
        _check_ids(u, v)
        nbrs = self.adj.setdefault(u, {})
        new = v not in nbrs
        nbrs[v] = w
        self._edges += new
        return new

    def delete_edge(self, u: int, v: int) -> bool:
        nbrs = self.adj.get(u)
        if nbrs is None or v not in nbrs:
            return False
        del nbrs[v]
        if not nbrs:
            del self.adj[u]
        self._edges -= 1
        return True

    def degree(self, u: int) -> int:
        return len(self.adj.get(u, ()))

    def neighbors(self, u: int) -> Iterator[tuple[int, float]]:
        return iter(sorted(self.adj.get(u, {}).items()))

    def vertex_ids(self) -> Iterator[int]:
        return iter(sorted(self.adj))

    def adjacency(self) -> Iterator[tuple[int, Iterator[tuple[int, float]]]]:
        for u in sorted(self.adj):
            yield u, iter(sorted(self.adj[u].items()))

    @property
    def vertex_count(self) -> int:
        return len(self.adj)

    def memory_bytes(self) -> int:
        return self.VERTEX_BYTES * len(self.adj) + self.ENTRY_BYTES * self._edges


STORE_KINDS = ("lhg", "lg", "oracle")


def make_store(
    kind: str,
    threshold: int = DEFAULT_THRESHOLD,
    index_config: IndexConfig | None = None,
) -> GraphStore:
    """Build an empty store by kind name; ``threshold`` only applies to ``lhg``."""
    if kind == "lhg":
        return LHGStore(threshold, index_config)
    if kind == "lg":
        return LGStore(index_config)
    if kind == "oracle":
        return OracleStore()
    raise ValueError(f"unknown store kind {kind!r}; expected one of {', '.join(STORE_KINDS)}")
