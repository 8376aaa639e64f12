"""The two-level learned graph store and the interface every store shares."""

from __future__ import annotations

import abc
from typing import Iterable, Iterator

from .edge_index import DEFAULT_THRESHOLD, EdgeBlock, Layout
from .learned_index import IndexConfig, LearnedIndex

__all__ = ["GraphStore", "LHGStore", "Edge"]

Edge = tuple[int, int, float]

# vertex-index payload: inline (neighbor, weight) or a pointer to an edge block
VINDEX_PAYLOAD_BYTES = 16


class GraphStore(abc.ABC):
    """Directed, weighted simple graph with integer vertex ids.

    ``insert_edge`` and ``delete_edge`` return True when the edge set changed.
    A vertex appears in :meth:`vertex_ids` while it has at least one out-edge.
    """

    kind: str = "abstract"

    @abc.abstractmethod
    def find_edge(self, u: int, v: int) -> bool: ...

    @abc.abstractmethod
    def edge_weight(self, u: int, v: int) -> float | None: ...

    @abc.abstractmethod
    def insert_edge(self, u: int, v: int, w: float = 1.0) -> bool: ...

    @abc.abstractmethod
    def delete_edge(self, u: int, v: int) -> bool: ...

    @abc.abstractmethod
    def degree(self, u: int) -> int: ...

    @abc.abstractmethod
    def neighbors(self, u: int) -> Iterator[tuple[int, float]]: ...

    @abc.abstractmethod
    def vertex_ids(self) -> Iterator[int]: ...

    @abc.abstractmethod
    def memory_bytes(self) -> int: ...

    @property
    @abc.abstractmethod
    def edge_count(self) -> int: ...

    @property
    def vertex_count(self) -> int:
        return sum(1 for _ in self.vertex_ids())

    def load(self, edges: Iterable[tuple], undirected: bool = False) -> int:
        """Insert ``(u, v)`` or ``(u, v, w)`` records; returns how many were new."""
        added = 0
        ins = self.insert_edge
        for e in edges:
            w = e[2] if len(e) > 2 else 1.0
            added += ins(e[0], e[1], w)
            if undirected:
                added += ins(e[1], e[0], w)
        return added

    def adjacency(self) -> Iterator[tuple[int, Iterator[tuple[int, float]]]]:
        """``(u, neighbors(u))`` for every vertex with out-edges, in id order."""
        for u in self.vertex_ids():
            yield u, self.neighbors(u)

    def edges(self) -> Iterator[Edge]:
        for u, nbrs in self.adjacency():
            for v, w in nbrs:
                yield u, v, w

    def __len__(self) -> int:
        return self.edge_count


def _check_ids(u: int, v: int) -> None:
    if u < 0 or v < 0:
        raise ValueError(f"vertex ids must be non-negative, got ({u}, {v})")


class LHGStore(GraphStore):
    """Learned hierarchical graph store.

    The vertex index maps each source vertex to either its single neighbor,
    stored inline as a ``(neighbor, weight)`` tuple, or an :class:`EdgeBlock`.
    Blocks switch from an unsorted array to a per-vertex learned index when
    the degree reaches ``threshold``.

    Deleting the inline edge drops the vertex.  A block is kept once created,
    even at degree 0, and never changes layout back.
    """

    kind = "lhg"

    def __init__(self, threshold: int = DEFAULT_THRESHOLD, index_config: IndexConfig | None = None) -> None:
        if threshold < 1:
            raise ValueError(f"threshold must be >= 1, got {threshold}")
        self.threshold = threshold
        self.index_config = index_config
        self.vindex = LearnedIndex(index_config, payload_bytes=VINDEX_PAYLOAD_BYTES)
        self._edges = 0

    @property
    def edge_count(self) -> int:
        return self._edges

    def edge_weight(self, u: int, v: int) -> float | None:
        p = self.vindex.lookup(u)
        if p is None:
            return None
        if p.__class__ is tuple:
            return p[1] if p[0] == v else None
        return p.find(v)

    def find_edge(self, u: int, v: int) -> bool:
        p = self.vindex.lookup(u)
        if p is None:
            return False
        if p.__class__ is tuple:
            return p[0] == v
        return p.find(v) is not None

    def insert_edge(self, u: int, v: int, w: float = 1.0) -> bool:
        _check_ids(u, v)
        vindex = self.vindex
        p = vindex.lookup(u)
        if p is None:
            vindex.insert(u, (v, w))
        elif p.__class__ is tuple:
            if p[0] == v:
                if p[1] != w:
                    vindex.insert(u, (v, w))
                return False
            vindex.insert(u, EdgeBlock.from_edges((p, (v, w)), self.threshold, self.index_config))
        elif not p.insert(v, w, self.threshold, self.index_config):
            return False
        self._edges += 1
        return True

    def delete_edge(self, u: int, v: int) -> bool:
        p = self.vindex.lookup(u)
        if p is None:
            return False
        if p.__class__ is tuple:
            if p[0] != v:
                return False
            self.vindex.remove(u)
        elif not p.remove(v):
            return False
        self._edges -= 1
        return True

    def degree(self, u: int) -> int:
        p = self.vindex.lookup(u)
        if p is None:
            return 0
        if p.__class__ is tuple:
            return 1
        return p.degree

    def neighbors(self, u: int) -> Iterator[tuple[int, float]]:
        p = self.vindex.lookup(u)
        if p is None:
            return iter(())
        if p.__class__ is tuple:
            return iter((p,))
        return iter(p)

    def vertex_ids(self) -> Iterator[int]:
        for u, p in self.vindex.items():
            if p.__class__ is tuple or p.degree:
                yield u

    def adjacency(self) -> Iterator[tuple[int, Iterator[tuple[int, float]]]]:
        """``(u, neighbors)`` for every vertex with out-edges, in id order, in one vertex-index pass."""
        for u, p in self.vindex.items():
            if p.__class__ is tuple:
                yield u, iter((p,))
            elif p.degree:
                yield u, iter(p)

    def known_vertices(self) -> Iterator[int]:
        """Every vertex-index key, including vertices whose block is empty."""
        return self.vindex.keys()

    def payload(self, u: int) -> tuple[int, float] | EdgeBlock | None:
        return self.vindex.lookup(u)

    def blocks(self) -> Iterator[tuple[int, EdgeBlock]]:
        for u, p in self.vindex.items():
            if p.__class__ is not tuple:
                yield u, p

    def layout_counts(self) -> dict[str, int]:
        counts = {"inline": 0, Layout.ARRAY.value: 0, Layout.LEARNED.value: 0}
        for p in self.vindex.values():
            counts["inline" if p.__class__ is tuple else p.layout.value] += 1
        return counts

    def memory_bytes(self) -> int:
        total = self.vindex.memory_bytes()
        for p in self.vindex.values():
            if p.__class__ is not tuple:
                total += p.memory_bytes()
        return total
