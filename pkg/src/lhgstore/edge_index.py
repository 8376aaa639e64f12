"""Per-vertex neighbor storage: unsorted arrays below the degree threshold,
learned indexes keyed by neighbor id at or above it."""

from __future__ import annotations

import enum
from typing import Iterable, Iterator

from .learned_index import COUNTER_BYTES, POINTER_BYTES, IndexConfig, LearnedIndex

__all__ = [
    "ARRAY_ENTRY_BYTES",
    "DEFAULT_THRESHOLD",
    "EDGE_BLOCK_BYTES",
    "EdgeBlock",
    "Layout",
    "UnsortedArray",
]

DEFAULT_THRESHOLD = 60
ARRAY_INITIAL_CAPACITY = 4
ARRAY_ENTRY_BYTES = 16  # neighbor id + weight
# degree, layout tag, two structure pointers, used, max_pos
EDGE_BLOCK_BYTES = 4 * COUNTER_BYTES + 2 * POINTER_BYTES


class Layout(enum.Enum):
    ARRAY = "array"
    LEARNED = "learned"


class UnsortedArray:
    """Slots filled in arrival order; deletions leave holes that later inserts reuse.

    The backing lists are exactly ``max_pos`` long (one past the highest
    occupied slot), so every scan covers ``[0, max_pos)``.  ``capacity`` is the
    allocated slot count used for memory accounting; it doubles when full.
    """

    __slots__ = ("nbrs", "wts", "used", "capacity")

    def __init__(self, capacity: int = ARRAY_INITIAL_CAPACITY) -> None:
        self.nbrs: list = []
        self.wts: list = []
        self.used = 0
        self.capacity = capacity

    @property
    def max_pos(self) -> int:
        return len(self.nbrs)

    def find(self, v: int) -> float | None:
        nbrs = self.nbrs
        if v in nbrs:
            return self.wts[nbrs.index(v)]
        return None

    def insert(self, v: int, w: float) -> bool:
        nbrs = self.nbrs
        if v in nbrs:
            self.wts[nbrs.index(v)] = w
            return False
        if self.used < len(nbrs):
            i = nbrs.index(None)
            nbrs[i] = v
            self.wts[i] = w
        else:
            if len(nbrs) == self.capacity:
                self.capacity *= 2
            nbrs.append(v)
            self.wts.append(w)
        self.used += 1
        return True

    def remove(self, v: int) -> bool:
        nbrs = self.nbrs
        if v not in nbrs:
            return False
        i = nbrs.index(v)
        self.used -= 1
        if i == len(nbrs) - 1:
            wts = self.wts
            nbrs.pop()
            wts.pop()
            while nbrs and nbrs[-1] is None:
                nbrs.pop()
                wts.pop()
        else:
            nbrs[i] = None
            self.wts[i] = None
        return True

    def __iter__(self) -> Iterator[tuple[int, float]]:
        if self.used == len(self.nbrs):
            return zip(self.nbrs, self.wts)
        return ((v, w) for v, w in zip(self.nbrs, self.wts) if v is not None)

    def __len__(self) -> int:
        return self.used


class EdgeBlock:
    """Degree counter plus the active neighbor structure of one vertex.

    The layout tag alone decides which structure an operation touches.  It
    moves from ARRAY to LEARNED once, when the degree first reaches the
    threshold, and never back.
    """

    __slots__ = ("degree", "layout", "array", "learned")

    def __init__(self) -> None:
        self.degree = 0
        self.layout = Layout.ARRAY
        self.array: UnsortedArray | None = UnsortedArray()
        self.learned: LearnedIndex | None = None

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, float]],
        threshold: int = DEFAULT_THRESHOLD,
        config: IndexConfig | None = None,
    ) -> "EdgeBlock":
        """Seed a block with distinct ``(neighbor, weight)`` edges, then pick the layout."""
        block = cls()
        arr = block.array
        for v, w in edges:
            arr.insert(v, w)
        block.degree = arr.used
        if block.degree >= threshold:
            block.promote(config)
        return block

    def find(self, v: int) -> float | None:
        """Weight of edge to ``v``, or None."""
        if self.layout is Layout.LEARNED:
            return self.learned.lookup(v)
        return self.array.find(v)

    def __contains__(self, v: int) -> bool:
        return self.find(v) is not None

    def insert(self, v: int, w: float, threshold: int = DEFAULT_THRESHOLD, config: IndexConfig | None = None) -> bool:
        if self.layout is Layout.LEARNED:
            if self.learned.insert(v, w):
                self.degree += 1
                return True
            return False
        arr = self.array
        if self.degree + 1 < threshold:
            if arr.insert(v, w):
                self.degree += 1
                return True
            return False
        if arr.find(v) is not None:
            arr.insert(v, w)
            return False
        self.promote(config)
        self.learned.insert(v, w)
        self.degree += 1
        return True

    def remove(self, v: int) -> bool:
        if self.layout is Layout.LEARNED:
            removed = self.learned.remove(v)
        else:
            removed = self.array.remove(v)
        if removed:
            self.degree -= 1
        return removed

    def promote(self, config: IndexConfig | None = None) -> "EdgeBlock":
        """Move every array entry into a new learned index, sorted by neighbor id."""
        if self.layout is Layout.LEARNED:
            raise ValueError("edge block is already LEARNED")
        entries = sorted(self.array)
        self.learned = LearnedIndex.bulk_load(entries, config)
        self.array = None
        self.layout = Layout.LEARNED
        return self

    def __iter__(self) -> Iterator[tuple[int, float]]:
        if self.layout is Layout.LEARNED:
            return self.learned.items()
        return iter(self.array)

    def __len__(self) -> int:
        return self.degree

    def memory_bytes(self) -> int:
        if self.layout is Layout.LEARNED:
            return EDGE_BLOCK_BYTES + self.learned.memory_bytes()
        return EDGE_BLOCK_BYTES + self.array.capacity * ARRAY_ENTRY_BYTES

    def __repr__(self) -> str:
        return f"EdgeBlock(degree={self.degree}, layout={self.layout.value})"
