"""Updatable learned index over gapped arrays.

The index is a tree: internal nodes route a key to a child with a linear
model plus a short exponential-search correction over the children's lower
bounds, and leaf nodes keep a linear model over a gapped array of slots.

Gapped arrays follow the usual trick of filling every empty slot with a copy
of the next stored key to its right (``inf`` past the last key).  The key
array is then non-decreasing, so searches can gallop from the predicted slot
and finish with :func:`bisect.bisect_right`; a stored key is always the last
slot of its run of equal values.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from itertools import compress
from typing import Any, Iterable, Iterator, Sequence

__all__ = [
    "IndexConfig",
    "InternalNode",
    "InvariantViolation",
    "LeafNode",
    "LearnedIndex",
    "LinearModel",
    "train_model",
    "INDEX_HEADER_BYTES",
    "MODEL_BYTES",
    "POINTER_BYTES",
    "leaf_footprint",
    "internal_footprint",
]

_INF = math.inf

# Deterministic memory accounting, modelled on a packed native layout.
POINTER_BYTES = 8
MODEL_BYTES = 16  # slope + intercept
COUNTER_BYTES = 8
INDEX_HEADER_BYTES = POINTER_BYTES + COUNTER_BYTES  # root pointer + size


class InvariantViolation(AssertionError):
    """Raised by ``validate()`` when a structural invariant does not hold."""


@dataclass(frozen=True)
class IndexConfig:
    """Sizing policy shared by every node of a :class:`LearnedIndex`."""

    density_upper: float = 0.8
    density_init: float = 0.5
    expansion_factor: int = 2
    max_leaf_capacity: int = 4096
    min_leaf_capacity: int = 4
    fanout: int = 16

    def __post_init__(self) -> None:
        if not 0.0 < self.density_init <= self.density_upper < 1.0:
            raise ValueError(
                "need 0 < density_init <= density_upper < 1, got "
                f"{self.density_init}, {self.density_upper}"
            )
        if self.expansion_factor < 2:
            raise ValueError("expansion_factor must be >= 2")
        if self.min_leaf_capacity < 2:
            raise ValueError("min_leaf_capacity must be >= 2")
        if self.max_leaf_capacity < self.min_leaf_capacity:
            raise ValueError("max_leaf_capacity must be >= min_leaf_capacity")
        if math.floor(self.min_leaf_capacity * self.density_upper) < 1:
            raise ValueError("min_leaf_capacity too small for density_upper")
        if self.fanout < 2:
            raise ValueError("fanout must be >= 2")

    def max_used(self, capacity: int) -> int:
        return math.floor(capacity * self.density_upper + 1e-9)

    def capacity_for(self, n: int) -> int:
        cap = max(self.min_leaf_capacity, math.ceil(n / self.density_init))
        return min(cap, self.max_leaf_capacity)

    @property
    def bulk_chunk(self) -> int:
        """Largest number of keys a freshly built leaf receives."""
        return max(1, math.floor(self.max_leaf_capacity * self.density_init))


DEFAULT_CONFIG = IndexConfig()


@dataclass
class LinearModel:
    slope: float = 0.0
    intercept: float = 0.0

    def predict(self, key: float, capacity: int) -> int:
        x = self.slope * key + self.intercept
        if not x > 0.0:  # also catches nan
            return 0
        p = int(x + 0.5)
        return p if p < capacity else capacity - 1


def train_model(sorted_keys: Sequence[int], capacity: int) -> LinearModel:
    """Least-squares fit of ``key -> rank * capacity / n``.

    Keys may repeat (the flat graph baseline trains on source vertices only);
    a key set with zero spread yields a flat model at the mean target.
    """
    n = len(sorted_keys)
    if n == 0:
        return LinearModel(0.0, 0.0)
    step = capacity / n
    mean_y = step * (n - 1) / 2.0
    x0 = sorted_keys[0]
    # int subtraction before float conversion keeps large ids precise
    xs = [float(k - x0) for k in sorted_keys]
    mean_x = math.fsum(xs) / n
    sxx = 0.0
    sxy = 0.0
    for i, x in enumerate(xs):
        dx = x - mean_x
        sxx += dx * dx
        sxy += dx * (i * step - mean_y)
    if sxx <= 0.0:
        return LinearModel(0.0, mean_y)
    slope = max(sxy / sxx, 0.0)
    intercept = mean_y - slope * (mean_x + float(x0))
    return LinearModel(slope, intercept)


def _upper(keys: list, key: Any, pred: int, n: int) -> int:
    """First index in ``keys[0:n]`` holding a value > ``key``.

    Gallops outward from ``pred`` with doubling steps, then bisects the
    bracket that was found.
    """
    if keys[pred] <= key:
        lo = pred + 1
        step = 1
        while True:
            hi = pred + step
            if hi >= n:
                hi = n
                break
            if keys[hi] > key:
                break
            lo = hi + 1
            step <<= 1
    else:
        hi = pred
        step = 1
        while True:
            lo = pred - step
            if lo < 0:
                lo = 0
                break
            if keys[lo] <= key:
                lo += 1
                break
            hi = lo
            step <<= 1
    return bisect_right(keys, key, lo, hi)


class LeafNode:
    __slots__ = (
        "model",
        "keys",
        "vals",
        "occ",
        "capacity",
        "used",
        "max_used",
        "key_lo",
        "key_hi",
        "parent",
        "next",
    )

    def __init__(self, key_lo: Any = 0, key_hi: Any = _INF) -> None:
        self.model = LinearModel()
        self.keys: list = []
        self.vals: list = []
        self.occ = bytearray()
        self.capacity = 0
        self.used = 0
        self.max_used = 0
        self.key_lo = key_lo
        self.key_hi = key_hi
        self.parent: InternalNode | None = None
        self.next: LeafNode | None = None

    def layout(self, keys: list, vals: list, capacity: int, shift: int, config: IndexConfig) -> None:
        """Retrain the model for ``capacity`` slots and place ``keys`` by prediction.

        Each key goes to its predicted slot, pushed right past the previous
        key and left enough to leave room for the keys still to come.
        """
        n = len(keys)
        mkeys = [k >> shift for k in keys] if shift else keys
        model = train_model(mkeys, capacity)
        slope, icpt = model.slope, model.intercept
        slot_keys: list = [_INF] * capacity
        slot_vals: list = [None] * capacity
        occ = bytearray(capacity)
        prev = -1
        limit = capacity - n
        for i in range(n):
            x = slope * mkeys[i] + icpt
            p = int(x + 0.5) if x > 0.0 else 0
            if p <= prev:
                p = prev + 1
            if p > limit + i:
                p = limit + i
            slot_keys[p] = keys[i]
            slot_vals[p] = vals[i]
            occ[p] = 1
            prev = p
        nxt: Any = _INF
        for j in range(capacity - 1, -1, -1):
            if occ[j]:
                nxt = slot_keys[j]
            else:
                slot_keys[j] = nxt
        self.model = model
        self.keys = slot_keys
        self.vals = slot_vals
        self.occ = occ
        self.capacity = capacity
        self.used = n
        self.max_used = config.max_used(capacity)

    def pairs(self) -> tuple[list, list]:
        return list(compress(self.keys, self.occ)), list(compress(self.vals, self.occ))


class InternalNode:
    __slots__ = ("model", "children", "bounds", "key_lo", "key_hi", "parent")

    def __init__(self, children: list, bounds: list, key_lo: Any, key_hi: Any) -> None:
        self.model = LinearModel()
        self.children = children
        self.bounds = bounds
        self.key_lo = key_lo
        self.key_hi = key_hi
        self.parent: InternalNode | None = None
        for child in children:
            child.parent = self

    def retrain(self, shift: int) -> None:
        b = self.bounds
        self.model = train_model([k >> shift for k in b] if shift else b, len(b))


def leaf_footprint(capacity: int, key_bytes: int, payload_bytes: int) -> int:
    """Bytes for one leaf: header, slot array and occupancy bitmap."""
    header = MODEL_BYTES + 2 * COUNTER_BYTES + 2 * POINTER_BYTES + 2 * key_bytes
    bitmap = 8 * ((capacity + 63) // 64)
    return header + capacity * (key_bytes + payload_bytes) + bitmap


def internal_footprint(n_children: int, key_bytes: int) -> int:
    header = MODEL_BYTES + COUNTER_BYTES + POINTER_BYTES + 2 * key_bytes
    return header + n_children * (POINTER_BYTES + key_bytes)


class LearnedIndex:
    """Ordered map from non-negative integer keys to payloads.

    ``model_shift`` makes the models see ``key >> model_shift`` instead of the
    key itself, while ordering still uses the full key.  ``key_bytes`` and
    ``payload_bytes`` only feed :meth:`memory_bytes`.

    Mutations are not synchronized; concurrent readers are fine while no
    mutation is running.
    """

    def __init__(
        self,
        config: IndexConfig | None = None,
        *,
        model_shift: int = 0,
        key_bytes: int = 8,
        payload_bytes: int = 8,
    ) -> None:
        self.config = config or DEFAULT_CONFIG
        self.model_shift = model_shift
        self.key_bytes = key_bytes
        self.payload_bytes = payload_bytes
        leaf = LeafNode()
        leaf.layout([], [], self.config.min_leaf_capacity, model_shift, self.config)
        self._root: LeafNode | InternalNode = leaf
        self._head = leaf
        self._size = 0

    # -- construction -------------------------------------------------

    @classmethod
    def bulk_load(
        cls,
        sorted_pairs: Iterable[tuple[int, Any]],
        config: IndexConfig | None = None,
        **kwargs: Any,
    ) -> "LearnedIndex":
        """Build an index from ``(key, payload)`` pairs with strictly increasing keys."""
        index = cls(config, **kwargs)
        pairs = list(sorted_pairs)
        if not pairs:
            return index
        keys = [k for k, _ in pairs]
        vals = [v for _, v in pairs]
        prev = -1
        for i, k in enumerate(keys):
            if k <= prev:
                if k < 0:
                    raise ValueError(f"negative key {k!r} at position {i}")
                raise ValueError(f"keys not strictly increasing at position {i}: {prev!r} then {k!r}")
            prev = k
        index._build(keys, vals)
        return index

    def _build(self, keys: list, vals: list) -> None:
        cfg = self.config
        shift = self.model_shift
        n = len(keys)
        n_leaves = -(-n // cfg.bulk_chunk)
        leaves: list = []
        for j in range(n_leaves):
            a = j * n // n_leaves
            b = (j + 1) * n // n_leaves
            leaf = LeafNode(0 if j == 0 else keys[a], _INF)
            leaf.layout(keys[a:b], vals[a:b], cfg.capacity_for(b - a), shift, cfg)
            if leaves:
                leaves[-1].key_hi = leaf.key_lo
                leaves[-1].next = leaf
            leaves.append(leaf)
        level: list = leaves
        while len(level) > 1:
            n_groups = -(-len(level) // cfg.fanout)
            parents = []
            for j in range(n_groups):
                group = level[j * len(level) // n_groups : (j + 1) * len(level) // n_groups]
                node = InternalNode(group, [c.key_lo for c in group], group[0].key_lo, group[-1].key_hi)
                node.retrain(shift)
                parents.append(node)
            level = parents
        self._root = level[0]
        self._head = leaves[0]
        self._size = n

    # -- queries ------------------------------------------------------

    def __len__(self) -> int:
        return self._size

    def __contains__(self, key: int) -> bool:
        return self.lookup(key, _MISSING) is not _MISSING

    def _leaf_for(self, key: int) -> LeafNode:
        node = self._root
        shift = self.model_shift
        x = key >> shift if shift else key
        while node.__class__ is InternalNode:
            b = node.bounds
            n = len(b)
            m = node.model
            p = m.slope * x + m.intercept
            p = int(p + 0.5) if p > 0.0 else 0
            if p >= n:
                p = n - 1
            i = _upper(b, key, p, n) - 1
            node = node.children[i if i > 0 else 0]
        return node

    def lookup(self, key: int, default: Any = None) -> Any:
        """Payload stored under ``key``, or ``default`` if absent."""
        if key < 0:
            return default
        leaf = self._leaf_for(key)
        keys = leaf.keys
        cap = leaf.capacity
        m = leaf.model
        x = m.slope * (key >> self.model_shift if self.model_shift else key) + m.intercept
        p = int(x + 0.5) if x > 0.0 else 0
        i = _upper(keys, key, p if p < cap else cap - 1, cap) - 1
        if i >= 0 and keys[i] == key:
            return leaf.vals[i]
        return default

    def get(self, key: int, default: Any = None) -> Any:
        return self.lookup(key, default)

    def range_scan(self, lo: int, hi: int) -> list[tuple[int, Any]]:
        """All ``(key, payload)`` with ``lo <= key < hi`` in key order."""
        if lo > hi:
            raise ValueError(f"range_scan: lo={lo!r} > hi={hi!r}")
        out: list = []
        if lo == hi:
            return out
        leaf: LeafNode | None = self._leaf_for(lo if lo > 0 else 0)
        start = bisect_left(leaf.keys, lo)
        while leaf is not None:
            keys, occ = leaf.keys, leaf.occ
            end = bisect_left(keys, hi, start)
            if end > start:
                out.extend(zip(compress(keys[start:end], occ[start:end]), compress(leaf.vals[start:end], occ[start:end])))
            if hi <= leaf.key_hi:
                break
            leaf = leaf.next
            start = 0
        return out

    def items(self) -> Iterator[tuple[int, Any]]:
        leaf: LeafNode | None = self._head
        while leaf is not None:
            yield from zip(compress(leaf.keys, leaf.occ), compress(leaf.vals, leaf.occ))
            leaf = leaf.next

    def keys(self) -> Iterator[int]:
        leaf: LeafNode | None = self._head
        while leaf is not None:
            yield from compress(leaf.keys, leaf.occ)
            leaf = leaf.next

    __iter__ = keys

    def values(self) -> Iterator[Any]:
        leaf: LeafNode | None = self._head
        while leaf is not None:
            yield from compress(leaf.vals, leaf.occ)
            leaf = leaf.next

    # -- mutation -----------------------------------------------------

    def insert(self, key: int, payload: Any) -> bool:
        """Upsert; returns True if ``key`` was new, False if its payload was replaced."""
        if key < 0:
            raise ValueError(f"keys must be non-negative, got {key!r}")
        shift = self.model_shift
        x = key >> shift if shift else key
        leaf = self._leaf_for(key)
        while True:
            keys = leaf.keys
            cap = leaf.capacity
            m = leaf.model
            p = m.slope * x + m.intercept
            p = int(p + 0.5) if p > 0.0 else 0
            pos = _upper(keys, key, p if p < cap else cap - 1, cap)
            if pos > 0 and keys[pos - 1] == key:
                leaf.vals[pos - 1] = payload
                return False
            if leaf.used < leaf.max_used:
                break
            self._grow(leaf)
            leaf = self._leaf_for(key)
        vals = leaf.vals
        occ = leaf.occ
        if pos < cap and not occ[pos]:
            keys[pos] = key
            vals[pos] = payload
            occ[pos] = 1
        else:
            # nearest gap on either side; slots in between are all occupied
            g = occ.find(0, pos)
            gl = occ.rfind(0, 0, pos)
            if g != -1 and (gl == -1 or g - pos <= pos - 1 - gl):
                keys[pos + 1 : g + 1] = keys[pos:g]
                vals[pos + 1 : g + 1] = vals[pos:g]
                occ[g] = 1
                keys[pos] = key
                vals[pos] = payload
            else:
                keys[gl : pos - 1] = keys[gl + 1 : pos]
                vals[gl : pos - 1] = vals[gl + 1 : pos]
                occ[gl] = 1
                keys[pos - 1] = key
                vals[pos - 1] = payload
        leaf.used += 1
        self._size += 1
        return True

    def remove(self, key: int) -> bool:
        """Delete ``key``; returns False if it was not stored.  Leaves a gap."""
        if key < 0:
            return False
        leaf = self._leaf_for(key)
        keys = leaf.keys
        cap = leaf.capacity
        m = leaf.model
        x = m.slope * (key >> self.model_shift if self.model_shift else key) + m.intercept
        p = int(x + 0.5) if x > 0.0 else 0
        i = _upper(keys, key, p if p < cap else cap - 1, cap) - 1
        if i < 0 or keys[i] != key:
            return False
        occ = leaf.occ
        occ[i] = 0
        leaf.vals[i] = None
        nxt = keys[i + 1] if i + 1 < cap else _INF
        g = occ.rfind(1, 0, i)
        keys[g + 1 : i + 1] = [nxt] * (i - g)
        leaf.used -= 1
        self._size -= 1
        return True

    def __delitem__(self, key: int) -> None:
        if not self.remove(key):
            raise KeyError(key)

    def __getitem__(self, key: int) -> Any:
        v = self.lookup(key, _MISSING)
        if v is _MISSING:
            raise KeyError(key)
        return v

    def __setitem__(self, key: int, payload: Any) -> None:
        self.insert(key, payload)

    def _grow(self, leaf: LeafNode) -> None:
        cfg = self.config
        keys, vals = leaf.pairs()
        new_cap = leaf.capacity * cfg.expansion_factor
        if new_cap <= cfg.max_leaf_capacity:
            leaf.layout(keys, vals, new_cap, self.model_shift, cfg)
            return
        mid = len(keys) // 2
        right = LeafNode(keys[mid], leaf.key_hi)
        right.layout(keys[mid:], vals[mid:], cfg.capacity_for(len(keys) - mid), self.model_shift, cfg)
        leaf.layout(keys[:mid], vals[:mid], cfg.capacity_for(mid), self.model_shift, cfg)
        leaf.key_hi = right.key_lo
        right.next = leaf.next
        leaf.next = right
        self._attach(leaf, right)

    def _attach(self, left: LeafNode | InternalNode, right: LeafNode | InternalNode) -> None:
        """Register ``right`` as the sibling directly after ``left``."""
        shift = self.model_shift
        parent = left.parent
        if parent is None:
            root = InternalNode([left, right], [left.key_lo, right.key_lo], left.key_lo, right.key_hi)
            root.retrain(shift)
            self._root = root
            return
        children = parent.children
        i = next(j for j, c in enumerate(children) if c is left)
        children.insert(i + 1, right)
        parent.bounds.insert(i + 1, right.key_lo)
        right.parent = parent
        if len(children) <= self.config.fanout:
            parent.retrain(shift)
            return
        mid = len(children) // 2
        sibling = InternalNode(children[mid:], parent.bounds[mid:], parent.bounds[mid], parent.key_hi)
        del children[mid:]
        del parent.bounds[mid:]
        parent.key_hi = sibling.key_lo
        parent.retrain(shift)
        sibling.retrain(shift)
        self._attach(parent, sibling)

    # -- introspection ------------------------------------------------

    @property
    def root(self) -> LeafNode | InternalNode:
        return self._root

    def leaves(self) -> Iterator[LeafNode]:
        leaf: LeafNode | None = self._head
        while leaf is not None:
            yield leaf
            leaf = leaf.next

    def nodes(self) -> Iterator[LeafNode | InternalNode]:
        stack: list = [self._root]
        while stack:
            node = stack.pop()
            yield node
            if node.__class__ is InternalNode:
                stack.extend(node.children)

    def depth(self) -> int:
        d = 1
        node = self._root
        while node.__class__ is InternalNode:
            node = node.children[0]
            d += 1
        return d

    def memory_bytes(self) -> int:
        total = INDEX_HEADER_BYTES
        kb, pb = self.key_bytes, self.payload_bytes
        for node in self.nodes():
            if node.__class__ is InternalNode:
                total += internal_footprint(len(node.children), kb)
            else:
                total += leaf_footprint(node.capacity, kb, pb)
        return total

    def validate(self) -> None:
        """Check every structural invariant; raises :class:`InvariantViolation`."""

        def fail(msg: str) -> None:
            raise InvariantViolation(msg)

        cfg = self.config
        shift = self.model_shift
        tree_leaves: list = []

        def walk(node: Any, lo: Any, hi: Any, parent: Any) -> None:
            if node.parent is not parent:
                fail("stale parent pointer")
            if node.key_lo != lo or node.key_hi != hi:
                fail(f"node range [{node.key_lo!r},{node.key_hi!r}) != expected [{lo!r},{hi!r})")
            if node.__class__ is InternalNode:
                b = node.bounds
                if len(b) != len(node.children) or not node.children:
                    fail("bounds/children length mismatch")
                if len(node.children) > cfg.fanout:
                    fail("fanout exceeded")
                if b[0] != lo:
                    fail("first bound differs from node lower bound")
                if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
                    fail("internal bounds not strictly increasing")
                if node.model.slope < 0:
                    fail("negative slope in internal model")
                for i, child in enumerate(node.children):
                    walk(child, b[i], b[i + 1] if i + 1 < len(b) else hi, node)
            else:
                tree_leaves.append(node)

        walk(self._root, 0, _INF, None)
        chained = list(self.leaves())
        if len(chained) != len(tree_leaves) or any(a is not b for a, b in zip(chained, tree_leaves)):
            fail("leaf chain disagrees with tree order")

        total = 0
        prev: Any = -1
        for leaf in tree_leaves:
            cap = leaf.capacity
            if len(leaf.keys) != cap or len(leaf.vals) != cap or len(leaf.occ) != cap:
                fail("slot arrays do not match capacity")
            used = sum(leaf.occ)
            if used != leaf.used:
                fail(f"leaf used={leaf.used} but {used} slots occupied")
            if used > leaf.max_used or used > cfg.density_upper * cap + 1e-9:
                fail(f"leaf density {used}/{cap} above {cfg.density_upper}")
            if leaf.model.slope < 0:
                fail("negative slope in leaf model")
            nxt: Any = _INF
            for j in range(cap - 1, -1, -1):
                if leaf.occ[j]:
                    nxt = leaf.keys[j]
                elif leaf.keys[j] != nxt:
                    fail(f"gap at slot {j} holds {leaf.keys[j]!r}, expected {nxt!r}")
            for k in compress(leaf.keys, leaf.occ):
                if not k > prev:
                    fail(f"keys out of order: {prev!r} then {k!r}")
                if not (leaf.key_lo <= k < leaf.key_hi):
                    fail(f"key {k!r} outside leaf range [{leaf.key_lo!r},{leaf.key_hi!r})")
                prev = k
            total += used
            m = leaf.model
            for j in range(cap):
                if not leaf.occ[j]:
                    continue
                k = leaf.keys[j]
                p = m.predict(k >> shift if shift else k, cap)
                if _upper(leaf.keys, k, p, cap) - 1 != j:
                    fail(f"search from predicted slot {p} misses key {k!r} at slot {j}")
                if self._leaf_for(k) is not leaf:
                    fail(f"routing sends key {k!r} to the wrong leaf")
        if total != self._size:
            fail(f"size={self._size} but leaves hold {total} keys")


_MISSING = object()
