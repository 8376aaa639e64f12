"""Replay a seeded, skewed operation stream on a store and the oracle side by side."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .baselines import OracleStore
from .graph_store import GraphStore

__all__ = ["Mismatch", "VerifyOp", "minimal_failing_prefix", "replay_against_oracle", "verification_ops"]

OP_KINDS = ("insert", "delete", "find", "weight", "degree", "neighbors")
# insert-heavy so hot vertices cross the degree threshold and deletes still bite
OP_WEIGHTS = (0.40, 0.15, 0.20, 0.10, 0.10, 0.05)


@dataclass(frozen=True)
class VerifyOp:
    kind: str
    u: int
    v: int = 0
    w: float = 1.0

    def __str__(self) -> str:
        if self.kind == "insert":
            return f"insert_edge({self.u}, {self.v}, {self.w})"
        if self.kind in ("delete", "find", "weight"):
            return f"{self.kind}({self.u}, {self.v})"
        return f"{self.kind}({self.u})"


@dataclass(frozen=True)
class Mismatch:
    index: int
    op: VerifyOp | None
    expected: Any
    observed: Any

    @property
    def prefix_length(self) -> int:
        """Number of operations up to and including the diverging one."""
        return self.index + 1

    def __str__(self) -> str:
        what = str(self.op) if self.op is not None else "final state"
        return (
            f"mismatch after {self.prefix_length} ops at {what}: "
            f"expected {self.expected!r}, observed {self.observed!r}"
        )


def _zipf_ids(rng: np.random.Generator, size: int, space: int, s: float) -> np.ndarray:
    p = 1.0 / np.arange(1, space + 1, dtype=np.float64) ** s
    p /= p.sum()
    ranks = rng.choice(space, size=size, p=p)
    return rng.permutation(space)[ranks]


def verification_ops(
    n_ops: int,
    seed: int = 0,
    vertex_space: int = 2000,
    neighbor_space: int = 5000,
    skew: float = 1.1,
) -> list[VerifyOp]:
    """Mixed operations with Zipf-distributed sources, so a few vertices get very large degrees."""
    rng = np.random.default_rng(seed)
    kinds = rng.choice(len(OP_KINDS), size=n_ops, p=OP_WEIGHTS)
    us = _zipf_ids(rng, n_ops, vertex_space, skew)
    vs = _zipf_ids(rng, n_ops, neighbor_space, 0.6)
    ws = rng.integers(1, 17, size=n_ops) / 4.0
    return [
        VerifyOp(OP_KINDS[k], int(u), int(v), float(w))
        for k, u, v, w in zip(kinds.tolist(), us.tolist(), vs.tolist(), ws.tolist())
    ]


def _observe(store: GraphStore, op: VerifyOp) -> Any:
    k = op.kind
    if k == "insert":
        return store.insert_edge(op.u, op.v, op.w)
    if k == "delete":
        return store.delete_edge(op.u, op.v)
    if k == "find":
        return store.find_edge(op.u, op.v)
    if k == "weight":
        return store.edge_weight(op.u, op.v)
    if k == "degree":
        return store.degree(op.u)
    return sorted(store.neighbors(op.u))


def replay_against_oracle(
    store: GraphStore,
    ops: list[VerifyOp],
    oracle: GraphStore | None = None,
    hook: Callable[[int, GraphStore], None] | None = None,
) -> Mismatch | None:
    """Apply ``ops`` to both stores, comparing every return value, then the final edge sets.

    ``hook(i, store)`` runs before op ``i``; tests use it to corrupt the store.
    Returns the first divergence, or None.
    """
    oracle = oracle if oracle is not None else OracleStore()
    for i, op in enumerate(ops):
        if hook is not None:
            hook(i, store)
        want = _observe(oracle, op)
        got = _observe(store, op)
        if want != got:
            return Mismatch(i, op, want, got)
    last = len(ops) - 1
    for name, fn in (
        ("edge_count", lambda s: s.edge_count),
        ("vertex_ids", lambda s: list(s.vertex_ids())),
        ("edges", lambda s: sorted(s.edges())),
    ):
        want, got = fn(oracle), fn(store)
        if want != got:
            return Mismatch(last, None, (name, want), (name, got))
    return None


def minimal_failing_prefix(
    store_factory: Callable[[], GraphStore],
    ops: list[VerifyOp],
    hook: Callable[[int, GraphStore], None] | None = None,
) -> Mismatch | None:
    """Shortest prefix of ``ops`` whose replay diverges, found by bisection on fresh stores.

    Assumes a divergence persists once it appears, which holds for corruptions
    the later operations do not happen to undo.
    """
    bad = replay_against_oracle(store_factory(), ops, hook=hook)
    if bad is None:
        return None
    lo, hi = 0, bad.prefix_length
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        probe = replay_against_oracle(store_factory(), ops[:mid], hook=hook)
        if probe is None:
            lo = mid
        else:
            hi, bad = mid, probe
    if bad.op is None and 0 < hi <= len(ops):
        # state diverged within the first ``hi`` ops; report the last of them
        bad = Mismatch(hi - 1, ops[hi - 1], bad.expected, bad.observed)
    return bad
