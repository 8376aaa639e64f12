"""Degree-aware two-level learned graph store, with a flat learned-index
baseline, an oracle store, graph kernels and a benchmark harness."""

from .baselines import STORE_KINDS, LGStore, OracleStore, make_store
from .edge_index import DEFAULT_THRESHOLD, EdgeBlock, Layout, UnsortedArray
from .graph_store import GraphStore, LHGStore
from .learned_index import IndexConfig, InvariantViolation, LearnedIndex

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_THRESHOLD",
    "EdgeBlock",
    "GraphStore",
    "IndexConfig",
    "InvariantViolation",
    "LGStore",
    "LHGStore",
    "Layout",
    "LearnedIndex",
    "OracleStore",
    "STORE_KINDS",
    "UnsortedArray",
    "make_store",
]
