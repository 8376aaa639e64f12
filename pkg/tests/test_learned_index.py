import bisect
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lhgstore.learned_index import (
    INDEX_HEADER_BYTES,
    IndexConfig,
    InternalNode,
    InvariantViolation,
    LeafNode,
    LearnedIndex,
    LinearModel,
    internal_footprint,
    leaf_footprint,
    train_model,
)

SMALL = IndexConfig(max_leaf_capacity=32, fanout=4)


def ols(xs, ys):
    # closed-form least squares, independent of train_model
    slope, intercept = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)
    return slope, intercept


class TestTrainModel:
    def test_uniform_keys_identity(self):
        m = train_model([0, 1, 2, 3], 4)
        assert m.slope == pytest.approx(1.0)
        assert m.intercept == pytest.approx(0.0, abs=1e-12)

    def test_empty(self):
        assert train_model([], 8) == LinearModel(0.0, 0.0)

    def test_matches_least_squares(self):
        keys = [10, 20, 30, 40, 50]
        m = train_model(keys, 10)
        slope, icpt = ols(keys, [i * 10 / 5 for i in range(5)])
        assert m.slope == pytest.approx(slope, rel=1e-12)
        assert m.intercept == pytest.approx(icpt, rel=1e-9, abs=1e-9)

    def test_constant_keys_flat(self):
        m = train_model([7, 7, 7, 7], 8)
        assert m.slope == 0.0
        assert 0 <= m.predict(7, 8) < 8

    @given(st.lists(st.integers(0, 10**6), min_size=2, max_size=60, unique=True), st.integers(1, 500))
    def test_random_fit(self, keys, cap):
        keys.sort()
        m = train_model(keys, cap)
        slope, icpt = ols(keys, [i * cap / len(keys) for i in range(len(keys))])
        assert m.slope >= 0
        assert m.slope == pytest.approx(max(slope, 0.0), rel=1e-6, abs=1e-9)
        if slope > 0:
            mid = keys[len(keys) // 2]
            assert m.slope * mid + m.intercept == pytest.approx(slope * mid + icpt, rel=1e-6, abs=1e-6)

    @given(st.floats(-1e6, 1e6), st.floats(-1e9, 1e9), st.integers(-(10**12), 10**12), st.integers(1, 4096))
    def test_predict_total(self, slope, icpt, key, cap):
        assert 0 <= LinearModel(slope, icpt).predict(key, cap) <= cap - 1


class TestConfig:
    def test_defaults(self):
        cfg = IndexConfig()
        assert (cfg.density_upper, cfg.expansion_factor, cfg.max_leaf_capacity, cfg.fanout) == (0.8, 2, 4096, 16)

    @pytest.mark.parametrize(
        "kw",
        [
            {"density_upper": 0.0},
            {"density_upper": 1.5},
            {"density_init": 0.9},
            {"expansion_factor": 1},
            {"fanout": 1},
            {"min_leaf_capacity": 1},
            {"max_leaf_capacity": 2, "min_leaf_capacity": 4},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            IndexConfig(**kw)


class TestLookupInsertRemove:
    def test_empty(self):
        idx = LearnedIndex()
        assert idx.lookup(5) is None
        assert len(idx) == 0
        assert idx.range_scan(0, 100) == []
        assert not idx.remove(3)

    def test_read_your_write(self):
        idx = LearnedIndex()
        assert idx.insert(7, "A")
        assert idx.lookup(7) == "A"
        assert len(idx) == 1

    def test_upsert(self):
        idx = LearnedIndex()
        assert idx.insert(7, "A") is True
        assert idx.insert(7, "B") is False
        assert idx.lookup(7) == "B"
        assert len(idx) == 1

    def test_insert_remove(self):
        idx = LearnedIndex()
        idx.insert(3, 1)
        assert idx.remove(3)
        assert idx.lookup(3) is None
        assert 3 not in idx

    def test_negative_key(self):
        with pytest.raises(ValueError):
            LearnedIndex().insert(-1, 0)

    def test_mapping_protocol(self):
        idx = LearnedIndex()
        idx[4] = "x"
        assert idx[4] == "x"
        del idx[4]
        with pytest.raises(KeyError):
            idx[4]
        with pytest.raises(KeyError):
            del idx[4]

    def test_falsy_payloads_are_found(self):
        idx = LearnedIndex()
        idx.insert(1, 0)
        idx.insert(2, 0.0)
        assert 1 in idx and 2 in idx
        assert idx.lookup(9, default="none") == "none"

    def test_binary_search_oracle(self):
        rng = random.Random(11)
        keys = rng.sample(range(10**9), 10_000)
        idx = LearnedIndex()
        for k in keys:
            idx.insert(k, k * 3)
        oracle = sorted(keys)

        def bs(k):
            i = bisect.bisect_left(oracle, k)
            return k * 3 if i < len(oracle) and oracle[i] == k else None

        present = rng.sample(keys, 1000)
        absent = []
        while len(absent) < 1000:
            k = rng.randrange(10**9)
            if bs(k) is None:
                absent.append(k)
        for k in present + absent:
            assert idx.lookup(k) == bs(k)
        idx.validate()

    def test_sort_oracle_traversal(self):
        rng = random.Random(5)
        keys = rng.sample(range(10**6), 5000)
        idx = LearnedIndex()
        for k in keys:
            idx.insert(k, None)
        assert list(idx.keys()) == sorted(keys)
        leaf_keys = [k for leaf in idx.leaves() for k in leaf.pairs()[0]]
        assert leaf_keys == sorted(keys)

    def test_set_oracle_script(self):
        rng = random.Random(2)
        idx = LearnedIndex(SMALL)
        ref = set()
        for _ in range(2000):
            k = rng.randrange(300)
            if rng.random() < 0.6:
                idx.insert(k, k)
                ref.add(k)
            else:
                assert idx.remove(k) == (k in ref)
                ref.discard(k)
        assert set(idx.keys()) == ref
        assert len(idx) == len(ref)
        idx.validate()

    def test_large_keys(self):
        idx = LearnedIndex()
        ks = [2**63 + i * 7919 for i in range(500)]
        for k in reversed(ks):
            idx.insert(k, k)
        assert list(idx.keys()) == ks
        idx.validate()


class TestRangeScan:
    def test_boundaries(self):
        idx = LearnedIndex()
        for k in (1, 2, 3, 9):
            idx.insert(k, str(k))
        assert idx.range_scan(2, 9) == [(2, "2"), (3, "3")]
        assert idx.range_scan(9, 9) == []
        assert idx.range_scan(0, 100) == [(1, "1"), (2, "2"), (3, "3"), (9, "9")]

    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            LearnedIndex().range_scan(5, 1)

    def test_random_ranges(self):
        rng = random.Random(8)
        keys = sorted(rng.sample(range(50_000), 3000))
        idx = LearnedIndex(SMALL)
        for k in rng.sample(keys, len(keys)):
            idx.insert(k, -k)
        for _ in range(100):
            lo = rng.randrange(55_000)
            hi = lo + rng.randrange(5000)
            a, b = bisect.bisect_left(keys, lo), bisect.bisect_left(keys, hi)
            assert idx.range_scan(lo, hi) == [(k, -k) for k in keys[a:b]]


class TestBulkLoad:
    def test_empty(self):
        idx = LearnedIndex.bulk_load([])
        assert len(idx) == 0 and list(idx.items()) == []

    def test_lookup_each(self):
        pairs = [(i * 13 + 1, str(i)) for i in range(1000)]
        idx = LearnedIndex.bulk_load(pairs)
        assert all(idx.lookup(k) == v for k, v in pairs)
        idx.validate()

    def test_then_mixed_updates(self):
        rng = random.Random(3)
        keys = sorted(rng.sample(range(20_000), 1000))
        idx = LearnedIndex.bulk_load([(k, k) for k in keys], SMALL)
        ref = set(keys)
        for _ in range(500):
            k = rng.randrange(20_000)
            if rng.random() < 0.5:
                idx.insert(k, k)
                ref.add(k)
            else:
                idx.remove(k)
                ref.discard(k)
        assert list(idx.keys()) == sorted(ref)
        idx.validate()

    @pytest.mark.parametrize("pairs", [[(2, 0), (1, 0)], [(1, 0), (1, 0)], [(-1, 0), (3, 0)]])
    def test_rejects_bad_order(self, pairs):
        with pytest.raises(ValueError):
            LearnedIndex.bulk_load(pairs)

    def test_multi_level_tree(self):
        idx = LearnedIndex.bulk_load([(k, k) for k in range(0, 40_000, 3)], SMALL)
        assert idx.depth() >= 3
        idx.validate()


class TestStructure:
    def test_growth_splits_and_depth(self):
        idx = LearnedIndex(SMALL)
        for k in range(3000):
            idx.insert(k, k)
        assert idx.depth() > 1
        assert all(isinstance(n, (LeafNode, InternalNode)) for n in idx.nodes())
        idx.validate()

    def test_validate_catches_corruption(self):
        idx = LearnedIndex.bulk_load([(k, k) for k in range(100)])
        leaf = next(idx.leaves())
        j = leaf.occ.index(1)
        leaf.used += 1
        with pytest.raises(InvariantViolation):
            idx.validate()
        leaf.used -= 1
        leaf.occ[j] = 0
        with pytest.raises(InvariantViolation):
            idx.validate()

    def test_shifted_models(self):
        # models see only the high bits; ties inside a run are resolved by search
        idx = LearnedIndex(SMALL, model_shift=16)
        rng = random.Random(4)
        ref = {}
        for _ in range(4000):
            k = (rng.randrange(40) << 16) | rng.randrange(1 << 16)
            idx.insert(k, k)
            ref[k] = k
        assert list(idx.items()) == sorted(ref.items())
        idx.validate()


class TestMemory:
    def walk(self, node, kb, pb):
        # independent recomputation of the declared layout, node by node
        if isinstance(node, InternalNode):
            own = 16 + 8 + 8 + 2 * kb + len(node.children) * (8 + kb)
            return own + sum(self.walk(c, kb, pb) for c in node.children)
        return 16 + 16 + 16 + 2 * kb + node.capacity * (kb + pb) + 8 * math.ceil(node.capacity / 64)

    def test_empty_baseline(self):
        idx = LearnedIndex()
        assert idx.memory_bytes() == INDEX_HEADER_BYTES + leaf_footprint(4, 8, 8)

    @pytest.mark.parametrize("kb,pb", [(8, 8), (16, 8)])
    def test_walk_oracle(self, kb, pb):
        idx = LearnedIndex(SMALL, key_bytes=kb, payload_bytes=pb)
        for k in random.Random(1).sample(range(10**5), 2500):
            idx.insert(k, 0)
        assert idx.memory_bytes() == 16 + self.walk(idx.root, kb, pb)

    def test_footprint_helpers(self):
        assert leaf_footprint(64, 8, 8) == 64 + 64 * 16 + 8
        assert internal_footprint(3, 8) == 48 + 3 * 16


@given(st.lists(st.tuples(st.sampled_from("irfs"), st.integers(0, 400)), max_size=300))
def test_matches_sorted_map(script):
    idx = LearnedIndex(IndexConfig(max_leaf_capacity=16, fanout=3, min_leaf_capacity=4))
    ref: dict[int, int] = {}
    for op, k in script:
        if op == "i":
            assert idx.insert(k, k + 1) == (k not in ref)
            ref[k] = k + 1
        elif op == "r":
            assert idx.remove(k) == (k in ref)
            ref.pop(k, None)
        elif op == "f":
            assert idx.lookup(k) == ref.get(k)
        else:
            lo, hi = min(k, 200), max(k, 200)
            assert idx.range_scan(lo, hi) == sorted((a, b) for a, b in ref.items() if lo <= a < hi)
    assert list(idx.items()) == sorted(ref.items())
    idx.validate()
