import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sartre.embed import (
    Interval,
    IntervalSet,
    TreeConfig,
    embed,
    embed_column,
    embed_dataset,
    fit_randomized_trees,
    interval_set_from_dict,
    interval_set_to_dict,
    load_interval_sets,
    save_interval_sets,
)
from sartre.errors import DimensionMismatch
from sartre.synthgen import Dataset


def _fit(values, **kw):
    return fit_randomized_trees(np.asarray(values, float), TreeConfig(**kw))


class TestInterval:
    def test_half_open_membership(self):
        iv = Interval(0.0, 1.0)
        assert iv.contains(1.0)
        assert not iv.contains(0.0)
        assert iv.contains(0.5)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Interval(1.0, 1.0)


class TestFitting:
    def test_constant_column_one_leaf_per_tree(self):
        rset = _fit(np.ones(50))
        assert rset.tree_sizes == (1, 1, 1, 1, 1)
        assert all(iv == Interval(-math.inf, math.inf) for iv in rset.intervals)

    def test_single_split_structure(self):
        rset = _fit(np.arange(1, 101), num_trees=1, max_leaves=2)
        assert rset.total == 2
        (lo_iv, hi_iv) = rset.intervals
        assert lo_iv.lo == -math.inf and hi_iv.hi == math.inf
        assert lo_iv.hi == hi_iv.lo
        assert 1 < lo_iv.hi < 100

    def test_defaults_reach_forty_intervals(self):
        rng = np.random.default_rng(0)
        rset = _fit(rng.standard_normal(2000))
        assert rset.total == 40
        assert rset.tree_sizes == (8, 8, 8, 8, 8)

    def test_deterministic(self):
        col = np.random.default_rng(1).standard_normal(200)
        a = fit_randomized_trees(col, TreeConfig(seed=7))
        b = fit_randomized_trees(col, TreeConfig(seed=7))
        assert a == b
        c = fit_randomized_trees(col, TreeConfig(seed=8))
        assert a != c

    def test_min_samples_leaf_respected(self):
        # 4 samples with an isolated outlier: every leaf must keep >= 2
        col = np.array([1.0, 1.0, 1.0, 5.0])
        rset = _fit(col, num_trees=3, max_leaves=4, min_samples_leaf=2)
        # the only admissible split would strand the outlier alone, so no
        # tree can split at all
        assert rset.tree_sizes == (1, 1, 1)

    def test_rejects_empty_column(self):
        with pytest.raises(ValueError):
            _fit(np.array([]))

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_partition_property(self, seed):
        col = np.random.default_rng(seed).standard_normal(80)
        rset = fit_randomized_trees(col, TreeConfig(seed=seed))
        offset = 0
        for size in rset.tree_sizes:
            ivs = rset.intervals[offset : offset + size]
            assert ivs[0].lo == -math.inf
            assert ivs[-1].hi == math.inf
            for left, right in zip(ivs, ivs[1:]):
                assert left.hi == right.lo
            offset += size


class TestEmbedding:
    def test_two_interval_example(self):
        rset = IntervalSet(var=1, tree_splits=((0.0,),), config=TreeConfig(num_trees=1))
        assert list(embed(-1.0, rset)) == [1.0, 0.0]
        assert list(embed(0.0, rset)) == [1.0, 0.0]  # boundary goes left
        assert list(embed(0.5, rset)) == [0.0, 1.0]

    def test_popcount_equals_num_trees(self):
        col = np.random.default_rng(3).standard_normal(500)
        rset = fit_randomized_trees(col, TreeConfig(seed=3))
        probes = np.array([-50.0, -1.0, 0.0, 2.5, 50.0])
        mat = embed_column(probes, rset)
        assert (mat.sum(axis=1) == 5).all()

    def test_matches_interval_membership(self):
        col = np.random.default_rng(4).standard_normal(300)
        rset = fit_randomized_trees(col, TreeConfig(seed=4))
        ivs = rset.intervals
        for x in [-3.0, -0.2, 0.0, 1.7]:
            vec = embed(x, rset)
            expect = [1.0 if iv.contains(x) else 0.0 for iv in ivs]
            assert list(vec) == expect

    def test_embed_dataset_shapes(self):
        ds = Dataset(np.random.default_rng(5).standard_normal((40, 3)))
        rsets = {
            v: fit_randomized_trees(ds.column(v), TreeConfig(num_trees=2, max_leaves=3, seed=v))
            for v in (1, 2, 3)
        }
        mats = embed_dataset(ds, rsets)
        for v in (1, 2, 3):
            assert mats[v].shape == (40, rsets[v].total)
            assert (mats[v].sum(axis=1) == 2).all()

    def test_embed_dataset_missing_variable(self):
        ds = Dataset(np.zeros((5, 2)))
        rsets = {1: _fit(np.arange(5.0))}
        with pytest.raises(DimensionMismatch):
            embed_dataset(ds, rsets)

    def test_identical_rows_identical_embeddings(self):
        col = np.array([1.0, 2.0, 3.0, 2.0])
        rset = _fit(np.arange(100.0), num_trees=2, max_leaves=4)
        mat = embed_column(col, rset)
        assert (mat[1] == mat[3]).all()

    def test_fit_is_unsupervised(self):
        # interval sets are a function of one column alone: other variables
        # in the dataset cannot influence them
        ds1 = Dataset(np.random.default_rng(8).standard_normal((100, 3)))
        swapped = ds1.values.copy()
        swapped[:, 2] = -swapped[:, 2]
        cfg = TreeConfig(seed=5)
        assert fit_randomized_trees(ds1.values[:, 0], cfg, var=1) == \
            fit_randomized_trees(swapped[:, 0], cfg, var=1)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        col = np.random.default_rng(6).standard_normal(150)
        rsets = {
            v: fit_randomized_trees(col + v, TreeConfig(seed=v), var=v) for v in (1, 2)
        }
        p = tmp_path / "rsets.json"
        save_interval_sets(rsets, p)
        back = load_interval_sets(p)
        assert back == rsets

    def test_dict_round_trip_preserves_infinities(self):
        rset = _fit(np.arange(50.0), num_trees=2, max_leaves=3)
        obj = interval_set_to_dict(rset)
        assert obj["trees"][0][0]["lo"] is None
        assert obj["trees"][0][-1]["hi"] is None
        assert interval_set_from_dict(obj) == rset
