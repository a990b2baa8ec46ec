"""Exact retrieval against an independent full-sort oracle."""

import numpy as np
import pytest

from embshrink import (
    EmbeddingSet,
    ValidationError,
    build_index,
    classify_top1,
    query_topk,
)

from conftest import random_set


def knn_oracle(vectors, ids, labels, query, k):
    """Independent reference: per-row float64 dot products over unit vectors,
    full sort by (-similarity, id)."""
    q = np.asarray(query, dtype=np.float64)
    q = q / np.linalg.norm(q)
    sims = []
    for v in vectors:
        u = np.asarray(v, dtype=np.float64)
        u = u / np.linalg.norm(u)
        sims.append(float(np.dot(u, q)))
    order = sorted(range(len(sims)), key=lambda i: (-sims[i], int(ids[i])))
    return [(int(ids[i]), int(labels[i]), sims[i]) for i in order[: min(k, len(sims))]]


def assert_matches_oracle(dataset, query, k):
    result = query_topk(build_index(dataset), query, k)
    expected = knn_oracle(dataset.vectors, dataset.ids, dataset.labels, query, k)
    assert [(n.id, n.label) for n in result.neighbors] == [(i, l) for i, l, _ in expected]
    for n, (_, _, sim) in zip(result.neighbors, expected):
        assert n.similarity == pytest.approx(sim, abs=1e-12)


class TestBuildIndex:
    def test_empty_set_empty_result(self):
        idx = build_index(EmbeddingSet.empty(4, ["a"]))
        assert len(idx) == 0
        assert query_topk(idx, np.ones(4), 3).neighbors == ()

    def test_normalization_three_four(self):
        s = EmbeddingSet(np.array([[3.0, 4.0]]), [1], [0], [0], ["a"])
        idx = build_index(s)
        np.testing.assert_allclose(idx.matrix[0], [0.6, 0.8], atol=1e-15)

    def test_df_attr_shape(self):
        s = random_set(16147, 512, 45, seed=0)
        assert len(build_index(s)) == 16147

    def test_zero_vector_rejected_with_id(self):
        vectors = np.ones((2, 3))
        vectors[1] = 0.0
        s = EmbeddingSet(vectors, [5, 9], [0, 0], [0, 0], ["a"])
        with pytest.raises(ValidationError, match="id=9"):
            build_index(s)


class TestQueryTopk:
    def test_self_retrieval(self):
        s = random_set(50, 8, 3, seed=1)
        idx = build_index(s)
        result = query_topk(idx, s.vectors[17], 1)
        assert result.neighbors[0].id == 17
        assert result.neighbors[0].similarity == pytest.approx(1.0, abs=1e-6)

    def test_matches_oracle_small(self):
        s = random_set(10, 4, 3, seed=2)
        assert_matches_oracle(s, np.random.default_rng(3).normal(size=4), 3)

    def test_k_larger_than_index(self):
        s = random_set(5, 4, 2, seed=4)
        result = query_topk(build_index(s), np.ones(4), 100)
        assert len(result.neighbors) == 5
        sims = [n.similarity for n in result.neighbors]
        assert sims == sorted(sims, reverse=True)

    def test_tie_break_ascending_id(self):
        vectors = np.tile(np.array([[1.0, 2.0, 3.0]]), (4, 1))
        s = EmbeddingSet(vectors, [9, 3, 7, 1], [0, 1, 2, 3], [0] * 4, list("abcd"))
        result = query_topk(build_index(s), np.array([1.0, 2.0, 3.0]), 3)
        assert result.ids() == [1, 3, 7]

    def test_oracle_equivalence_randomized(self):
        rng = np.random.default_rng(5)
        for trial in range(30):
            n = int(rng.integers(2, 200))
            d = int(rng.integers(2, 16))
            s = random_set(n, d, 4, seed=int(rng.integers(1 << 30)))
            k = int(rng.integers(1, n + 2))
            assert_matches_oracle(s, rng.normal(size=d), k)

    def test_oracle_equivalence_adversarial_ties(self):
        rng = np.random.default_rng(6)
        for trial in range(10):
            base = rng.normal(size=(6, 5))
            # duplicate rows and scramble ids so tie order is meaningful
            vectors = np.vstack([base, base, base[:3]])
            n = len(vectors)
            ids = rng.permutation(n).astype(np.uint64)
            s = EmbeddingSet(vectors, ids, rng.integers(3, size=n), [0] * n, list("abc"))
            assert_matches_oracle(s, rng.normal(size=5), int(rng.integers(1, n + 1)))

    def test_scale_invariance(self):
        s = random_set(40, 6, 3, seed=7)
        idx = build_index(s)
        rng = np.random.default_rng(8)
        q = rng.normal(size=6)
        base = query_topk(idx, q, 10).ids()
        for c in (1e-6, 0.125, 3.7, 1e6):
            assert query_topk(idx, c * q, 10).ids() == base

    def test_rejects_bad_queries(self):
        s = random_set(5, 4, 2, seed=9)
        idx = build_index(s)
        with pytest.raises(ValidationError):
            query_topk(idx, np.zeros(4), 1)
        with pytest.raises(ValidationError):
            query_topk(idx, np.ones(3), 1)
        with pytest.raises(ValidationError):
            query_topk(idx, np.ones(4), 0)


class TestClassifyTop1:
    def test_single_entry(self):
        s = EmbeddingSet(np.array([[1.0, 0.0]]), [1], [0], [0], ["only"])
        idx = build_index(s)
        assert classify_top1(idx, np.array([0.3, -2.0])) == 0

    def test_colinear_query(self):
        vectors = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        s = EmbeddingSet(vectors, [1, 2, 3], [0, 1, 2], [0] * 3, list("abc"))
        idx = build_index(s)
        assert classify_top1(idx, np.array([0.0, 5.0, 0.0])) == 1

    def test_matches_argmax_oracle(self):
        rng = np.random.default_rng(10)
        s = random_set(80, 7, 5, seed=11)
        idx = build_index(s)
        for _ in range(20):
            q = rng.normal(size=7)
            expected = knn_oracle(s.vectors, s.ids, s.labels, q, 1)[0][1]
            assert classify_top1(idx, q) == expected

    def test_empty_index_error(self):
        idx = build_index(EmbeddingSet.empty(3, ["a"]))
        with pytest.raises(ValidationError):
            classify_top1(idx, np.ones(3))
