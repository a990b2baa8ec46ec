"""Exact cosine-similarity retrieval over an embedding set.

Vectors are unit-normalized at insert so similarity is a plain dot product;
queries run a full scan, which keeps every downstream result deterministic and
makes per-query cost strictly proportional to the database size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EmbeddingSet, ValidationError, unit_normalized


@dataclass(frozen=True)
class Neighbor:
    id: int
    label: int
    similarity: float


@dataclass(frozen=True)
class RetrievalResult:
    """Neighbors in descending similarity, ties broken by ascending id."""

    neighbors: tuple[Neighbor, ...]

    def ids(self) -> list[int]:
        return [n.id for n in self.neighbors]

    def labels(self) -> list[int]:
        return [n.label for n in self.neighbors]


class VectorIndex:
    """Immutable store of unit-normalized vectors; safe for concurrent queries."""

    norm_policy = "normalize_on_insert"

    def __init__(
        self,
        matrix: np.ndarray,
        ids: np.ndarray,
        labels: np.ndarray,
        vocabulary: tuple[str, ...],
    ):
        self.matrix = matrix  # (n, d) float64, unit rows
        self.ids = ids
        self.labels = labels
        self.vocabulary = vocabulary
        for arr in (matrix, ids, labels):
            arr.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]


def build_index(source) -> VectorIndex:
    """Build an index from an EmbeddingSet or Subset (anything exposing
    ids/labels/vectors/vocabulary). Zero vectors are rejected by id."""
    vectors = np.asarray(source.vectors, dtype=np.float64)
    ids = np.asarray(source.ids, dtype=np.uint64)
    labels = np.asarray(source.labels, dtype=np.uint32)
    if vectors.ndim != 2 or vectors.shape[1] < 1:
        raise ValidationError("index input must be records of dimension >= 1")
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValidationError(f"zero-norm vector cannot be indexed (id={int(ids[zero[0]])})")
    if len(ids) and len(np.unique(ids)) != len(ids):
        raise ValidationError("index entry ids must be unique")
    matrix = vectors / norms[:, None]
    return VectorIndex(matrix, ids.copy(), labels.copy(), tuple(source.vocabulary))


def _ordered_topk(sims: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k largest similarities, ties by ascending id."""
    n = sims.shape[0]
    if k >= n:
        return np.lexsort((ids, -sims))
    # Candidates are everything tied with the k-th largest value, so the
    # final tie-break by id is exact rather than an artifact of partitioning.
    threshold = np.partition(sims, n - k)[n - k]
    candidates = np.flatnonzero(sims >= threshold)
    order = np.lexsort((ids[candidates], -sims[candidates]))
    return candidates[order[:k]]


def _prepare_query(index: VectorIndex, query: np.ndarray) -> np.ndarray:
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != index.dimension:
        raise ValidationError(
            f"query dimension {query.shape[0]} does not match index dimension {index.dimension}"
        )
    return unit_normalized(query)


def query_topk(index: VectorIndex, query: np.ndarray, k: int) -> RetrievalResult:
    """Exact top-k by cosine similarity; k is clamped to the index size."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    if len(index) == 0:
        return RetrievalResult(neighbors=())
    q = _prepare_query(index, query)
    sims = index.matrix @ q
    top = _ordered_topk(sims, index.ids, k)
    return RetrievalResult(
        neighbors=tuple(
            Neighbor(int(index.ids[i]), int(index.labels[i]), float(sims[i])) for i in top
        )
    )


def classify_top1(index: VectorIndex, query: np.ndarray) -> int:
    """Label of the single most similar entry."""
    if len(index) == 0:
        raise ValidationError("cannot classify against an empty index")
    q = _prepare_query(index, query)
    sims = index.matrix @ q
    top = _ordered_topk(sims, index.ids, 1)
    return int(index.labels[top[0]])


def top_labels(index: VectorIndex, query: np.ndarray, k: int) -> np.ndarray:
    """Labels of the ordered top-k neighbors; used by the evaluation loop."""
    if len(index) == 0:
        raise ValidationError("cannot query an empty index")
    q = _prepare_query(index, query)
    sims = index.matrix @ q
    top = _ordered_topk(sims, index.ids, k)
    return index.labels[top]
