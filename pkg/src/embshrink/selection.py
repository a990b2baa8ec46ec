"""Clustering-based representative selection.

Per-class k-means (Lloyd's algorithm with k-means++ seeding) and a
deterministic density clustering built on mutual-reachability minimum spanning
trees, plus a uniform-sampling baseline. Cluster representatives are either
synthesized centroids (member means) or medoids (the real member nearest to
the centroid).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import (
    EmbeddingSet,
    Split,
    ValidationError,
    _snapped_ceil,
    set_digest,
    unit_normalized,
)

SOURCE_ORIGINAL = 0
SOURCE_CENTROID = 1


class Subset:
    """Ordered representative entries plus provenance of how they were chosen.

    Entries are either originals (``source_refs`` holds the source record id)
    or synthesized centroids (``source_refs`` holds the cluster id; the entry
    id is allocated past the source set's largest id).
    """

    def __init__(
        self,
        vectors: np.ndarray,
        ids: np.ndarray,
        labels: np.ndarray,
        splits: np.ndarray,
        source_kinds: np.ndarray,
        source_refs: np.ndarray,
        vocabulary: tuple[str, ...],
        method: str,
        params: dict,
    ):
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.ids = np.asarray(ids, dtype=np.uint64)
        self.labels = np.asarray(labels, dtype=np.uint32)
        self.splits = np.asarray(splits, dtype=np.uint8)
        self.source_kinds = np.asarray(source_kinds, dtype=np.uint8)
        self.source_refs = np.asarray(source_refs, dtype=np.uint64)
        self.vocabulary = tuple(vocabulary)
        self.method = method
        self.params = dict(params)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def original_ids(self) -> np.ndarray:
        return self.source_refs[self.source_kinds == SOURCE_ORIGINAL]

    def to_embedding_set(self) -> EmbeddingSet:
        return EmbeddingSet(
            self.vectors.astype(np.float32), self.ids, self.labels, self.splits, self.vocabulary
        )


def subset_from_positions(
    dataset: EmbeddingSet, positions: Sequence[int] | np.ndarray, method: str, params: dict
) -> Subset:
    positions = np.asarray(positions, dtype=np.intp)
    return Subset(
        vectors=dataset.vectors[positions],
        ids=dataset.ids[positions],
        labels=dataset.labels[positions],
        splits=dataset.splits[positions],
        source_kinds=np.full(len(positions), SOURCE_ORIGINAL),
        source_refs=dataset.ids[positions],
        vocabulary=dataset.vocabulary,
        method=method,
        params=params,
    )


def save_subset(subset: Subset, path: str | Path, source: EmbeddingSet | None = None) -> None:
    """Write entries in the embedding table format plus a provenance JSON sidecar."""
    from .data import save_embeddings

    save_embeddings(subset.to_embedding_set(), path)
    provenance = {
        "method": subset.method,
        "params": subset.params,
        "entry_count": len(subset),
        "original_count": int(np.count_nonzero(subset.source_kinds == SOURCE_ORIGINAL)),
        "centroid_count": int(np.count_nonzero(subset.source_kinds == SOURCE_CENTROID)),
        "source_digest": set_digest(source) if source is not None else None,
    }
    Path(str(path) + ".provenance.json").write_text(json.dumps(provenance, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# Uniform baseline
# ---------------------------------------------------------------------------


def _per_class_rngs(seed: int, labels: Sequence[int]) -> dict[int, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(labels))
    return {label: np.random.default_rng(children[i]) for i, label in enumerate(labels)}


def select_uniform(
    dataset: EmbeddingSet, fraction: float, balanced: bool, seed: int
) -> Subset:
    """Uniform sample without replacement; balanced mode samples per class."""
    if len(dataset) == 0:
        raise ValidationError("cannot select from an empty set")
    if not 0.0 < fraction <= 1.0:
        raise ValidationError("fraction must lie in (0, 1]")
    if balanced:
        by_class = dataset.positions_by_class()
        rngs = _per_class_rngs(seed, sorted(by_class))
        chosen = [
            rngs[label].choice(by_class[label], size=_snapped_ceil(fraction * len(by_class[label])), replace=False)
            for label in sorted(by_class)
        ]
        positions = np.sort(np.concatenate(chosen))
    else:
        rng = np.random.default_rng(seed)
        count = _snapped_ceil(fraction * len(dataset))
        positions = np.sort(rng.choice(len(dataset), size=count, replace=False))
    return subset_from_positions(
        dataset,
        positions,
        method="uniform",
        params={"fraction": fraction, "balanced": balanced, "seed": seed},
    )


# ---------------------------------------------------------------------------
# Cluster assignments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterInfo:
    label: int
    member_positions: np.ndarray  # ascending record positions in the source set


class ClusterAssignment:
    """Disjoint clusters over a set's records; -1 marks noise."""

    def __init__(self, source_ids: np.ndarray, clusters: list[ClusterInfo]):
        self.source_ids = np.asarray(source_ids, dtype=np.uint64)
        self.clusters = tuple(clusters)
        cluster_of = np.full(len(self.source_ids), -1, dtype=np.int64)
        for idx, info in enumerate(self.clusters):
            if np.any(cluster_of[info.member_positions] != -1):
                raise ValidationError("clusters must be disjoint")
            cluster_of[info.member_positions] = idx
        self.cluster_of = cluster_of

    @property
    def n_noise(self) -> int:
        return int(np.count_nonzero(self.cluster_of == -1))

    def check_source(self, dataset: EmbeddingSet) -> None:
        if not np.array_equal(self.source_ids, dataset.ids):
            raise ValidationError("cluster assignment was not derived from this set")


# ---------------------------------------------------------------------------
# Per-class k-means
# ---------------------------------------------------------------------------


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    sq = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = sq.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))  # all remaining mass at distance zero
        else:
            idx = int(rng.choice(n, p=sq / total))
        centers[j] = x[idx]
        sq = np.minimum(sq, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(
    x: np.ndarray, ids: np.ndarray, k: int, max_iters: int, rng: np.random.Generator
) -> np.ndarray:
    """Assignment vector for one class; empty clusters are re-seeded at the
    member farthest from their previous centroid (ties by ascending id)."""
    centers = _kmeans_pp_init(x, k, rng)
    x_sq = np.sum(x**2, axis=1)
    assign = None
    for _ in range(max_iters):
        # |x-c|^2 expanded; only the argmin matters so cancellation is harmless
        sq = x_sq[:, None] - 2.0 * (x @ centers.T) + np.sum(centers**2, axis=1)[None, :]
        new_assign = np.argmin(sq, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = np.flatnonzero(assign == j)
            if members.size:
                centers[j] = x[members].mean(axis=0)
            else:
                dist = np.sum((x - centers[j]) ** 2, axis=1)
                far = np.flatnonzero(dist == dist.max())
                centers[j] = x[far[np.argmin(ids[far])]]
    return assign


def kmeans_per_class(
    dataset: EmbeddingSet, k_per_class: int, max_iters: int = 100, seed: int = 0
) -> ClusterAssignment:
    """Lloyd's algorithm run independently per class, k clamped to class size."""
    if len(dataset) == 0:
        raise ValidationError("cannot cluster an empty set")
    if k_per_class < 1 or max_iters < 1:
        raise ValidationError("k_per_class and max_iters must be >= 1")
    by_class = dataset.positions_by_class()
    rngs = _per_class_rngs(seed, sorted(by_class))
    clusters: list[ClusterInfo] = []
    for label in sorted(by_class):
        positions = by_class[label]
        k = min(k_per_class, len(positions))
        assign = _lloyd(
            dataset.vectors[positions].astype(np.float64),
            dataset.ids[positions],
            k,
            max_iters,
            rngs[label],
        )
        for j in range(k):
            members = positions[assign == j]
            if members.size:  # duplicate centroids can leave a cluster empty
                clusters.append(ClusterInfo(label=label, member_positions=members))
    return ClusterAssignment(dataset.ids, clusters)


# ---------------------------------------------------------------------------
# Density clustering (mutual-reachability MST)
# ---------------------------------------------------------------------------


def _prim_mst(weights: np.ndarray) -> list[tuple[int, int, float]]:
    """Deterministic Prim's algorithm on a dense symmetric weight matrix."""
    n = weights.shape[0]
    if n <= 1:
        return []
    best = weights[0].copy()
    best_from = np.zeros(n, dtype=np.intp)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best[0] = np.inf
    edges = []
    for _ in range(n - 1):
        j = int(np.argmin(best))  # lowest index wins ties
        edges.append((int(best_from[j]), j, float(best[j])))
        in_tree[j] = True
        closer = weights[j] < best
        best_from[closer] = j
        best = np.where(closer, weights[j], best)
        best[in_tree] = np.inf
    return edges


def _density_cluster_one_class(
    unit: np.ndarray, ids: np.ndarray, min_cluster_size: int
) -> list[np.ndarray]:
    """Clusters for one class as lists of local indices; omitted points are noise.

    Mutual reachability uses cosine distance (1 - similarity) with the core
    distance taken at the min_cluster_size-th nearest same-class neighbor
    (clamped to class size - 1). Among the partitions reached by deleting MST
    edges in descending weight order, the one maximizing the number of
    components with >= min_cluster_size members wins, earliest first.
    Zero-weight edges are never deleted: records at distance zero are one mass.
    """
    n = unit.shape[0]
    if n == 1:
        return [np.array([0])] if min_cluster_size <= 1 else []
    dist = np.clip(1.0 - unit @ unit.T, 0.0, None)
    np.fill_diagonal(dist, 0.0)
    kth = min(min_cluster_size, n - 1)
    core = np.sort(dist, axis=1)[:, kth]  # column 0 is the self distance
    reach = np.maximum(np.maximum.outer(core, core), dist)
    np.fill_diagonal(reach, 0.0)
    edges = _prim_mst(reach)

    def removal_key(edge):
        a, b, w = edge
        lo, hi = sorted((int(ids[a]), int(ids[b])))
        return (-w, lo, hi)

    ordered = sorted(edges, key=removal_key)
    positive = [e for e in ordered if e[2] > 0.0]
    zero = [e for e in ordered if e[2] <= 0.0]

    parent = list(range(n))
    size = [1] * n

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> int:
        """Merge; returns the change in the count of valid components."""
        ra, rb = find(a), find(b)
        delta = (
            int(size[ra] + size[rb] >= min_cluster_size)
            - int(size[ra] >= min_cluster_size)
            - int(size[rb] >= min_cluster_size)
        )
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        return delta

    valid = sum(1 for s in size if s >= min_cluster_size)  # all singletons
    for a, b, _ in zero:
        valid += union(a, b)
    m = len(positive)
    counts = np.empty(m + 1, dtype=np.int64)  # counts[r] = valid count after r removals
    counts[m] = valid
    for j, (a, b, _) in enumerate(reversed(positive)):
        valid += union(a, b)
        counts[m - 1 - j] = valid
    best_r = int(np.argmax(counts))  # argmax returns the earliest maximizer

    parent = list(range(n))
    size = [1] * n
    for a, b, _ in zero:
        union(a, b)
    for a, b, _ in positive[best_r:]:
        union(a, b)
    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(find(i), []).append(i)
    clusters = [np.array(members) for members in components.values() if len(members) >= min_cluster_size]
    clusters.sort(key=lambda members: int(ids[members].min()))
    return clusters


def density_cluster_per_class(dataset: EmbeddingSet, min_cluster_size: int) -> ClusterAssignment:
    """Density-based clustering with noise rejection, run independently per class."""
    if len(dataset) == 0:
        raise ValidationError("cannot cluster an empty set")
    if min_cluster_size < 1:
        raise ValidationError("min_cluster_size must be >= 1")
    unit = unit_normalized(dataset.vectors, zero_safe=True)
    clusters: list[ClusterInfo] = []
    by_class = dataset.positions_by_class()
    for label in sorted(by_class):
        positions = by_class[label]
        local = _density_cluster_one_class(
            unit[positions], dataset.ids[positions], min_cluster_size
        )
        for members in local:
            clusters.append(ClusterInfo(label=label, member_positions=positions[np.sort(members)]))
    return ClusterAssignment(dataset.ids, clusters)


# ---------------------------------------------------------------------------
# Representatives
# ---------------------------------------------------------------------------


def _centroid_ids(dataset: EmbeddingSet, count: int) -> np.ndarray:
    base = int(dataset.ids.max()) + 1 if len(dataset) else 0
    return np.arange(base, base + count, dtype=np.uint64)


def centroids_of(
    assignment: ClusterAssignment, dataset: EmbeddingSet, method: str = "centroids", params: dict | None = None
) -> Subset:
    """One synthesized entry per non-empty cluster: the member mean, labeled
    with the cluster's class. Noise records contribute nothing."""
    assignment.check_source(dataset)
    k = len(assignment.clusters)
    vectors = np.empty((k, dataset.dimension))
    labels = np.empty(k, dtype=np.uint32)
    for j, info in enumerate(assignment.clusters):
        vectors[j] = dataset.vectors[info.member_positions].astype(np.float64).mean(axis=0)
        labels[j] = info.label
    return Subset(
        vectors=vectors,
        ids=_centroid_ids(dataset, k),
        labels=labels,
        splits=np.full(k, int(Split.UNASSIGNED)),
        source_kinds=np.full(k, SOURCE_CENTROID),
        source_refs=np.arange(k, dtype=np.uint64),
        vocabulary=dataset.vocabulary,
        method=method,
        params=params or {},
    )


def medoids_of(
    assignment: ClusterAssignment, dataset: EmbeddingSet, method: str = "medoids", params: dict | None = None
) -> Subset:
    """One real entry per non-empty cluster: the member with the highest cosine
    similarity to the cluster centroid (ties by ascending id)."""
    assignment.check_source(dataset)
    positions = np.empty(len(assignment.clusters), dtype=np.intp)
    for j, info in enumerate(assignment.clusters):
        members = info.member_positions
        centroid = dataset.vectors[members].astype(np.float64).mean(axis=0)
        unit_members = unit_normalized(dataset.vectors[members], zero_safe=True)
        unit_centroid = unit_normalized(centroid, zero_safe=True)
        sims = unit_members @ unit_centroid
        best = np.flatnonzero(sims == sims.max())
        positions[j] = members[best[np.argmin(dataset.ids[members][best])]]
    sub = subset_from_positions(dataset, positions, method=method, params=params or {})
    return sub


def select_clustered(
    dataset: EmbeddingSet,
    method: str,
    representative: str,
    *,
    k_per_class: int | None = None,
    min_cluster_size: int | None = None,
    max_iters: int = 100,
    seed: int = 0,
    assign_on: EmbeddingSet | None = None,
) -> Subset:
    """Cluster per class and keep one representative per cluster.

    ``assign_on`` lets the cluster assignment run in a different space (for
    example a reduced projection of the same records); representatives are
    always computed from ``dataset``'s own vectors.
    """
    if method not in ("kmeans", "density"):
        raise ValidationError(f"unknown clustering method {method!r}")
    if representative not in ("centroid", "medoid"):
        raise ValidationError(f"unknown representative kind {representative!r}")
    space = assign_on if assign_on is not None else dataset
    if assign_on is not None and not np.array_equal(space.ids, dataset.ids):
        raise ValidationError("assign_on must hold the same records as the dataset")
    if method == "kmeans":
        if k_per_class is None:
            raise ValidationError("kmeans requires k_per_class")
        assignment = kmeans_per_class(space, k_per_class, max_iters=max_iters, seed=seed)
        params = {"method": "kmeans", "k_per_class": k_per_class, "max_iters": max_iters, "seed": seed}
    else:
        if min_cluster_size is None:
            raise ValidationError("density clustering requires min_cluster_size")
        assignment = density_cluster_per_class(space, min_cluster_size)
        params = {"method": "density", "min_cluster_size": min_cluster_size}
    params["representative"] = representative
    name = f"{method}-{representative}"
    if representative == "centroid":
        return centroids_of(assignment, dataset, method=name, params=params)
    return medoids_of(assignment, dataset, method=name, params=params)
