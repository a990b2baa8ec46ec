"""Neighbor-homogeneity consistency scores and threshold filtering.

A record's score is the fraction of its N nearest cosine neighbors (self
excluded, ties by ascending id) that share its label; records scoring below a
threshold are dropped as uncharacteristic, optionally with a per-class floor so
no class vanishes from the database.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import EmbeddingSet, ValidationError, unit_normalized
from .index import _ordered_topk


@dataclass(frozen=True)
class ScoreTable:
    """Per-record scores in [0, 1]; every score is a multiple of 1/n_neighbors."""

    n_neighbors: int
    scores: dict[int, float]

    def aligned_to(self, dataset: EmbeddingSet) -> np.ndarray:
        """Scores in the dataset's record order; raises if any record is missing."""
        try:
            return np.array([self.scores[int(i)] for i in dataset.ids], dtype=np.float64)
        except KeyError as exc:
            raise ValidationError(f"score table does not cover record id={exc.args[0]}") from None


@dataclass(frozen=True)
class FilterParams:
    n_neighbors: int
    threshold: float
    min_keep_per_class: int = 1

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValidationError("threshold must lie in [0, 1]")
        if self.min_keep_per_class < 0:
            raise ValidationError("min_keep_per_class must be >= 0")


def homogeneity_scores(
    dataset: EmbeddingSet, n_neighbors: int, block_size: int = 256
) -> ScoreTable:
    """Label homogeneity of each record among its N nearest cosine neighbors.

    Needs at least N+1 records so every sample has N neighbors besides itself.
    Zero vectors participate with similarity 0 to everything (relevant only in
    reduced spaces of degenerate data).
    """
    n = len(dataset)
    if n_neighbors < 1:
        raise ValidationError("n_neighbors must be >= 1")
    if n < n_neighbors + 1:
        raise ValidationError(
            f"set of {n} records is too small for n_neighbors={n_neighbors}"
        )
    unit = unit_normalized(dataset.vectors, zero_safe=True)
    ids = dataset.ids
    labels = dataset.labels
    scores: dict[int, float] = {}
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        sims_block = unit @ unit[start:stop].T  # (n, block)
        for j in range(stop - start):
            i = start + j
            sims = sims_block[:, j].copy()
            sims[i] = -np.inf  # self-exclusion
            top = _ordered_topk(sims, ids, n_neighbors)
            same = int(np.count_nonzero(labels[top] == labels[i]))
            scores[int(ids[i])] = same / n_neighbors
    return ScoreTable(n_neighbors=n_neighbors, scores=scores)


def surviving_positions(
    dataset: EmbeddingSet, table: ScoreTable, params: FilterParams
) -> np.ndarray:
    """Record positions that survive threshold filtering, in input order."""
    if table.n_neighbors != params.n_neighbors:
        raise ValidationError(
            f"score table was computed with n_neighbors={table.n_neighbors}, "
            f"filter params say {params.n_neighbors}"
        )
    scores = table.aligned_to(dataset)
    keep = scores >= params.threshold  # score exactly equal to the threshold survives
    if params.min_keep_per_class > 0:
        for label, positions in dataset.positions_by_class().items():
            floor = min(params.min_keep_per_class, len(positions))
            kept = positions[keep[positions]]
            if len(kept) >= floor:
                continue
            dropped = positions[~keep[positions]]
            order = np.lexsort((dataset.ids[dropped], -scores[dropped]))
            keep[dropped[order[: floor - len(kept)]]] = True
    return np.flatnonzero(keep)


def filter_by_threshold(
    dataset: EmbeddingSet, table: ScoreTable, params: FilterParams
) -> EmbeddingSet:
    """Records with score >= threshold, preserving input order; per-class
    top scorers are retained up to ``min_keep_per_class``."""
    return dataset.take(surviving_positions(dataset, table, params))


def write_scores_csv(table: ScoreTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "score"])
        for rec_id in sorted(table.scores):
            writer.writerow([rec_id, f"{table.scores[rec_id]:.9g}"])


def read_scores_csv(path: str | Path, n_neighbors: int) -> ScoreTable:
    scores: dict[int, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "score"]:
            raise ValidationError(f"expected id,score header in {path}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValidationError(f"ragged score row (line {line_no})")
            scores[int(row[0])] = float(row[1])
    return ScoreTable(n_neighbors=n_neighbors, scores=scores)
