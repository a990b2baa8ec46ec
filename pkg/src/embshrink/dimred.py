"""Linear dimensionality reduction via principal components.

Used ahead of consistency scoring and cluster assignment; retrieval always
runs in the original embedding space. Components come from an
eigendecomposition of the sample covariance (ddof=1), ordered by descending
explained variance, with each row's sign fixed so its largest-magnitude entry
is positive.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import EmbeddingSet, ValidationError

PROJECTION_MAGIC = b"PRJ1"


@dataclass
class Projection:
    components: np.ndarray  # (n_components, dimension), orthonormal rows
    mean: np.ndarray  # (dimension,)
    n_components: int
    explained_variance: np.ndarray = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.components.shape[1]


def fit_projection(dataset: EmbeddingSet, n_components: int) -> Projection:
    if n_components < 1:
        raise ValidationError("n_components must be >= 1")
    if n_components > dataset.dimension:
        raise ValidationError(
            f"n_components={n_components} exceeds dimension {dataset.dimension}"
        )
    if len(dataset) < 2:
        raise ValidationError("fitting a projection needs at least 2 records")
    x = dataset.vectors.astype(np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (len(dataset) - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")[:n_components]
    components = eigenvectors[:, order].T.copy()
    for row in components:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return Projection(
        components=components,
        mean=mean,
        n_components=n_components,
        explained_variance=eigenvalues[order],
    )


def transform(projection: Projection, dataset: EmbeddingSet) -> EmbeddingSet:
    """Map every record to the projected space; ids, labels, splits survive."""
    if dataset.dimension != projection.dimension:
        raise ValidationError(
            f"set dimension {dataset.dimension} does not match projection dimension "
            f"{projection.dimension}"
        )
    reduced = (dataset.vectors.astype(np.float64) - projection.mean) @ projection.components.T
    return EmbeddingSet(
        reduced.astype(np.float32),
        dataset.ids,
        dataset.labels,
        dataset.splits,
        dataset.vocabulary,
    )


def save_projection(projection: Projection, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(PROJECTION_MAGIC)
        fh.write(struct.pack("<II", projection.n_components, projection.dimension))
        fh.write(projection.mean.astype("<f4").tobytes())
        fh.write(projection.components.astype("<f4").tobytes())


def load_projection(path: str | Path) -> Projection:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != PROJECTION_MAGIC:
        raise ValidationError(f"not a projection file: {path}")
    k, d = struct.unpack_from("<II", data, 4)
    expected = 12 + 4 * d + 4 * k * d
    if len(data) != expected:
        raise ValidationError(f"projection file size mismatch: {path}")
    mean = np.frombuffer(data, dtype="<f4", count=d, offset=12).astype(np.float64)
    components = (
        np.frombuffer(data, dtype="<f4", count=k * d, offset=12 + 4 * d)
        .reshape(k, d)
        .astype(np.float64)
    )
    return Projection(components=components, mean=mean, n_components=k)
