"""Labeled embedding sets: validation, binary/CSV storage, splitting, synthesis.

The on-disk binary layout (magic ``EMB1``) is the interchange format for every
other part of the toolkit; an index is always rebuilt from one of these files
and never serialized itself.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

MAGIC = b"EMB1"

_HEADER = struct.Struct("<IQI")  # dimension, record count, vocabulary length


class ValidationError(ValueError):
    """Input violates a documented invariant."""


class FormatError(ValidationError):
    """Malformed embedding table file; carries the offending byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class Split(IntEnum):
    TRAIN = 0
    TEST = 1
    UNASSIGNED = 2


_SPLIT_NAMES = {Split.TRAIN: "train", Split.TEST: "test", Split.UNASSIGNED: "unassigned"}
_SPLIT_BY_NAME = {v: k for k, v in _SPLIT_NAMES.items()}


@dataclass(frozen=True)
class EmbeddingRecord:
    """One sample: identifier, feature vector, label index, split tag."""

    id: int
    vector: np.ndarray
    label: int
    split: Split


def _record_dtype(dimension: int) -> np.dtype:
    # Packed little-endian layout, identical to the file format.
    return np.dtype(
        [("id", "<u8"), ("label", "<u4"), ("split", "u1"), ("vec", "<f4", (dimension,))]
    )


class EmbeddingSet:
    """Immutable collection of records sharing one dimension and vocabulary.

    Vectors are stored as a contiguous float32 matrix; ids, labels and split
    tags are parallel arrays. The empty set (zero records) is valid.
    """

    def __init__(
        self,
        vectors: np.ndarray,
        ids: Sequence[int] | np.ndarray,
        labels: Sequence[int] | np.ndarray,
        splits: Sequence[int] | np.ndarray,
        vocabulary: Sequence[str],
    ):
        vectors = np.ascontiguousarray(np.asarray(vectors, dtype=np.float32))
        if vectors.ndim != 2:
            raise ValidationError("vectors must be a 2-d array of shape (n, dimension)")
        n, d = vectors.shape
        if d < 1:
            raise ValidationError("dimension must be >= 1")
        ids = np.ascontiguousarray(np.asarray(ids, dtype=np.uint64))
        labels = np.ascontiguousarray(np.asarray(labels, dtype=np.uint32))
        splits = np.ascontiguousarray(np.asarray(splits, dtype=np.uint8))
        for name, arr in (("ids", ids), ("labels", labels), ("splits", splits)):
            if arr.shape != (n,):
                raise ValidationError(f"{name} must have one entry per record")
        if not np.all(np.isfinite(vectors)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(vectors), axis=1))[0])
            raise ValidationError(f"non-finite vector entry in record id={int(ids[bad])}")
        if n and len(np.unique(ids)) != n:
            raise ValidationError("record ids must be unique within a set")
        vocabulary = tuple(str(name) for name in vocabulary)
        if n and labels.max(initial=0) >= len(vocabulary):
            bad = int(np.flatnonzero(labels >= len(vocabulary))[0])
            raise ValidationError(
                f"label index {int(labels[bad])} out of range for vocabulary of "
                f"size {len(vocabulary)} (record id={int(ids[bad])})"
            )
        if n and splits.max(initial=0) > int(Split.UNASSIGNED):
            bad = int(np.flatnonzero(splits > int(Split.UNASSIGNED))[0])
            raise ValidationError(f"invalid split tag in record id={int(ids[bad])}")
        for arr in (vectors, ids, labels, splits):
            arr.setflags(write=False)
        self._vectors = vectors
        self._ids = ids
        self._labels = labels
        self._splits = splits
        self._vocabulary = vocabulary

    @classmethod
    def empty(cls, dimension: int, vocabulary: Sequence[str] = ()) -> "EmbeddingSet":
        return cls(np.empty((0, dimension), dtype=np.float32), [], [], [], vocabulary)

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def splits(self) -> np.ndarray:
        return self._splits

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._vocabulary

    @property
    def dimension(self) -> int:
        return self._vectors.shape[1]

    def __len__(self) -> int:
        return self._vectors.shape[0]

    def record(self, position: int) -> EmbeddingRecord:
        return EmbeddingRecord(
            id=int(self._ids[position]),
            vector=self._vectors[position],
            label=int(self._labels[position]),
            split=Split(int(self._splits[position])),
        )

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        return (self.record(i) for i in range(len(self)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self._vocabulary == other._vocabulary
            and np.array_equal(self._vectors, other._vectors)
            and np.array_equal(self._ids, other._ids)
            and np.array_equal(self._labels, other._labels)
            and np.array_equal(self._splits, other._splits)
        )

    def __repr__(self) -> str:
        return (
            f"EmbeddingSet(n={len(self)}, dimension={self.dimension}, "
            f"classes={len(self._vocabulary)})"
        )

    def take(self, positions: Sequence[int] | np.ndarray) -> "EmbeddingSet":
        """Sub-set by record positions, preserving the order given."""
        positions = np.asarray(positions, dtype=np.intp)
        return EmbeddingSet(
            self._vectors[positions],
            self._ids[positions],
            self._labels[positions],
            self._splits[positions],
            self._vocabulary,
        )

    def positions_by_class(self) -> dict[int, np.ndarray]:
        """Record positions per label index, ascending label order."""
        out: dict[int, np.ndarray] = {}
        for label in np.unique(self._labels):
            out[int(label)] = np.flatnonzero(self._labels == label)
        return out


def unit_normalized(vectors: np.ndarray, zero_safe: bool = False) -> np.ndarray:
    """Rows scaled to Euclidean norm 1, computed in float64.

    With ``zero_safe`` a zero row stays zero instead of raising.
    """
    v = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if zero_safe:
        norms = np.where(norms == 0.0, 1.0, norms)
    elif np.any(norms == 0.0):
        raise ValidationError("zero-norm vector cannot be normalized")
    return v / norms


def set_digest(dataset: EmbeddingSet) -> str:
    """SHA-256 of the set's canonical serialized bytes."""
    buf = io.BytesIO()
    _write_embeddings(dataset, buf)
    return hashlib.sha256(buf.getvalue()).hexdigest()


# ---------------------------------------------------------------------------
# Binary format
# ---------------------------------------------------------------------------


def _write_embeddings(dataset: EmbeddingSet, fh) -> None:
    fh.write(MAGIC)
    fh.write(_HEADER.pack(dataset.dimension, len(dataset), len(dataset.vocabulary)))
    for name in dataset.vocabulary:
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ValidationError(f"vocabulary name too long: {name[:32]}...")
        fh.write(struct.pack("<H", len(encoded)))
        fh.write(encoded)
    records = np.empty(len(dataset), dtype=_record_dtype(dataset.dimension))
    records["id"] = dataset.ids
    records["label"] = dataset.labels
    records["split"] = dataset.splits
    records["vec"] = dataset.vectors
    fh.write(records.tobytes())


def save_embeddings(dataset: EmbeddingSet, path: str | Path) -> None:
    """Write the set to ``path`` in the EMB1 binary format."""
    with open(path, "wb") as fh:
        _write_embeddings(dataset, fh)


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Read an EMB1 file, validating every invariant; errors carry byte offsets."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError(f"not an EMB1 file: {path}", 0)
    if len(data) < 4 + _HEADER.size:
        raise FormatError("truncated header", 4)
    dimension, count, vocab_len = _HEADER.unpack_from(data, 4)
    if dimension < 1:
        raise FormatError("dimension must be >= 1", 4)
    offset = 4 + _HEADER.size
    vocabulary = []
    for i in range(vocab_len):
        if offset + 2 > len(data):
            raise FormatError(f"truncated vocabulary entry {i}", offset)
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + name_len > len(data):
            raise FormatError(f"truncated vocabulary entry {i}", offset)
        try:
            vocabulary.append(data[offset : offset + name_len].decode("utf-8"))
        except UnicodeDecodeError:
            raise FormatError(f"vocabulary entry {i} is not valid UTF-8", offset) from None
        offset += name_len

    dtype = _record_dtype(dimension)
    expected = count * dtype.itemsize
    remaining = len(data) - offset
    if remaining < expected:
        full = remaining // dtype.itemsize
        raise FormatError(
            f"record {full} truncated: expected {dtype.itemsize} bytes per record "
            f"(dimension mismatch?)",
            offset + full * dtype.itemsize,
        )
    if remaining > expected:
        raise FormatError("trailing bytes after last record", offset + expected)
    records = np.frombuffer(data, dtype=dtype, count=count, offset=offset)

    ids = records["id"]
    vectors = records["vec"]
    if count:
        finite = np.all(np.isfinite(vectors), axis=1)
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise FormatError(
                f"non-finite vector entry in record {bad} (id={int(ids[bad])})",
                offset + bad * dtype.itemsize,
            )
        perm = np.lexsort((np.arange(count), ids))
        dup = perm[1:][ids[perm][1:] == ids[perm][:-1]]
        if dup.size:
            bad = int(dup.min())
            raise FormatError(
                f"duplicate record id {int(ids[bad])} at record {bad}",
                offset + bad * dtype.itemsize,
            )
        bad_labels = np.flatnonzero(records["label"] >= vocab_len)
        if bad_labels.size:
            bad = int(bad_labels[0])
            raise FormatError(
                f"label index {int(records['label'][bad])} out of range at record {bad}",
                offset + bad * dtype.itemsize,
            )
        bad_splits = np.flatnonzero(records["split"] > int(Split.UNASSIGNED))
        if bad_splits.size:
            bad = int(bad_splits[0])
            raise FormatError(
                f"invalid split tag {int(records['split'][bad])} at record {bad}",
                offset + bad * dtype.itemsize,
            )
    return EmbeddingSet(vectors, ids, records["label"], records["split"], vocabulary)


# ---------------------------------------------------------------------------
# CSV import/export (hand-written fixtures)
# ---------------------------------------------------------------------------


def import_csv(path: str | Path) -> EmbeddingSet:
    """Read ``id,label_name,split,v0..v{d-1}`` rows (header required)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"empty CSV file: {path}") from None
        if len(header) < 4 or header[:3] != ["id", "label_name", "split"]:
            raise ValidationError(
                "CSV header must start with id,label_name,split,v0,... (line 1)"
            )
        dimension = len(header) - 3
        ids, label_names, splits, rows = [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"ragged CSV row: expected {len(header)} fields, got {len(row)} "
                    f"(line {line_no})"
                )
            try:
                ids.append(int(row[0]))
                splits.append(_SPLIT_BY_NAME[row[2].strip()])
                rows.append([float(x) for x in row[3:]])
            except KeyError:
                raise ValidationError(
                    f"unknown split {row[2]!r}, expected train/test/unassigned "
                    f"(line {line_no})"
                ) from None
            except ValueError as exc:
                raise ValidationError(f"{exc} (line {line_no})") from None
            label_names.append(row[1])
    vocabulary: list[str] = []
    seen: dict[str, int] = {}
    labels = []
    for name in label_names:
        if name not in seen:
            seen[name] = len(vocabulary)
            vocabulary.append(name)
        labels.append(seen[name])
    vectors = np.asarray(rows, dtype=np.float32).reshape(len(rows), dimension)
    return EmbeddingSet(vectors, ids, labels, splits, vocabulary)


def export_csv(dataset: EmbeddingSet, path: str | Path) -> None:
    """Write the set as CSV with floats at 9 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "label_name", "split"] + [f"v{i}" for i in range(dataset.dimension)]
        )
        for rec in dataset:
            writer.writerow(
                [rec.id, dataset.vocabulary[rec.label], _SPLIT_NAMES[rec.split]]
                + [f"{float(x):.9g}" for x in rec.vector]
            )


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def _snapped_ceil(x: float) -> int:
    # ceil with a snap window so 0.1 * 80 style float noise cannot bump the count
    return int(math.ceil(x - 1e-9))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def split_per_class(
    dataset: EmbeddingSet, test_fraction: float, seed: int
) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Per-class random split; classes with fewer than two records never reach the test side.

    For a class of n records, round-half-up(test_fraction * n) go to test,
    clamped so both sides keep at least one record. Deterministic given seed;
    record fields are preserved verbatim, so train and test partition the input.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot split an empty set")
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    by_class = dataset.positions_by_class()
    test_positions: list[np.ndarray] = []
    for label in sorted(by_class):
        positions = by_class[label]
        n_c = len(positions)
        if n_c < 2:
            continue
        n_test = min(max(_round_half_up(test_fraction * n_c), 1), n_c - 1)
        test_positions.append(rng.choice(positions, size=n_test, replace=False))
    chosen = (
        np.sort(np.concatenate(test_positions)) if test_positions else np.empty(0, np.intp)
    )
    mask = np.zeros(len(dataset), dtype=bool)
    mask[chosen] = True
    return dataset.take(np.flatnonzero(~mask)), dataset.take(np.flatnonzero(mask))


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    """Desk-scale stand-in for a labeled embedding corpus.

    Each class owns ``views_per_class`` sub-clusters ("views"); points scatter
    around view centers with std ``view_spread``, view centers scatter around a
    class center with spread ``class_spread``, and ``noise_fraction`` of all
    points keep their label but are re-drawn inside another class's region.
    """

    class_count: int
    views_per_class: int
    points_per_view: int
    dimension: int
    view_spread: float
    class_spread: float
    noise_fraction: float
    seed: int

    def validate(self) -> None:
        for name in ("class_count", "views_per_class", "points_per_view", "dimension"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.view_spread <= 0 or self.class_spread <= 0:
            raise ValidationError("spreads must be positive")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ValidationError("noise_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class SyntheticSidecar:
    """Generator ground truth, for test assertions only.

    ``view_index`` holds the global view id each record was drawn around
    (class_index * views_per_class + view); for noise records that is the
    *target* view the point was re-drawn into.
    """

    noise_ids: np.ndarray
    view_index: np.ndarray

    def noise_mask(self, dataset: EmbeddingSet) -> np.ndarray:
        return np.isin(dataset.ids, self.noise_ids)


# Class centers sit on random directions scaled well clear of the class-internal
# scatter, so the class_spread / view_spread ratio alone controls separability.
_CENTER_SCALE = 6.0


def generate_synthetic_detailed(
    config: SyntheticConfig,
) -> tuple[EmbeddingSet, SyntheticSidecar]:
    config.validate()
    rng = np.random.default_rng(config.seed)
    c, v, p, d = (
        config.class_count,
        config.views_per_class,
        config.points_per_view,
        config.dimension,
    )
    n = c * v * p

    directions = rng.normal(size=(c, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    class_centers = directions * (_CENTER_SCALE * config.class_spread * math.sqrt(d))
    view_centers = class_centers[:, None, :] + config.class_spread * rng.normal(size=(c, v, d))

    vectors = np.empty((n, d))
    labels = np.empty(n, dtype=np.uint32)
    view_index = np.empty(n, dtype=np.int64)
    pos = 0
    for ci in range(c):
        for vi in range(v):
            block = slice(pos, pos + p)
            vectors[block] = view_centers[ci, vi] + config.view_spread * rng.normal(size=(p, d))
            labels[block] = ci
            view_index[block] = ci * v + vi
            pos += p

    noise_count = _round_half_up(config.noise_fraction * n)
    noise_positions = np.sort(rng.choice(n, size=noise_count, replace=False))
    for idx in noise_positions:
        own = int(labels[idx])
        target = int(rng.integers(c - 1)) if c > 1 else own
        if c > 1 and target >= own:
            target += 1
        view = int(rng.integers(v))
        vectors[idx] = view_centers[target, view] + config.view_spread * rng.normal(size=d)
        view_index[idx] = target * v + view

    ids = np.arange(n, dtype=np.uint64)
    vocabulary = [f"class_{i}" for i in range(c)]
    dataset = EmbeddingSet(vectors, ids, labels, np.full(n, int(Split.UNASSIGNED)), vocabulary)
    sidecar = SyntheticSidecar(noise_ids=ids[noise_positions].copy(), view_index=view_index)
    return dataset, sidecar


def generate_synthetic(config: SyntheticConfig) -> EmbeddingSet:
    return generate_synthetic_detailed(config)[0]
