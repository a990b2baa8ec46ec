"""End-to-end evaluation: top-k hit rates, latency curves, hyperparameter sweeps.

A sweep cell runs (optional reduction -> optional consistency filtering ->
selection -> index -> top-k evaluation) on the train side and always evaluates
against the untouched test set. Reports capture the complete configuration so
any cell can be re-run bit-for-bit (timing aside).
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .coreset import (
    CoresetBudget,
    EntropyDirection,
    select_herding,
    select_kcenter_greedy,
    select_uncertainty_entropy,
)
from .cscore import FilterParams, homogeneity_scores, surviving_positions
from .data import EmbeddingSet, ValidationError, set_digest, unit_normalized
from .dimred import fit_projection, transform
from .index import VectorIndex, build_index, top_labels
from .probe import train_probe
from .selection import Subset, select_clustered, select_uniform

BUDGETED_KINDS = ("uniform", "kcenter", "herding", "entropy")
CLUSTERING_KINDS = ("kmeans", "density")


@dataclass
class EvalReport:
    config: dict
    metrics: dict[str, float]
    db_size: int
    mean_query_micros: float
    median_query_micros: float
    per_class_top1: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "metrics": self.metrics,
            "db_size": self.db_size,
            "mean_query_micros": self.mean_query_micros,
            "median_query_micros": self.median_query_micros,
            "per_class_top1": self.per_class_top1,
        }


def evaluate_topk(
    index: VectorIndex,
    test: EmbeddingSet,
    ks: Sequence[int] = (1, 5, 20),
    config: dict | None = None,
    repetitions: int = 1,
) -> EvalReport:
    """Hit rate at each k: the fraction of test queries whose top-k neighbors
    contain at least one entry of the query's label. Also records per-class
    top-1 accuracy and per-query latency over ``repetitions`` timed passes."""
    if len(index) == 0:
        raise ValidationError("cannot evaluate an empty index")
    if len(test) == 0:
        raise ValidationError("cannot evaluate an empty test set")
    if test.dimension != index.dimension:
        raise ValidationError(
            f"test dimension {test.dimension} does not match index dimension {index.dimension}"
        )
    ks = tuple(int(k) for k in ks)
    if any(k < 1 for k in ks):
        raise ValidationError("every k must be >= 1")
    max_k = max(ks)
    queries = test.vectors.astype(np.float64)

    hits = {k: 0 for k in ks}
    class_total: dict[int, int] = {}
    class_hit: dict[int, int] = {}
    pass_seconds = []
    for rep in range(max(repetitions, 1)):
        start = time.perf_counter()
        for i in range(len(test)):
            labels = top_labels(index, queries[i], max_k)
            if rep == 0:
                q_label = int(test.labels[i])
                for k in ks:
                    hits[k] += int(np.any(labels[:k] == q_label))
                class_total[q_label] = class_total.get(q_label, 0) + 1
                class_hit[q_label] = class_hit.get(q_label, 0) + int(labels[0] == q_label)
        pass_seconds.append(time.perf_counter() - start)

    micros = [s / len(test) * 1e6 for s in pass_seconds]
    per_class = {
        test.vocabulary[label]: class_hit[label] / class_total[label]
        for label in sorted(class_total)
    }
    return EvalReport(
        config=dict(config or {}),
        metrics={f"top{k}": hits[k] / len(test) for k in ks},
        db_size=len(index),
        mean_query_micros=float(np.mean(micros)),
        median_query_micros=float(statistics.median(micros)),
        per_class_top1=per_class,
    )


# ---------------------------------------------------------------------------
# Timing curve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimingPoint:
    size: int
    mean_query_micros: float
    median_query_micros: float
    stddev_micros: float


def timing_curve(
    dataset: EmbeddingSet,
    sizes: Sequence[int],
    query_batch: EmbeddingSet,
    repetitions: int = 3,
    k: int = 1,
) -> list[TimingPoint]:
    """Per-query latency against index size, using size-prefixes of the set.

    One warm-up pass per size is excluded from the statistics; the monotonic
    clock times whole batch passes.
    """
    if len(query_batch) == 0:
        raise ValidationError("query batch must be non-empty")
    if repetitions < 1:
        raise ValidationError("repetitions must be >= 1")
    for size in sizes:
        if size < 1 or size > len(dataset):
            raise ValidationError(f"size {size} outside [1, {len(dataset)}]")
    queries = query_batch.vectors.astype(np.float64)
    points = []
    for size in sizes:
        index = build_index(dataset.take(np.arange(size)))
        for i in range(len(query_batch)):  # warm-up
            top_labels(index, queries[i], k)
        rep_micros = []
        for _ in range(repetitions):
            start = time.perf_counter()
            for i in range(len(query_batch)):
                top_labels(index, queries[i], k)
            rep_micros.append((time.perf_counter() - start) / len(query_batch) * 1e6)
        points.append(
            TimingPoint(
                size=int(size),
                mean_query_micros=float(np.mean(rep_micros)),
                median_query_micros=float(statistics.median(rep_micros)),
                stddev_micros=float(np.std(rep_micros)),
            )
        )
    return points


def fit_time_vs_size(points: Sequence[TimingPoint]) -> tuple[float, float]:
    """Least-squares slope of mean time vs size and the fit's R^2."""
    x = np.array([p.size for p in points], dtype=np.float64)
    y = np.array([p.mean_query_micros for p in points], dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodConfig:
    """One selection method plus its fixed hyperparameters.

    Budgeted kinds (uniform, kcenter, herding, entropy) consume the sweep's
    fraction axis; clustering kinds (kmeans, density) size themselves from
    their own cluster parameters. ``use_cscore`` switches on the filtering
    stage, which also activates the neighbor/threshold/components axes.
    """

    kind: str
    name: str = ""
    balanced: bool = False
    representative: str = "medoid"
    k_per_class: int = 20
    min_cluster_size: int = 3
    max_iters: int = 100
    use_cscore: bool = False
    cscore_min_keep: int = 1
    entropy_direction: str = EntropyDirection.KEEP_LOW_ENTROPY.value
    probe_epochs: int = 30
    probe_lr: float = 0.1

    def __post_init__(self):
        if self.kind not in BUDGETED_KINDS + CLUSTERING_KINDS:
            raise ValidationError(f"unknown method kind {self.kind!r}")
        if self.representative not in ("centroid", "medoid"):
            raise ValidationError(f"unknown representative {self.representative!r}")
        EntropyDirection(self.entropy_direction)
        if not self.name:
            object.__setattr__(self, "name", ("cs-" if self.use_cscore else "") + self.kind)

    @classmethod
    def from_dict(cls, raw: dict) -> "MethodConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ValidationError(f"unknown method config keys: {sorted(unknown)}")
        if "kind" not in raw:
            raise ValidationError("method config requires a 'kind'")
        return cls(**raw)


_DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class SweepSpec:
    methods: tuple[MethodConfig, ...]
    fractions: tuple[float, ...] = _DEFAULT_FRACTIONS
    cscore_neighbors: tuple[int, ...] = (10,)
    thresholds: tuple[float, ...] = (0.5,)
    components: tuple[int | None, ...] = (None,)
    ks: tuple[int, ...] = (1, 5, 20)
    repetitions: int = 1
    seeds: tuple[int, ...] = (0,)

    def __post_init__(self):
        if not self.methods:
            raise ValidationError("sweep needs at least one method")
        if any(not 0.0 < f <= 1.0 for f in self.fractions):
            raise ValidationError("fractions must lie in (0, 1]")
        if any(not 0.0 <= t <= 1.0 for t in self.thresholds):
            raise ValidationError("thresholds must lie in [0, 1]")
        if any(n < 1 for n in self.cscore_neighbors):
            raise ValidationError("cscore_neighbors must be >= 1")
        if any(c is not None and c < 1 for c in self.components):
            raise ValidationError("components must be >= 1 (or null)")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        if not self.seeds:
            raise ValidationError("sweep needs at least one seed")

    def cells(self) -> list[dict]:
        """Cartesian product over the axes each method actually consumes."""
        cells = []
        for method in self.methods:
            fraction_axis = self.fractions if method.kind in BUDGETED_KINDS else (None,)
            neighbor_axis = self.cscore_neighbors if method.use_cscore else (None,)
            threshold_axis = self.thresholds if method.use_cscore else (None,)
            component_axis = self.components if method.use_cscore else (None,)
            for fraction in fraction_axis:
                for n_neighbors in neighbor_axis:
                    for threshold in threshold_axis:
                        for components in component_axis:
                            for seed in self.seeds:
                                cells.append(
                                    {
                                        "method": method,
                                        "fraction": fraction,
                                        "n_neighbors": n_neighbors,
                                        "threshold": threshold,
                                        "components": components,
                                        "seed": seed,
                                    }
                                )
        return cells


def _normalized_copy(dataset: EmbeddingSet) -> EmbeddingSet:
    return EmbeddingSet(
        unit_normalized(dataset.vectors).astype(np.float32),
        dataset.ids,
        dataset.labels,
        dataset.splits,
        dataset.vocabulary,
    )


def select_for_cell(
    train: EmbeddingSet,
    method: MethodConfig,
    fraction: float | None,
    n_neighbors: int | None,
    threshold: float | None,
    components: int | None,
    seed: int,
) -> Subset:
    """Selection stage of one sweep cell: reduce, filter, select."""
    work = train
    cluster_space = None
    if method.use_cscore:
        scored_space = work
        if components is not None:
            projection = fit_projection(work, components)
            scored_space = transform(projection, work)
        table = homogeneity_scores(scored_space, n_neighbors)
        params = FilterParams(
            n_neighbors=n_neighbors,
            threshold=threshold,
            min_keep_per_class=method.cscore_min_keep,
        )
        positions = surviving_positions(work, table, params)
        work = work.take(positions)
        if components is not None:
            cluster_space = scored_space.take(positions)

    if method.kind == "uniform":
        return select_uniform(work, fraction, method.balanced, seed)
    if method.kind == "kcenter":
        return select_kcenter_greedy(work, CoresetBudget(fraction, method.balanced), seed)
    if method.kind == "herding":
        return select_herding(work, CoresetBudget(fraction, method.balanced))
    if method.kind == "entropy":
        probe = train_probe(
            _normalized_copy(work), epochs=method.probe_epochs, learning_rate=method.probe_lr, seed=seed
        )
        return select_uncertainty_entropy(
            work,
            CoresetBudget(fraction, method.balanced),
            probe,
            EntropyDirection(method.entropy_direction),
        )
    return select_clustered(
        work,
        method.kind,
        method.representative,
        k_per_class=method.k_per_class,
        min_cluster_size=method.min_cluster_size,
        max_iters=method.max_iters,
        seed=seed,
        assign_on=cluster_space,
    )


def run_cell(
    train: EmbeddingSet,
    test: EmbeddingSet,
    method: MethodConfig,
    fraction: float | None,
    n_neighbors: int | None,
    threshold: float | None,
    components: int | None,
    seed: int,
    ks: Sequence[int] = (1, 5, 20),
    repetitions: int = 1,
    train_digest: str | None = None,
    test_digest: str | None = None,
) -> EvalReport:
    subset = select_for_cell(train, method, fraction, n_neighbors, threshold, components, seed)
    index = build_index(subset)
    config = {
        "method": method.name,
        "kind": method.kind,
        "balanced": method.balanced,
        "representative": method.representative if method.kind in CLUSTERING_KINDS else None,
        "k_per_class": method.k_per_class if method.kind == "kmeans" else None,
        "min_cluster_size": method.min_cluster_size if method.kind == "density" else None,
        "entropy_direction": method.entropy_direction if method.kind == "entropy" else None,
        "fraction": fraction,
        "n_neighbors": n_neighbors,
        "threshold": threshold,
        "cscore_min_keep": method.cscore_min_keep if method.use_cscore else None,
        "reducer": "pca" if (method.use_cscore and components is not None) else "none",
        "components": components,
        "seed": seed,
        "ks": list(ks),
        "train_digest": train_digest or set_digest(train),
        "test_digest": test_digest or set_digest(test),
    }
    return evaluate_topk(index, test, ks=ks, config=config, repetitions=repetitions)


@dataclass
class SweepResult:
    reports: list[EvalReport]
    best_per_method: dict[str, EvalReport] = field(default_factory=dict)


def run_sweep(
    spec: SweepSpec, train: EmbeddingSet, test: EmbeddingSet, jobs: int = 1
) -> SweepResult:
    """Evaluate every cell; results come back ordered by cell index regardless
    of worker scheduling. The best-per-method summary follows the convention of
    reporting the best observed hyperparameter combination (max top-1)."""
    if len(train) == 0 or len(test) == 0:
        raise ValidationError("sweep needs non-empty train and test sets")
    cells = spec.cells()
    train_digest = set_digest(train)
    test_digest = set_digest(test)

    def evaluate_cell(cell: dict) -> EvalReport:
        return run_cell(
            train,
            test,
            cell["method"],
            cell["fraction"],
            cell["n_neighbors"],
            cell["threshold"],
            cell["components"],
            cell["seed"],
            ks=spec.ks,
            repetitions=spec.repetitions,
            train_digest=train_digest,
            test_digest=test_digest,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(evaluate_cell, cells))
    else:
        reports = [evaluate_cell(cell) for cell in cells]

    top1_key = f"top{min(spec.ks)}"
    best: dict[str, EvalReport] = {}
    for report in reports:
        name = report.config["method"]
        if name not in best or report.metrics[top1_key] > best[name].metrics[top1_key]:
            best[name] = report
    return SweepResult(reports=reports, best_per_method=best)


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------

CSV_COLUMNS = [
    "method",
    "fraction",
    "n_neighbors",
    "threshold",
    "reducer",
    "components",
    "seed",
    "db_size",
    "top1",
    "top5",
    "top20",
    "mean_query_micros",
]


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def reports_to_csv(reports: Sequence[EvalReport], path: str | Path) -> None:
    """One row per cell, columns in the order plot tooling expects."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            cfg = report.config
            writer.writerow(
                [
                    _csv_value(cfg.get("method")),
                    _csv_value(cfg.get("fraction")),
                    _csv_value(cfg.get("n_neighbors")),
                    _csv_value(cfg.get("threshold")),
                    _csv_value(cfg.get("reducer")),
                    _csv_value(cfg.get("components")),
                    _csv_value(cfg.get("seed")),
                    _csv_value(report.db_size),
                    _csv_value(report.metrics.get("top1")),
                    _csv_value(report.metrics.get("top5")),
                    _csv_value(report.metrics.get("top20")),
                    f"{report.mean_query_micros:.3f}",
                ]
            )


def reports_to_json(result: SweepResult, path: str | Path) -> None:
    payload = {
        "reports": [r.to_dict() for r in result.reports],
        "best_per_method": {name: r.to_dict() for name, r in result.best_per_method.items()},
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))
