"""Coreset selection baselines: k-Center Greedy, Herding, Uncertainty-Entropy.

All three return original records only. k-Center works in cosine distance
(1 - similarity) to match the retrieval geometry; herding matches the class
(or global) mean in plain Euclidean space; uncertainty ranks records by the
Shannon entropy of a trained linear probe's class probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import EmbeddingSet, ValidationError, _snapped_ceil, unit_normalized
from .probe import Classifier, predict_proba
from .selection import Subset, _per_class_rngs, subset_from_positions


@dataclass(frozen=True)
class CoresetBudget:
    fraction: float
    balanced: bool = False

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValidationError("budget fraction must lie in (0, 1]")

    def count(self, n: int) -> int:
        return min(_snapped_ceil(self.fraction * n), n)


class EntropyDirection(Enum):
    KEEP_LOW_ENTROPY = "keep_low_entropy"
    KEEP_HIGH_ENTROPY = "keep_high_entropy"


def _argmax_lowest_id(values: np.ndarray, ids: np.ndarray) -> int:
    best = np.flatnonzero(values == values.max())
    return int(best[np.argmin(ids[best])])


def _kcenter_traversal(unit: np.ndarray, ids: np.ndarray, count: int, rng) -> list[int]:
    n = unit.shape[0]
    start = int(rng.integers(n))
    chosen = [start]
    min_dist = 1.0 - unit @ unit[start]
    min_dist[start] = -1.0  # chosen records can never win the argmax again
    for _ in range(count - 1):
        pick = _argmax_lowest_id(min_dist, ids)
        chosen.append(pick)
        min_dist = np.minimum(min_dist, 1.0 - unit @ unit[pick])
        min_dist[pick] = -1.0
    return chosen


def select_kcenter_greedy(dataset: EmbeddingSet, budget: CoresetBudget, seed: int) -> Subset:
    """Farthest-first traversal from a seed-chosen start record.

    Each step adds the record maximizing its minimum cosine distance to the
    already-chosen set (ties by ascending id); entries keep traversal order.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot select from an empty set")
    unit = unit_normalized(dataset.vectors)
    params = {"fraction": budget.fraction, "balanced": budget.balanced, "seed": seed}
    if budget.balanced:
        by_class = dataset.positions_by_class()
        rngs = _per_class_rngs(seed, sorted(by_class))
        positions: list[int] = []
        for label in sorted(by_class):
            pos = by_class[label]
            local = _kcenter_traversal(
                unit[pos], dataset.ids[pos], budget.count(len(pos)), rngs[label]
            )
            positions.extend(int(pos[i]) for i in local)
    else:
        rng = np.random.default_rng(seed)
        positions = _kcenter_traversal(unit, dataset.ids, budget.count(len(dataset)), rng)
    return subset_from_positions(dataset, positions, method="kcenter", params=params)


def _herding_order(x: np.ndarray, ids: np.ndarray, count: int) -> list[int]:
    """Greedy picks minimizing ||mean - mean(chosen + candidate)||_2 per step."""
    n = x.shape[0]
    mean = x.mean(axis=0)
    x_sq = np.sum(x**2, axis=1)
    chosen: list[int] = []
    taken = np.zeros(n, dtype=bool)
    running_sum = np.zeros(x.shape[1])
    for t in range(count):
        # minimizing ||(S + v) - (t+1) mu||^2 over candidates v
        offset = running_sum - (t + 1) * mean
        values = x_sq + 2.0 * (x @ offset)  # + const ||offset||^2
        values[taken] = np.inf
        best = np.flatnonzero(values == values.min())
        pick = int(best[np.argmin(ids[best])])
        chosen.append(pick)
        taken[pick] = True
        running_sum += x[pick]
    return chosen


def select_herding(dataset: EmbeddingSet, budget: CoresetBudget) -> Subset:
    """Greedy mean matching; fully deterministic (no seed)."""
    if len(dataset) == 0:
        raise ValidationError("cannot select from an empty set")
    params = {"fraction": budget.fraction, "balanced": budget.balanced}
    x = dataset.vectors.astype(np.float64)
    if budget.balanced:
        positions: list[int] = []
        by_class = dataset.positions_by_class()
        for label in sorted(by_class):
            pos = by_class[label]
            local = _herding_order(x[pos], dataset.ids[pos], budget.count(len(pos)))
            positions.extend(int(pos[i]) for i in local)
    else:
        positions = _herding_order(x, dataset.ids, budget.count(len(dataset)))
    return subset_from_positions(dataset, positions, method="herding", params=params)


def shannon_entropy(probabilities: np.ndarray) -> np.ndarray:
    """Row-wise Shannon entropy in nats; 0 log 0 contributes nothing."""
    p = np.asarray(probabilities, dtype=np.float64)
    terms = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -np.sum(terms, axis=-1)


def select_uncertainty_entropy(
    dataset: EmbeddingSet,
    budget: CoresetBudget,
    probe: Classifier,
    direction: EntropyDirection = EntropyDirection.KEEP_LOW_ENTROPY,
) -> Subset:
    """Keep the budgeted count from one end of the entropy ranking.

    The probe scores unit-normalized vectors, matching how the rest of the
    pipeline feeds it. Ties (and the degenerate all-equal case) fall back to
    ascending id.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot select from an empty set")
    if probe.dimension != dataset.dimension:
        raise ValidationError(
            f"probe dimension {probe.dimension} does not match set dimension {dataset.dimension}"
        )
    if probe.class_count != len(dataset.vocabulary):
        raise ValidationError(
            f"probe has {probe.class_count} classes, set vocabulary has {len(dataset.vocabulary)}"
        )
    unit = unit_normalized(dataset.vectors, zero_safe=True)
    entropy = shannon_entropy(predict_proba(probe, unit))
    key = entropy if direction is EntropyDirection.KEEP_LOW_ENTROPY else -entropy
    params = {
        "fraction": budget.fraction,
        "balanced": budget.balanced,
        "direction": direction.value,
    }
    if budget.balanced:
        positions: list[int] = []
        by_class = dataset.positions_by_class()
        for label in sorted(by_class):
            pos = by_class[label]
            order = np.lexsort((dataset.ids[pos], key[pos]))
            positions.extend(int(pos[i]) for i in order[: budget.count(len(pos))])
    else:
        order = np.lexsort((dataset.ids, key))
        positions = [int(i) for i in order[: budget.count(len(dataset))]]
    return subset_from_positions(dataset, positions, method="entropy", params=params)
