"""Auxiliary linear classifier over embeddings.

Multinomial logistic regression trained with mini-batch gradient descent on
cross-entropy. Deliberately small: a single affine layer plus softmax, which
keeps gradients analytically checkable against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import EmbeddingSet, ValidationError, set_digest

PROBE_MAGIC = b"PRB1"


@dataclass
class Classifier:
    weights: np.ndarray  # (class_count, dimension) float64
    bias: np.ndarray  # (class_count,) float64
    trained_on: str = ""  # digest of the training set, "" if loaded from disk
    loss_trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValidationError("classifier parameter shapes are inconsistent")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValidationError("classifier parameters must be finite")

    @property
    def class_count(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _loss_and_grads(
    weights: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    weight_decay: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy over the batch and its analytic gradients."""
    probs = _softmax(x @ weights.T + bias)
    n = x.shape[0]
    loss = float(-np.mean(np.log(probs[np.arange(n), y])))
    if weight_decay:
        loss += 0.5 * weight_decay * float(np.sum(weights**2))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = delta.T @ x
    if weight_decay:
        grad_w += weight_decay * weights
    return loss, grad_w, delta.sum(axis=0)


def train_probe(
    dataset: EmbeddingSet,
    epochs: int,
    learning_rate: float,
    seed: int,
    batch_size: int = 64,
    weight_decay: float = 0.0,
) -> Classifier:
    """Train on the set's label indices; needs at least two distinct classes.

    Parameters start at zero (the objective is convex), so the seed only
    controls the per-epoch shuffle. The last partial batch is kept. The
    returned classifier carries the per-epoch mean loss trace.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot train on an empty set")
    if len(np.unique(dataset.labels)) < 2:
        raise ValidationError("training set must contain at least two classes")
    if epochs < 1 or learning_rate <= 0.0 or batch_size < 1:
        raise ValidationError("epochs, learning_rate and batch_size must be positive")
    x = dataset.vectors.astype(np.float64)
    y = dataset.labels.astype(np.intp)
    c = len(dataset.vocabulary)
    weights = np.zeros((c, dataset.dimension))
    bias = np.zeros(c)
    rng = np.random.default_rng(seed)
    trace = []
    for _ in range(epochs):
        order = rng.permutation(len(dataset))
        batch_losses = []
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            loss, grad_w, grad_b = _loss_and_grads(weights, bias, x[batch], y[batch], weight_decay)
            weights -= learning_rate * grad_w
            bias -= learning_rate * grad_b
            batch_losses.append(loss)
        trace.append(float(np.mean(batch_losses)))
    return Classifier(weights, bias, trained_on=set_digest(dataset), loss_trace=tuple(trace))


def predict_proba(classifier: Classifier, vectors: np.ndarray) -> np.ndarray:
    """Softmax class probabilities for one vector or a matrix of rows."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.shape[-1] != classifier.dimension:
        raise ValidationError(
            f"input dimension {v.shape[-1]} does not match classifier dimension "
            f"{classifier.dimension}"
        )
    return _softmax(v @ classifier.weights.T + classifier.bias)


def probe_accuracy(classifier: Classifier, dataset: EmbeddingSet) -> float:
    """Fraction of records whose argmax probability matches the label."""
    if len(dataset) == 0:
        raise ValidationError("cannot evaluate accuracy on an empty set")
    if classifier.class_count != len(dataset.vocabulary):
        raise ValidationError("classifier and set vocabulary sizes differ")
    probs = predict_proba(classifier, dataset.vectors.astype(np.float64))
    predicted = np.argmax(probs, axis=1)
    return float(np.mean(predicted == dataset.labels))


def save_classifier(classifier: Classifier, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(PROBE_MAGIC)
        fh.write(struct.pack("<II", classifier.class_count, classifier.dimension))
        fh.write(classifier.weights.astype("<f4").tobytes())
        fh.write(classifier.bias.astype("<f4").tobytes())


def load_classifier(path: str | Path) -> Classifier:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != PROBE_MAGIC:
        raise ValidationError(f"not a classifier file: {path}")
    c, d = struct.unpack_from("<II", data, 4)
    expected = 12 + 4 * c * d + 4 * c
    if len(data) != expected:
        raise ValidationError(f"classifier file size mismatch: {path}")
    weights = np.frombuffer(data, dtype="<f4", count=c * d, offset=12).reshape(c, d)
    bias = np.frombuffer(data, dtype="<f4", count=c, offset=12 + 4 * c * d)
    return Classifier(weights, bias)
