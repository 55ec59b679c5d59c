"""Class-weighted cross-entropy, weight derivation, and Macro F1.

The loss for a one-hot target t is ``-w_t * ln(p_t)`` (natural log, so
the softmax gradient is exact). Category weights default to inverse
frequency, ``w_c = N / (C * n_c)``, which is 1 everywhere for balanced
counts and grows for underrepresented categories.

Macro F1 averages per-category F1 over the full fixed taxonomy; any
0/0 in precision, recall, or F1 is defined as 0, so never predicting a
rare category is penalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, NonFiniteInput, ZeroCategoryCount
from .ingestion import CATEGORIES

LOG_EPS = 1e-12

SCHEME_INVERSE_FREQUENCY = "inverse_frequency"
SCHEME_UNIFORM = "uniform"
SCHEME_MANUAL = "manual"


@dataclass(frozen=True)
class CategoryWeights:
    weights: tuple[float, ...]
    source_counts: tuple[int, ...]
    scheme: str

    def __post_init__(self):
        if len(self.weights) < 2:
            raise ValueError("need at least 2 categories")
        if any(w <= 0.0 for w in self.weights):
            raise ValueError(f"weights must be positive, got {self.weights}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)


def uniform_weights(num_categories: int = len(CATEGORIES)) -> CategoryWeights:
    return CategoryWeights((1.0,) * num_categories, (0,) * num_categories, SCHEME_UNIFORM)


def manual_weights(weights: Sequence[float]) -> CategoryWeights:
    return CategoryWeights(tuple(float(w) for w in weights), (0,) * len(weights), SCHEME_MANUAL)


def inverse_frequency_weights(counts: Sequence[int]) -> CategoryWeights:
    """w_c = N / (C * n_c); equal counts give all-ones."""
    counts = tuple(int(n) for n in counts)
    if len(counts) < 2:
        raise ValueError("need at least 2 categories")
    for c, n in enumerate(counts):
        if n <= 0:
            raise ZeroCategoryCount(c)
    total = sum(counts)
    num = len(counts)
    weights = tuple(total / (num * n) for n in counts)
    return CategoryWeights(weights, counts, SCHEME_INVERSE_FREQUENCY)


def _check_prob_target(probs: np.ndarray, target: np.ndarray, weights: CategoryWeights) -> int:
    if probs.shape != target.shape or probs.shape != (len(weights.weights),):
        raise ValueError(
            f"probs {probs.shape}, target {target.shape}, weights {len(weights.weights)} disagree"
        )
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    if abs(float(probs.sum()) - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {float(probs.sum())}, expected 1")
    if not np.all((target == 0.0) | (target == 1.0)) or int(target.sum()) != 1:
        raise ValueError("target must be one-hot")
    return int(np.argmax(target))


def weighted_ce(probs, target, weights: CategoryWeights) -> float:
    """-w_t * ln(p_t); a zero p_t is clamped to 1e-12, never infinite."""
    probs = np.asarray(probs, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    t = _check_prob_target(probs, target, weights)
    p_t = max(float(probs[t]), LOG_EPS)
    return float(-weights.weights[t] * np.log(p_t))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def weighted_ce_from_logits(logits, target, weights: CategoryWeights) -> tuple[float, np.ndarray]:
    """Loss through a stable softmax plus its analytic gradient.

    grad_j = w_t * (softmax(logits)_j - target_j), which sums to zero.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteInput(f"logits {logits}")
    target = np.asarray(target, dtype=np.float64)
    probs = softmax(logits)
    t = _check_prob_target(probs, target, weights)
    loss = float(-weights.weights[t] * np.log(max(float(probs[t]), LOG_EPS)))
    grad = weights.weights[t] * (probs - target)
    return loss, grad


@dataclass
class ConfusionMatrix:
    """C x C integer counts; rows are true categories, columns predicted."""

    counts: np.ndarray
    labels: tuple[str, ...] = CATEGORIES

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise ValueError(f"expected {(n, n)} counts, got {self.counts.shape}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(true_labels: Sequence[str], predicted_labels: Sequence[str]) -> ConfusionMatrix:
    """Tally (true, predicted) pairs over the fixed taxonomy."""
    if len(true_labels) != len(predicted_labels):
        raise LengthMismatch(
            f"{len(true_labels)} true vs {len(predicted_labels)} predicted labels"
        )
    index = {label: i for i, label in enumerate(CATEGORIES)}
    counts = np.zeros((len(CATEGORIES), len(CATEGORIES)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts)


def macro_f1(cm: ConfusionMatrix) -> tuple[float, np.ndarray]:
    """Unweighted mean of per-category F1 over the full taxonomy.

    Precision, recall, and F1 use the 0/0 -> 0 convention, so categories
    absent from both truth and predictions contribute 0 to the mean.
    """
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    precision = np.divide(tp, tp + fp, out=np.zeros_like(tp), where=(tp + fp) > 0)
    recall = np.divide(tp, tp + fn, out=np.zeros_like(tp), where=(tp + fn) > 0)
    denom = precision + recall
    f1 = np.divide(2.0 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(f1.mean()), f1
