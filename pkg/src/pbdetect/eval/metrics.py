"""Confusion matrices and macro-averaged classification metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or (c < 0).any():
            raise ValueError("confusion matrix must be square with non-negative counts")
        object.__setattr__(self, "counts", c)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def tolist(self) -> list[list[int]]:
        return self.counts.tolist()


def confusion(truth, predictions, n_classes: int) -> ConfusionMatrix:
    t = np.asarray(truth, dtype=np.int64).ravel()
    p = np.asarray(predictions, dtype=np.int64).ravel()
    if t.shape != p.shape:
        raise ValueError(f"{t.size} truth labels but {p.size} predictions")
    for name, a in (("truth", t), ("prediction", p)):
        if a.size and (a.min() < 0 or a.max() >= n_classes):
            raise ValueError(f"{name} label outside [0, {n_classes})")
    counts = np.bincount(t * n_classes + p, minlength=n_classes * n_classes)
    return ConfusionMatrix(counts.reshape(n_classes, n_classes))


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    f_mean: float
    precision_mean: float
    recall_mean: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    confusion: ConfusionMatrix
    fold: int | None = None

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "accuracy": self.accuracy,
            "f_mean": self.f_mean,
            "precision_mean": self.precision_mean,
            "recall_mean": self.recall_mean,
            "precision": list(self.precision),
            "recall": list(self.recall),
            "f1": list(self.f1),
            "confusion": self.confusion.tolist(),
            "support": self.confusion.counts.sum(axis=1).tolist(),
        }


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # a class nobody predicted (or nobody has) scores 0, not NaN
    out = np.zeros(num.shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def metrics(cm: ConfusionMatrix, fold: int | None = None) -> MetricsReport:
    if cm.total == 0:
        raise ValueError("metrics of an empty confusion matrix are undefined")
    c = cm.counts.astype(np.float64)
    diag = np.diag(c)
    precision = _ratio(diag, c.sum(axis=0))
    recall = _ratio(diag, c.sum(axis=1))
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    return MetricsReport(
        accuracy=float(diag.sum() / c.sum()),
        f_mean=float(f1.mean()),
        precision_mean=float(precision.mean()),
        recall_mean=float(recall.mean()),
        precision=tuple(precision.tolist()),
        recall=tuple(recall.tolist()),
        f1=tuple(f1.tolist()),
        confusion=cm,
        fold=fold,
    )


def majority_class(labels, n_classes: int) -> int:
    """Most frequent class; ties go to the lowest index."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64).ravel(), minlength=n_classes)
    return int(np.argmax(counts))


def majority_baseline(train_labels, test_labels, n_classes: int) -> ConfusionMatrix:
    """Confusion matrix of always predicting the training set's majority class."""
    test = np.asarray(test_labels, dtype=np.int64).ravel()
    return confusion(test, np.full(test.shape, majority_class(train_labels, n_classes)), n_classes)
