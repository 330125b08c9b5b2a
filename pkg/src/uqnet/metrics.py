"""Classification metrics: confusion matrix, precision/recall/F1, accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Count matrix with rows = true class, columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"shape mismatch: {y_true.shape} vs {y_pred.shape}")
    for name, arr in (("true", y_true), ("predicted", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"{name} labels out of range [0, {n_classes})")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y_true, y_pred), 1)
    return m


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


@dataclass
class ClassificationMetrics:
    confusion: np.ndarray
    precision: np.ndarray = field(init=False)   # per class
    recall: np.ndarray = field(init=False)
    f1: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.confusion, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"confusion matrix must be square, got {m.shape}")
        self.confusion = m
        diag = np.diag(m).astype(np.float64)
        self.precision = _safe_div(diag, m.sum(axis=0).astype(np.float64))
        self.recall = _safe_div(diag, m.sum(axis=1).astype(np.float64))
        self.f1 = _safe_div(2.0 * self.precision * self.recall, self.precision + self.recall)

    @classmethod
    def from_predictions(cls, y_true, y_pred, n_classes: int) -> "ClassificationMetrics":
        return cls(confusion_matrix(y_true, y_pred, n_classes))

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    @property
    def accuracy(self) -> float:
        return float(np.diag(self.confusion).sum() / self.confusion.sum())

    @property
    def macro_precision(self) -> float:
        return float(self.precision.mean())

    @property
    def macro_recall(self) -> float:
        return float(self.recall.mean())

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())
