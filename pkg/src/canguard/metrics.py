"""Imbalance-aware evaluation: confusion matrix, per-class report, aggregates.

Zero-division cells (a class never predicted, or absent from the truth)
resolve to 0, which keeps macro averages total over the full class list and
is exactly what exposes the accuracy trap on heavily imbalanced data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LabelError


@dataclass(frozen=True)
class EvalReport:
    """Per-class precision/recall/F1/support plus aggregate metrics."""

    classes: tuple[str, ...]
    confusion: np.ndarray  # (C, C) true x predicted counts
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    train_seconds: float | None = None
    predict_seconds: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "kind": "classification_report",
            "classes": list(self.classes),
            "confusion_matrix": self.confusion.tolist(),
            "per_class": [
                {
                    "class": c,
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i, c in enumerate(self.classes)
            ],
            "accuracy": self.accuracy,
            "macro_avg": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted_avg": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "train_seconds": self.train_seconds,
            "predict_seconds": self.predict_seconds,
        }

    def to_text(self) -> str:
        """Aligned table with 4-decimal metrics, one row per class."""
        width = max([len(c) for c in self.classes] + [len("Weighted Avg")])
        lines = [
            f"{'Class':<{width}}  Precision  Recall  F1-Score  Support"
        ]
        for i, c in enumerate(self.classes):
            lines.append(
                f"{c:<{width}}  {self.precision[i]:>9.4f}  {self.recall[i]:>6.4f}"
                f"  {self.f1[i]:>8.4f}  {int(self.support[i]):>7d}"
            )
        total = int(self.support.sum())
        lines.append(
            f"{'Macro Avg':<{width}}  {self.macro_precision:>9.4f}"
            f"  {self.macro_recall:>6.4f}  {self.macro_f1:>8.4f}  {total:>7d}"
        )
        lines.append(
            f"{'Weighted Avg':<{width}}  {self.weighted_precision:>9.4f}"
            f"  {self.weighted_recall:>6.4f}  {self.weighted_f1:>8.4f}  {total:>7d}"
        )
        lines.append(f"Accuracy: {self.accuracy:.4f}")
        lines.append(f"F1-Macro: {self.macro_f1:.4f}")
        if self.train_seconds is not None:
            lines.append(f"Train seconds: {self.train_seconds:.4f}")
        if self.predict_seconds is not None:
            lines.append(f"Predict seconds: {self.predict_seconds:.4f}")
        return "\n".join(lines)


def _encode(values: Sequence[str] | np.ndarray, classes: Sequence[str],
            role: str) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    out = np.empty(len(values), dtype=np.intp)
    for i, v in enumerate(values):
        try:
            out[i] = index[v]
        except KeyError:
            raise LabelError(
                f"{role} label {v!r} at position {i} is not in the class list"
            ) from None
    return out


def confusion_matrix(
    y_true: Sequence[str] | np.ndarray,
    y_pred: Sequence[str] | np.ndarray,
    classes: Sequence[str],
) -> np.ndarray:
    """Entry (i, j) counts samples of true class i predicted as class j."""
    if len(y_true) != len(y_pred):
        raise ValueError(
            f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted"
        )
    c = len(classes)
    if len(set(classes)) != c:
        raise ValueError("class list contains duplicates")
    ti = _encode(y_true, classes, "true")
    pi = _encode(y_pred, classes, "predicted")
    flat = np.bincount(ti * c + pi, minlength=c * c)
    return flat.reshape(c, c)


def classification_report(
    y_true: Sequence[str] | np.ndarray,
    y_pred: Sequence[str] | np.ndarray,
    classes: Sequence[str],
    train_seconds: float | None = None,
    predict_seconds: float | None = None,
) -> EvalReport:
    """Full evaluation report over an explicit ordered class list."""
    cm = confusion_matrix(y_true, y_pred, classes)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    tp = np.diag(cm).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)

    n = int(cm.sum())
    accuracy = float(tp.sum() / n) if n else 0.0
    weights = support / n if n else np.zeros_like(support, dtype=np.float64)
    return EvalReport(
        classes=tuple(classes),
        confusion=cm,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        accuracy=accuracy,
        macro_precision=float(precision.mean()) if len(classes) else 0.0,
        macro_recall=float(recall.mean()) if len(classes) else 0.0,
        macro_f1=float(f1.mean()) if len(classes) else 0.0,
        weighted_precision=float((weights * precision).sum()),
        weighted_recall=float((weights * recall).sum()),
        weighted_f1=float((weights * f1).sum()),
        train_seconds=train_seconds,
        predict_seconds=predict_seconds,
    )


def f1_macro(
    y_true: Sequence[str] | np.ndarray,
    y_pred: Sequence[str] | np.ndarray,
    classes: Sequence[str],
) -> float:
    """Unweighted mean of per-class F1 over the full class list."""
    return classification_report(y_true, y_pred, classes).macro_f1
