"""Consensus voting over a pool of fitted classifiers.

Three rules: hard majority vote, weighted probability (soft) vote, and the
hybrid consensus that keeps agreeing predictions and defers to the soft
vote otherwise. The hybrid output therefore always equals the soft vote;
the disagreement count is reported because it is the only observable that
separates the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import stratified_split_indices
from .errors import ShapeError
from .metrics import f1_macro
from .models import ClassifierSpec, FittedModel, fit
from .models.base import KNN, MLP, SVM_RBF, TREE

WEIGHTS_UNIFORM = "uniform"
WEIGHTS_VALIDATION_F1 = "validation-f1"

#: Fraction of the training data held out when weights come from validation F1.
VALIDATION_FRACTION = 0.2


@dataclass(frozen=True)
class EnsembleConfig:
    """Member models over one shared class list, with nonnegative weights."""

    members: tuple[FittedModel, ...]
    weights: np.ndarray | None = None
    weights_mode: str = WEIGHTS_UNIFORM
    member_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.members) < 2:
            raise ValueError(f"an ensemble needs >= 2 members, got {len(self.members)}")
        first = self.members[0].classes
        for m in self.members[1:]:
            if not np.array_equal(m.classes, first):
                raise ValueError("all ensemble members must share one class list")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (len(self.members),):
                raise ValueError("one weight per member is required")
            if (w < 0).any() or not (w > 0).any():
                raise ValueError("weights must be nonnegative with at least one > 0")
            object.__setattr__(self, "weights", w)
        if not self.member_names:
            object.__setattr__(
                self, "member_names",
                tuple(f"{m.family}_{i}" for i, m in enumerate(self.members)),
            )

    @property
    def classes(self) -> np.ndarray:
        return self.members[0].classes


@dataclass(frozen=True)
class EnsembleResult:
    classes: tuple[str, ...]
    member_names: tuple[str, ...]
    per_member: dict[str, np.ndarray] = field(repr=False)
    hard: np.ndarray = field(repr=False)
    soft: np.ndarray = field(repr=False)
    soft_proba: np.ndarray = field(repr=False)
    hybrid: np.ndarray = field(repr=False)
    disagreements: int = 0
    weights: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    weights_mode: str = WEIGHTS_UNIFORM

    def to_json_dict(self, include_members: bool = True) -> dict:
        doc = {
            "kind": "ensemble_result",
            "classes": list(self.classes),
            "hard": self.hard.tolist(),
            "soft": self.soft.tolist(),
            "hybrid": self.hybrid.tolist(),
            "disagreements": self.disagreements,
            "weights": self.weights.tolist(),
            "weights_mode": self.weights_mode,
        }
        if include_members:
            doc["per_member_predictions"] = {
                name: pred.tolist() for name, pred in self.per_member.items()
            }
        return doc


def hard_vote(predictions: Sequence[np.ndarray], classes: Sequence[str]
              ) -> np.ndarray:
    """Per-sample modal class; ties resolve to the earlier class in the list."""
    if len(predictions) < 2:
        raise ValueError("hard vote needs >= 2 member prediction vectors")
    n = len(predictions[0])
    for p in predictions[1:]:
        if len(p) != n:
            raise ShapeError("member prediction vectors differ in length")
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    votes = np.zeros((n, len(classes)), dtype=np.int64)
    for p in predictions:
        for row, label in enumerate(p):
            votes[row, index[label]] += 1
    winners = np.argmax(votes, axis=1)  # first max -> class-list order
    return np.asarray(classes, dtype=object)[winners].astype(str)


def weighted_soft_vote(
    probas: Sequence[np.ndarray],
    weights: Sequence[float] | np.ndarray,
    classes: Sequence[str],
) -> tuple[np.ndarray, np.ndarray]:
    """Weighted average of member probabilities and its argmax labels."""
    if len(probas) < 2:
        raise ValueError("soft vote needs >= 2 member probability matrices")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(probas),):
        raise ValueError("one weight per member is required")
    if (w < 0).any() or w.sum() <= 0.0:
        raise ValueError("weights must be nonnegative and not all zero")
    shape = probas[0].shape
    for p in probas[1:]:
        if p.shape != shape:
            raise ShapeError("member probability matrices differ in shape")
    combined = np.zeros(shape)
    for wi, p in zip(w, probas):
        combined += wi * p
    combined /= w.sum()
    labels = np.asarray(list(classes), dtype=object)[
        np.argmax(combined, axis=1)
    ].astype(str)
    return labels, combined


def hybrid_consensus(hard: np.ndarray, soft: np.ndarray
                     ) -> tuple[np.ndarray, int]:
    """Keep the prediction where the votes agree, otherwise take the soft vote.

    Returns the consensus vector and the disagreement count.
    """
    hard = np.asarray(hard)
    soft = np.asarray(soft)
    if hard.shape != soft.shape:
        raise ShapeError(
            f"vote vectors differ in shape: {hard.shape} vs {soft.shape}"
        )
    disagreements = int((hard != soft).sum())
    return soft.copy(), disagreements


def default_member_specs(seed: int) -> list[tuple[str, ClassifierSpec]]:
    """The five-member pool: KNN, both tree criteria, RBF SVM, and the MLP."""
    return [
        ("knn", ClassifierSpec(KNN, seed=seed + 1)),
        ("tree_gini", ClassifierSpec(TREE, {"criterion": "gini"}, seed=seed + 2)),
        ("tree_entropy", ClassifierSpec(TREE, {"criterion": "entropy"}, seed=seed + 3)),
        ("svm_rbf", ClassifierSpec(SVM_RBF, seed=seed + 4)),
        ("mlp", ClassifierSpec(MLP, seed=seed + 5)),
    ]


def _validation_weights(
    specs: Sequence[tuple[str, ClassifierSpec]],
    X: np.ndarray,
    y: np.ndarray,
    seed: int,
) -> np.ndarray:
    """Macro-F1 of each member on an internal stratified validation fold."""
    train_idx, val_idx = stratified_split_indices(
        [str(v) for v in y], VALIDATION_FRACTION, seed
    )
    classes = sorted(set(str(v) for v in y))
    scores = []
    for _, spec in specs:
        model = fit(spec, X[train_idx], y[train_idx])
        scores.append(f1_macro(y[val_idx], model.predict(X[val_idx]), classes))
    w = np.asarray(scores, dtype=np.float64)
    if w.sum() <= 0.0:
        return np.ones(len(specs))
    return w


def train_ensemble(
    X,
    y,
    seed: int = 0,
    specs: Sequence[tuple[str, ClassifierSpec]] | None = None,
    weights_mode: str = WEIGHTS_UNIFORM,
) -> EnsembleConfig:
    """Fit the member pool on (X, y); weights are uniform or validation-F1."""
    if weights_mode not in (WEIGHTS_UNIFORM, WEIGHTS_VALIDATION_F1):
        raise ValueError(f"unknown weights mode {weights_mode!r}")
    if hasattr(X, "X"):
        X = X.X
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if specs is None:
        specs = default_member_specs(seed)
    if weights_mode == WEIGHTS_VALIDATION_F1:
        weights = _validation_weights(specs, X, y, seed)
    else:
        weights = np.ones(len(specs))
    members = tuple(fit(spec, X, y) for _, spec in specs)
    return EnsembleConfig(
        members=members,
        weights=weights,
        weights_mode=weights_mode,
        member_names=tuple(name for name, _ in specs),
    )


def ensemble_predict(config: EnsembleConfig, X) -> EnsembleResult:
    """Run all three voting rules over the member pool."""
    classes = config.classes.tolist()
    per_member: dict[str, np.ndarray] = {}
    probas = []
    preds = []
    for name, model in zip(config.member_names, config.members):
        proba = model.predict_proba(X)
        pred = config.classes[np.argmax(proba, axis=1)]
        per_member[name] = pred
        probas.append(proba)
        preds.append(pred)
    weights = (config.weights if config.weights is not None
               else np.ones(len(config.members)))
    hard = hard_vote(preds, classes)
    soft, combined = weighted_soft_vote(probas, weights, classes)
    hybrid, disagreements = hybrid_consensus(hard, soft)
    return EnsembleResult(
        classes=tuple(classes),
        member_names=config.member_names,
        per_member=per_member,
        hard=hard,
        soft=soft,
        soft_proba=combined,
        hybrid=hybrid,
        disagreements=disagreements,
        weights=weights,
        weights_mode=config.weights_mode,
    )
