"""Classifier specs, the fitted-model contract, and fit/predict dispatch.

Every family exposes the same surface: ``fit`` returns a FittedModel whose
class list is the sorted distinct training labels, ``predict_proba`` rows
sum to 1, and ``predict`` is the probability argmax with ties resolved by
class-list order. Training is deterministic given the spec seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import FitError, FormatError, ShapeError

LOGREG = "LOGREG"
TREE = "TREE"
FOREST = "FOREST"
KNN = "KNN"
SVM_RBF = "SVM_RBF"
MLP = "MLP"
CNN1D = "CNN1D"
FAMILIES = (LOGREG, TREE, FOREST, KNN, SVM_RBF, MLP, CNN1D)

MODEL_SCHEMA_VERSION = 1

DEFAULT_PARAMS: dict[str, dict] = {
    LOGREG: {"learning_rate": 0.1, "epochs": 500, "l2": 1e-4},
    TREE: {"criterion": "gini", "max_depth": None, "min_samples_split": 2},
    FOREST: {"n_trees": 100, "bootstrap": True, "max_features": "sqrt",
             "criterion": "gini", "max_depth": None, "min_samples_split": 2,
             "n_jobs": 1},
    KNN: {"k": 5, "distance_eps": 1e-9},
    SVM_RBF: {"c": 1.0, "gamma": None, "tol": 1e-3, "max_passes": 10_000},
    MLP: {"hidden": (64, 32), "learning_rate": 1e-3, "beta1": 0.9,
          "beta2": 0.999, "epochs": 200, "batch_size": 64},
    CNN1D: {"filters": 16, "kernel": 3, "learning_rate": 1e-3, "beta1": 0.9,
            "beta2": 0.999, "epochs": 200, "batch_size": 64},
}


def _validate_params(family: str, params: Mapping) -> dict:
    merged = dict(DEFAULT_PARAMS[family])
    unknown = set(params) - set(merged)
    if unknown:
        raise ValueError(f"{family}: unknown hyperparameters {sorted(unknown)}")
    merged.update(params)

    def positive(key):
        if not merged[key] > 0:
            raise ValueError(f"{family}: {key} must be > 0, got {merged[key]}")

    if family == LOGREG:
        positive("learning_rate")
        positive("epochs")
        if merged["l2"] < 0:
            raise ValueError(f"{family}: l2 must be >= 0")
    elif family in (TREE, FOREST):
        if merged["criterion"] not in ("gini", "entropy"):
            raise ValueError(f"{family}: criterion must be gini or entropy")
        if merged["min_samples_split"] < 2:
            raise ValueError(f"{family}: min_samples_split must be >= 2")
        if merged["max_depth"] is not None and merged["max_depth"] < 1:
            raise ValueError(f"{family}: max_depth must be >= 1 or None")
        if family == FOREST:
            positive("n_trees")
            positive("n_jobs")
            mf = merged["max_features"]
            if not (mf is None or mf == "sqrt" or (isinstance(mf, int) and mf >= 1)):
                raise ValueError(f"{family}: max_features must be None, 'sqrt' or int >= 1")
    elif family == KNN:
        if merged["k"] < 1:
            raise ValueError(f"{family}: k must be >= 1")
        positive("distance_eps")
    elif family == SVM_RBF:
        positive("c")
        positive("tol")
        positive("max_passes")
        if merged["gamma"] is not None and merged["gamma"] <= 0:
            raise ValueError(f"{family}: gamma must be > 0 or None")
    elif family in (MLP, CNN1D):
        positive("learning_rate")
        positive("epochs")
        positive("batch_size")
        if family == MLP:
            hidden = tuple(int(h) for h in merged["hidden"])
            if not hidden or any(h < 1 for h in hidden):
                raise ValueError(f"{family}: hidden sizes must be positive")
            merged["hidden"] = hidden
        else:
            positive("filters")
            if merged["kernel"] < 1:
                raise ValueError(f"{family}: kernel must be >= 1")
    return merged


@dataclass(frozen=True)
class ClassifierSpec:
    """One classifier family with resolved hyperparameters and a seed."""

    family: str
    params: Mapping = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected {FAMILIES}")
        object.__setattr__(self, "params", _validate_params(self.family, self.params))


class FittedModel:
    """Common surface of a trained classifier."""

    family: str = ""

    def __init__(self, classes: Sequence[str], n_features: int,
                 train_seconds: float = 0.0):
        self.classes = np.asarray(classes)
        if self.classes.size == 0:
            raise FitError("class list is empty")
        if len(set(self.classes.tolist())) != self.classes.size:
            raise FitError("class list has duplicates")
        self.n_features = int(n_features)
        self.train_seconds = float(train_seconds)

    def _check_input(self, X) -> np.ndarray:
        if hasattr(X, "X"):
            X = X.X
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(
                f"{self.family} was trained on {self.n_features} features, "
                f"got input of shape {X.shape}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes[np.argmax(proba, axis=1)]

    # subclasses serialize their learned parameters through these two hooks
    def _params_doc(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float) -> "FittedModel":
        raise NotImplementedError


def _normalize_rows(proba: np.ndarray) -> np.ndarray:
    sums = proba.sum(axis=1, keepdims=True)
    sums[sums == 0.0] = 1.0
    return proba / sums


_TRAINERS: dict[str, Callable] = {}
_MODEL_TYPES: dict[str, type[FittedModel]] = {}


def register_family(family: str, trainer: Callable,
                    model_type: type[FittedModel]) -> None:
    _TRAINERS[family] = trainer
    _MODEL_TYPES[family] = model_type


def encode_labels(y: Sequence[str] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted distinct labels and the per-sample class indices."""
    y = np.asarray(y)
    classes, yidx = np.unique(y, return_inverse=True)
    return classes, yidx.astype(np.intp)


def fit(spec: ClassifierSpec, X, y) -> FittedModel:
    """Train one classifier; deterministic given (spec, X, y)."""
    if hasattr(X, "X"):
        X = X.X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"training matrix must be 2-D, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise FitError("training matrix contains non-finite values")
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise ShapeError(
            f"label vector length {y.shape[0]} does not match {X.shape[0]} samples"
        )
    classes, yidx = encode_labels(y)
    if X.shape[0] < classes.size:
        raise FitError(
            f"{spec.family}: {X.shape[0]} samples for {classes.size} classes"
        )
    trainer = _TRAINERS[spec.family]
    start = time.perf_counter()
    model = trainer(spec, X, classes, yidx)
    model.train_seconds = time.perf_counter() - start
    return model


def predict(model: FittedModel, X) -> np.ndarray:
    """Argmax of predict_proba; ties resolve to the earlier class."""
    return model.predict(X)


def predict_proba(model: FittedModel, X) -> np.ndarray:
    """Class membership scores; each row sums to 1."""
    return model.predict_proba(X)


def serialize_model(model: FittedModel) -> dict:
    """Versioned JSON-ready document; round-trips to identical predictions."""
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "family": model.family,
        "classes": model.classes.tolist(),
        "n_features": model.n_features,
        "train_seconds": model.train_seconds,
        "params": model._params_doc(),
    }


def deserialize_model(doc: Mapping) -> FittedModel:
    """Rebuild a fitted model; raises FormatError on any defect."""
    try:
        version = doc["schema_version"]
    except (TypeError, KeyError):
        raise FormatError("model document has no schema_version") from None
    if version != MODEL_SCHEMA_VERSION:
        raise FormatError(f"unsupported model schema version {version}")
    try:
        family = doc["family"]
        if family not in _MODEL_TYPES:
            raise FormatError(f"unknown model family {family!r}")
        return _MODEL_TYPES[family]._from_params_doc(
            doc["params"],
            classes=doc["classes"],
            n_features=int(doc["n_features"]),
            train_seconds=float(doc["train_seconds"]),
        )
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"corrupt model document: {exc}") from None
