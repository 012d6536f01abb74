"""Distance-weighted k-nearest-neighbors classifier."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..errors import FitError
from .base import KNN, ClassifierSpec, FittedModel, _normalize_rows, register_family


class KnnModel(FittedModel):
    family = KNN

    def __init__(self, classes, X_train: np.ndarray, yidx: np.ndarray,
                 k: int, distance_eps: float, train_seconds: float = 0.0):
        super().__init__(classes, n_features=X_train.shape[1],
                         train_seconds=train_seconds)
        self.X_train = X_train
        self.yidx = yidx
        self.k = int(k)
        self.distance_eps = float(distance_eps)

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        # Squared distances via the expansion trick; clip the roundoff negatives.
        d2 = (
            (X**2).sum(axis=1, keepdims=True)
            - 2.0 * X @ self.X_train.T
            + (self.X_train**2).sum(axis=1)
        )
        dist = np.sqrt(np.clip(d2, 0.0, None))
        order = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        nn_dist = np.take_along_axis(dist, order, axis=1)
        weights = 1.0 / (nn_dist + self.distance_eps)
        nn_class = self.yidx[order]
        proba = np.zeros((X.shape[0], self.classes.size))
        rows = np.repeat(np.arange(X.shape[0]), self.k)
        np.add.at(proba, (rows, nn_class.ravel()), weights.ravel())
        return _normalize_rows(proba)

    def _params_doc(self) -> dict:
        return {
            "k": self.k,
            "distance_eps": self.distance_eps,
            "X_train": self.X_train.tolist(),
            "y_index": self.yidx.tolist(),
        }

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float) -> "KnnModel":
        X_train = np.asarray(params["X_train"], dtype=np.float64).reshape(
            -1, n_features)
        yidx = np.asarray(params["y_index"], dtype=np.intp)
        return cls(classes, X_train, yidx, int(params["k"]),
                   float(params["distance_eps"]), train_seconds)


def train_knn(spec: ClassifierSpec, X: np.ndarray, classes: np.ndarray,
              yidx: np.ndarray) -> KnnModel:
    p = spec.params
    if p["k"] > X.shape[0]:
        raise FitError(f"KNN: k={p['k']} exceeds {X.shape[0]} training samples")
    return KnnModel(classes, X.copy(), yidx.copy(), p["k"], p["distance_eps"])


register_family(KNN, train_knn, KnnModel)
