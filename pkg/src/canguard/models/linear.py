"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .base import LOGREG, ClassifierSpec, FittedModel, register_family


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logreg_loss_and_grad(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, yidx: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus 0.5 * l2 * ||W||^2 and its gradients."""
    n = X.shape[0]
    logits = X @ W + b
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(-(z[np.arange(n), yidx] - log_norm).mean())
    loss += 0.5 * l2 * float((W * W).sum())

    p = softmax(logits)
    p[np.arange(n), yidx] -= 1.0
    p /= n
    grad_w = X.T @ p + l2 * W
    grad_b = p.sum(axis=0)
    return loss, grad_w, grad_b


def logreg_flat_loss_and_grad(
    theta: np.ndarray, X: np.ndarray, yidx: np.ndarray, n_classes: int, l2: float
) -> tuple[float, np.ndarray]:
    """Flat-parameter view of the loss, used by the gradient checker."""
    d = X.shape[1]
    W = theta[: d * n_classes].reshape(d, n_classes)
    b = theta[d * n_classes:]
    loss, grad_w, grad_b = logreg_loss_and_grad(W, b, X, yidx, l2)
    return loss, np.concatenate([grad_w.ravel(), grad_b])


class LogisticModel(FittedModel):
    family = LOGREG

    def __init__(self, classes, W: np.ndarray, b: np.ndarray,
                 train_seconds: float = 0.0):
        super().__init__(classes, n_features=W.shape[0],
                         train_seconds=train_seconds)
        self.W = W
        self.b = b

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return softmax(X @ self.W + self.b)

    def _params_doc(self) -> dict:
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float) -> "LogisticModel":
        W = np.asarray(params["W"], dtype=np.float64)
        b = np.asarray(params["b"], dtype=np.float64)
        if W.shape != (n_features, len(classes)) or b.shape != (len(classes),):
            raise ValueError("weight shapes do not match classes/features")
        return cls(classes, W, b, train_seconds)


def train_logreg(spec: ClassifierSpec, X: np.ndarray, classes: np.ndarray,
                 yidx: np.ndarray) -> LogisticModel:
    p = spec.params
    d, c = X.shape[1], classes.size
    W = np.zeros((d, c))
    b = np.zeros(c)
    lr = p["learning_rate"]
    for _ in range(int(p["epochs"])):
        _, grad_w, grad_b = logreg_loss_and_grad(W, b, X, yidx, p["l2"])
        W -= lr * grad_w
        b -= lr * grad_b
    return LogisticModel(classes, W, b)


register_family(LOGREG, train_logreg, LogisticModel)
