"""One-vs-rest RBF-kernel SVM trained with a simplified SMO solver.

The solver does randomized two-coordinate updates with a cached decision
vector, stopping when the KKT conditions hold within tolerance or the pass
budget is exhausted. All randomness comes from the spec seed.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .base import SVM_RBF, ClassifierSpec, FittedModel, register_family
from .linear import softmax


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    d2 = (
        (A**2).sum(axis=1, keepdims=True)
        - 2.0 * A @ B.T
        + (B**2).sum(axis=1)
    )
    return np.exp(-gamma * np.clip(d2, 0.0, None))


def scale_gamma(X: np.ndarray) -> float:
    """1 / (n_features * mean per-feature population variance)."""
    var = X.var(axis=0).mean()
    if var <= 0.0:
        return 1.0 / X.shape[1]
    return 1.0 / (X.shape[1] * var)


def smo_solve(
    K: np.ndarray,
    y: np.ndarray,
    c: float,
    tol: float,
    max_passes: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Solve the binary dual for labels in {-1, +1}; returns (alpha, bias)."""
    n = y.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    cache = np.zeros(n)  # K @ (alpha * y), bias excluded
    passes = 0
    quiet = 0
    while passes < max_passes and quiet < 3:
        margins = y * (cache + b - y)
        violators = np.flatnonzero(
            ((margins < -tol) & (alpha < c)) | ((margins > tol) & (alpha > 0))
        )
        if violators.size == 0:
            break
        changed = 0
        for i in violators:
            e_i = cache[i] + b - y[i]
            r_i = y[i] * e_i
            if not ((r_i < -tol and alpha[i] < c) or (r_i > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            e_j = cache[j] + b - y[j]
            a_i_old, a_j_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                lo = max(0.0, a_j_old - a_i_old)
                hi = min(c, c + a_j_old - a_i_old)
            else:
                lo = max(0.0, a_i_old + a_j_old - c)
                hi = min(c, a_i_old + a_j_old)
            if lo >= hi:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0.0:
                continue
            a_j = a_j_old - y[j] * (e_i - e_j) / eta
            a_j = float(np.clip(a_j, lo, hi))
            if abs(a_j - a_j_old) < 1e-5:
                continue
            a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j)
            alpha[i], alpha[j] = a_i, a_j
            d_i = (a_i - a_i_old) * y[i]
            d_j = (a_j - a_j_old) * y[j]
            cache += d_i * K[:, i] + d_j * K[:, j]
            b1 = b - e_i - d_i * K[i, i] - d_j * K[i, j]
            b2 = b - e_j - d_i * K[i, j] - d_j * K[j, j]
            if 0.0 < a_i < c:
                b = b1
            elif 0.0 < a_j < c:
                b = b2
            else:
                b = (b1 + b2) / 2.0
            changed += 1
        passes += 1
        quiet = quiet + 1 if changed == 0 else 0
    return alpha, b


class SvmRbfModel(FittedModel):
    family = SVM_RBF

    def __init__(self, classes, machines: list[dict], gamma: float,
                 n_features: int, train_seconds: float = 0.0):
        super().__init__(classes, n_features=n_features,
                         train_seconds=train_seconds)
        self.machines = machines  # per class: {"sv", "coef", "bias"}
        self.gamma = float(gamma)

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        out = np.zeros((X.shape[0], self.classes.size))
        for k, m in enumerate(self.machines):
            sv = m["sv"]
            if sv.shape[0] == 0:
                out[:, k] = m["bias"]
                continue
            out[:, k] = rbf_kernel(X, sv, self.gamma) @ m["coef"] + m["bias"]
        return out

    def predict_proba(self, X) -> np.ndarray:
        if self.classes.size == 1:
            X = self._check_input(X)
            return np.ones((X.shape[0], 1))
        return softmax(self.decision_values(X))

    def _params_doc(self) -> dict:
        return {
            "gamma": self.gamma,
            "machines": [
                {"sv": m["sv"].tolist(), "coef": m["coef"].tolist(),
                 "bias": m["bias"]}
                for m in self.machines
            ],
        }

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float) -> "SvmRbfModel":
        machines = [
            {
                "sv": np.asarray(m["sv"], dtype=np.float64).reshape(-1, n_features),
                "coef": np.asarray(m["coef"], dtype=np.float64),
                "bias": float(m["bias"]),
            }
            for m in params["machines"]
        ]
        return cls(classes, machines, float(params["gamma"]), n_features,
                   train_seconds)


def train_svm(spec: ClassifierSpec, X: np.ndarray, classes: np.ndarray,
              yidx: np.ndarray) -> SvmRbfModel:
    p = spec.params
    gamma = p["gamma"] if p["gamma"] is not None else scale_gamma(X)
    if classes.size == 1:
        return SvmRbfModel(classes, [], gamma, X.shape[1])
    K = rbf_kernel(X, X, gamma)
    rng = np.random.default_rng(spec.seed)
    machines = []
    for k in range(classes.size):
        y = np.where(yidx == k, 1.0, -1.0)
        alpha, bias = smo_solve(K, y, p["c"], p["tol"], int(p["max_passes"]), rng)
        support = alpha > 1e-12
        machines.append({
            "sv": X[support].copy(),
            "coef": (alpha * y)[support],
            "bias": bias,
        })
    return SvmRbfModel(classes, machines, gamma, X.shape[1])


register_family(SVM_RBF, train_svm, SvmRbfModel)
