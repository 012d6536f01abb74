"""MLP and 1-D CNN with softmax output, trained by adaptive-moment updates.

Both networks keep their parameters in one flat vector with explicit
pack/unpack helpers; the training loop and the finite-difference gradient
checker share the exact same loss functions.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import FitError, NumericError
from .base import CNN1D, MLP, ClassifierSpec, FittedModel, register_family
from .linear import softmax

ADAM_EPS = 1e-8


def _cross_entropy(logits: np.ndarray, yidx: np.ndarray) -> float:
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(-(z[np.arange(len(yidx)), yidx] - log_norm).mean())


def _output_grad(logits: np.ndarray, yidx: np.ndarray) -> np.ndarray:
    g = softmax(logits)
    g[np.arange(len(yidx)), yidx] -= 1.0
    return g / len(yidx)


# -- MLP ---------------------------------------------------------------------


def mlp_param_count(dims: Sequence[int]) -> int:
    return sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))


def mlp_unpack(theta: np.ndarray, dims: Sequence[int]
               ) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    pos = 0
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        W = theta[pos: pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = theta[pos: pos + fan_out]
        pos += fan_out
        layers.append((W, b))
    return layers


def mlp_init(rng: np.random.Generator, dims: Sequence[int]) -> np.ndarray:
    parts = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        scale = np.sqrt(2.0 / fan_in)
        parts.append(rng.normal(0.0, scale, size=fan_in * fan_out))
        parts.append(np.zeros(fan_out))
    return np.concatenate(parts)


def mlp_logits(theta: np.ndarray, X: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    layers = mlp_unpack(theta, dims)
    a = X
    for W, b in layers[:-1]:
        a = np.maximum(0.0, a @ W + b)
    W, b = layers[-1]
    return a @ W + b


def mlp_loss(theta: np.ndarray, X: np.ndarray, yidx: np.ndarray,
             dims: Sequence[int]) -> float:
    return _cross_entropy(mlp_logits(theta, X, dims), yidx)


def mlp_loss_and_grad(theta: np.ndarray, X: np.ndarray, yidx: np.ndarray,
                      dims: Sequence[int]) -> tuple[float, np.ndarray]:
    layers = mlp_unpack(theta, dims)
    activations = [X]
    pre = []
    a = X
    for W, b in layers[:-1]:
        z = a @ W + b
        pre.append(z)
        a = np.maximum(0.0, z)
        activations.append(a)
    W_out, b_out = layers[-1]
    logits = a @ W_out + b_out
    loss = _cross_entropy(logits, yidx)

    grads: list[tuple[np.ndarray, np.ndarray]] = []
    delta = _output_grad(logits, yidx)
    grads.append((activations[-1].T @ delta, delta.sum(axis=0)))
    back = delta @ W_out.T
    for li in range(len(layers) - 2, -1, -1):
        delta = back * (pre[li] > 0.0)
        grads.append((activations[li].T @ delta, delta.sum(axis=0)))
        if li > 0:
            back = delta @ layers[li][0].T
    grads.reverse()
    flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
    return loss, flat


class MlpModel(FittedModel):
    family = MLP

    def __init__(self, classes, dims: tuple[int, ...], theta: np.ndarray,
                 loss_history: list[float] | None = None,
                 train_seconds: float = 0.0):
        super().__init__(classes, n_features=dims[0], train_seconds=train_seconds)
        self.dims = tuple(int(d) for d in dims)
        self.theta = theta
        self.loss_history = loss_history or []

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return softmax(mlp_logits(self.theta, X, self.dims))

    def _params_doc(self) -> dict:
        return {
            "dims": list(self.dims),
            "theta": self.theta.tolist(),
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float) -> "MlpModel":
        dims = tuple(int(d) for d in params["dims"])
        theta = np.asarray(params["theta"], dtype=np.float64)
        if dims[0] != n_features or theta.size != mlp_param_count(dims):
            raise ValueError("MLP dims and parameter vector disagree")
        return cls(classes, dims, theta, list(params.get("loss_history", [])),
                   train_seconds)


# -- 1-D CNN -----------------------------------------------------------------


def cnn_param_count(shape: Sequence[int]) -> int:
    d, filters, kernel, n_classes = shape
    return filters * kernel + filters + filters * n_classes + n_classes


def cnn_unpack(theta: np.ndarray, shape: Sequence[int]):
    d, filters, kernel, n_classes = shape
    pos = 0
    w_conv = theta[pos: pos + filters * kernel].reshape(filters, kernel)
    pos += filters * kernel
    b_conv = theta[pos: pos + filters]
    pos += filters
    w_out = theta[pos: pos + filters * n_classes].reshape(filters, n_classes)
    pos += filters * n_classes
    b_out = theta[pos: pos + n_classes]
    return w_conv, b_conv, w_out, b_out


def cnn_init(rng: np.random.Generator, shape: Sequence[int]) -> np.ndarray:
    d, filters, kernel, n_classes = shape
    return np.concatenate([
        rng.normal(0.0, np.sqrt(2.0 / kernel), size=filters * kernel),
        np.zeros(filters),
        rng.normal(0.0, np.sqrt(1.0 / filters), size=filters * n_classes),
        np.zeros(n_classes),
    ])


def _windows(X: np.ndarray, kernel: int) -> np.ndarray:
    length = X.shape[1] - kernel + 1
    return np.stack([X[:, t: t + kernel] for t in range(length)], axis=1)


def cnn_logits(theta: np.ndarray, X: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    w_conv, b_conv, w_out, b_out = cnn_unpack(theta, shape)
    win = _windows(X, shape[2])
    conv = np.maximum(0.0, win @ w_conv.T + b_conv)  # (n, T, F)
    pooled = conv.max(axis=1)  # global max pool
    return pooled @ w_out + b_out


def cnn_loss(theta: np.ndarray, X: np.ndarray, yidx: np.ndarray,
             shape: Sequence[int]) -> float:
    return _cross_entropy(cnn_logits(theta, X, shape), yidx)


def cnn_loss_and_grad(theta: np.ndarray, X: np.ndarray, yidx: np.ndarray,
                      shape: Sequence[int]) -> tuple[float, np.ndarray]:
    w_conv, b_conv, w_out, b_out = cnn_unpack(theta, shape)
    win = _windows(X, shape[2])
    z = win @ w_conv.T + b_conv
    conv = np.maximum(0.0, z)
    arg = conv.argmax(axis=1)  # (n, F), first index wins ties
    pooled = np.take_along_axis(conv, arg[:, None, :], axis=1)[:, 0, :]
    logits = pooled @ w_out + b_out
    loss = _cross_entropy(logits, yidx)

    delta = _output_grad(logits, yidx)  # (n, C)
    g_w_out = pooled.T @ delta
    g_b_out = delta.sum(axis=0)
    d_pool = delta @ w_out.T  # (n, F)
    d_conv = np.zeros_like(conv)
    np.put_along_axis(d_conv, arg[:, None, :], d_pool[:, None, :], axis=1)
    d_z = d_conv * (z > 0.0)
    g_w_conv = np.einsum("ntf,ntk->fk", d_z, win)
    g_b_conv = d_z.sum(axis=(0, 1))
    flat = np.concatenate([g_w_conv.ravel(), g_b_conv, g_w_out.ravel(), g_b_out])
    return loss, flat


class Cnn1dModel(FittedModel):
    family = CNN1D

    def __init__(self, classes, shape: tuple[int, ...], theta: np.ndarray,
                 loss_history: list[float] | None = None,
                 train_seconds: float = 0.0):
        super().__init__(classes, n_features=shape[0], train_seconds=train_seconds)
        self.shape = tuple(int(s) for s in shape)
        self.theta = theta
        self.loss_history = loss_history or []

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return softmax(cnn_logits(self.theta, X, self.shape))

    def _params_doc(self) -> dict:
        return {
            "shape": list(self.shape),
            "theta": self.theta.tolist(),
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float) -> "Cnn1dModel":
        shape = tuple(int(s) for s in params["shape"])
        theta = np.asarray(params["theta"], dtype=np.float64)
        if shape[0] != n_features or theta.size != cnn_param_count(shape):
            raise ValueError("CNN shape and parameter vector disagree")
        return cls(classes, shape, theta, list(params.get("loss_history", [])),
                   train_seconds)


# -- shared training loop ----------------------------------------------------


def adam_train(
    loss_grad: Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]],
    full_loss: Callable[[np.ndarray], float],
    theta: np.ndarray,
    n: int,
    batch_size: int,
    epochs: int,
    lr: float,
    beta1: float,
    beta2: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[float]]:
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    t = 0
    history = [full_loss(theta)]
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start: start + batch_size]
            _, g = loss_grad(theta, idx)
            t += 1
            m = beta1 * m + (1.0 - beta1) * g
            v = beta2 * v + (1.0 - beta2) * g * g
            m_hat = m / (1.0 - beta1**t)
            v_hat = v / (1.0 - beta2**t)
            theta = theta - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        loss = full_loss(theta)
        if not np.isfinite(loss):
            raise NumericError("training loss became non-finite")
        history.append(loss)
    return theta, history


def train_mlp(spec: ClassifierSpec, X: np.ndarray, classes: np.ndarray,
              yidx: np.ndarray) -> MlpModel:
    p = spec.params
    dims = (X.shape[1], *p["hidden"], classes.size)
    rng = np.random.default_rng(spec.seed)
    theta = mlp_init(rng, dims)
    theta, history = adam_train(
        lambda th, idx: mlp_loss_and_grad(th, X[idx], yidx[idx], dims),
        lambda th: mlp_loss(th, X, yidx, dims),
        theta, X.shape[0], int(p["batch_size"]), int(p["epochs"]),
        p["learning_rate"], p["beta1"], p["beta2"], rng,
    )
    return MlpModel(classes, dims, theta, history)


def train_cnn(spec: ClassifierSpec, X: np.ndarray, classes: np.ndarray,
              yidx: np.ndarray) -> Cnn1dModel:
    p = spec.params
    if p["kernel"] > X.shape[1]:
        raise FitError(
            f"CNN1D kernel {p['kernel']} exceeds input length {X.shape[1]}"
        )
    shape = (X.shape[1], int(p["filters"]), int(p["kernel"]), classes.size)
    rng = np.random.default_rng(spec.seed)
    theta = cnn_init(rng, shape)
    theta, history = adam_train(
        lambda th, idx: cnn_loss_and_grad(th, X[idx], yidx[idx], shape),
        lambda th: cnn_loss(th, X, yidx, shape),
        theta, X.shape[0], int(p["batch_size"]), int(p["epochs"]),
        p["learning_rate"], p["beta1"], p["beta2"], rng,
    )
    return Cnn1dModel(classes, shape, theta, history)


register_family(MLP, train_mlp, MlpModel)
register_family(CNN1D, train_cnn, Cnn1dModel)
