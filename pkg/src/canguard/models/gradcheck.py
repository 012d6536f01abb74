"""Finite-difference verification of the analytic training gradients."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from .base import CNN1D, LOGREG, MLP, ClassifierSpec, encode_labels
from .linear import logreg_flat_loss_and_grad
from .neural import cnn_init, cnn_loss_and_grad, mlp_init, mlp_loss_and_grad

FD_STEP = 1e-5
#: Below this magnitude the comparison is effectively absolute, which keeps
#: dead-unit (exactly zero) gradients from amplifying FD roundoff.
REL_FLOOR = 1e-3


def gradient_check(spec: ClassifierSpec, X, y, zero_init: bool = False) -> float:
    """Max relative error between analytic and central-difference gradients.

    Supported families: MLP, CNN1D, LOGREG. The batch is capped at 16
    samples because the check evaluates the loss twice per parameter.
    """
    if spec.family not in (MLP, CNN1D, LOGREG):
        raise ValueError(f"gradient_check does not support family {spec.family}")
    if hasattr(X, "X"):
        X = X.X
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] > 16:
        raise ValueError(f"gradient check batch must be <= 16 samples, got {X.shape[0]}")
    classes, yidx = encode_labels(np.asarray(y))
    rng = np.random.default_rng(spec.seed)
    p = spec.params

    if spec.family == LOGREG:
        size = X.shape[1] * classes.size + classes.size
        theta = np.zeros(size) if zero_init else rng.normal(0.0, 0.5, size)
        fn = lambda th: logreg_flat_loss_and_grad(th, X, yidx, classes.size, p["l2"])
    elif spec.family == MLP:
        dims = (X.shape[1], *p["hidden"], classes.size)
        theta = np.zeros(mlp_init(rng, dims).size) if zero_init else mlp_init(rng, dims)
        fn = lambda th: mlp_loss_and_grad(th, X, yidx, dims)
    else:
        shape = (X.shape[1], int(p["filters"]), int(p["kernel"]), classes.size)
        theta = np.zeros(cnn_init(rng, shape).size) if zero_init else cnn_init(rng, shape)
        fn = lambda th: cnn_loss_and_grad(th, X, yidx, shape)

    loss, analytic = fn(theta)
    if not np.isfinite(loss) or not np.isfinite(analytic).all():
        raise NumericError("non-finite loss or gradient at the check point")

    numeric = np.empty_like(analytic)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] = theta[i] + FD_STEP
        up, _ = fn(bumped)
        bumped[i] = theta[i] - FD_STEP
        down, _ = fn(bumped)
        numeric[i] = (up - down) / (2.0 * FD_STEP)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom))
