"""Standardization and feature-space reduction.

Three reductions over the 9-column numeric matrix: principal components by
covariance eigendecomposition (variance-retention cutoff), Fisher
discriminant axes from the between/within scatter eigenproblem, and
univariate F-value selection. Fitted transforms hold only train-derived
parameters, so applying one to held-out data can never leak statistics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import RecordTable
from .errors import FitError, FormatError, NumericError, ShapeError, StatsError

SCALER = "SCALER"
PCA = "PCA"
LDA = "LDA"
KBEST = "KBEST"
TRANSFORM_KINDS = (SCALER, PCA, LDA, KBEST)

TRANSFORM_SCHEMA_VERSION = 1

CANONICAL_FEATURE_NAMES = ("ID", "DATA_0", "DATA_1", "DATA_2", "DATA_3",
                           "DATA_4", "DATA_5", "DATA_6", "DATA_7")


@dataclass(frozen=True)
class FeatureMatrix:
    """A real feature matrix with an aligned class-label vector."""

    X: np.ndarray
    labels: np.ndarray | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ShapeError(f"feature matrix must be 2-D, got shape {X.shape}")
        if not np.isfinite(X).all():
            raise NumericError("feature matrix contains non-finite entries")
        X = X.copy()
        X.flags.writeable = False
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape[0] != X.shape[0]:
                raise ShapeError(
                    f"label vector length {labels.shape[0]} does not match "
                    f"{X.shape[0]} samples"
                )
            object.__setattr__(self, "labels", labels)
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise ShapeError("feature_names length does not match column count")

    @classmethod
    def from_table(cls, table: RecordTable, level: str = "specific_class"
                   ) -> "FeatureMatrix":
        if level == "specific_class":
            column = table.specific_classes
        elif level == "category":
            column = table.categories
        elif level == "label":
            column = table.labels
        else:
            raise ValueError(f"unknown label level {level!r}")
        if any(v is None for v in column):
            raise ValueError("table has missing labels; normalize and impute first")
        return cls(
            X=table.feature_matrix(),
            labels=np.array(column),
            feature_names=CANONICAL_FEATURE_NAMES,
        )

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def with_x(self, X: np.ndarray,
               feature_names: tuple[str, ...] | None = None) -> "FeatureMatrix":
        return FeatureMatrix(X=X, labels=self.labels, feature_names=feature_names)


@dataclass(frozen=True)
class FittedTransform:
    """A trained feature transform with its learned parameters."""

    kind: str
    input_dim: int
    output_dim: int
    params: Mapping[str, object] = field(repr=False)

    def __post_init__(self) -> None:
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")


def _as_matrix(X: "FeatureMatrix | np.ndarray") -> np.ndarray:
    if isinstance(X, FeatureMatrix):
        return X.X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise NumericError("matrix contains non-finite entries")
    return X


def _labels_of(X: "FeatureMatrix | np.ndarray",
               labels: np.ndarray | None) -> np.ndarray:
    if labels is None and isinstance(X, FeatureMatrix):
        labels = X.labels
    if labels is None:
        raise ValueError("class labels are required")
    return np.asarray(labels)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each row positive (reproducibility)."""
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


def fit_scaler(X: "FeatureMatrix | np.ndarray") -> FittedTransform:
    """Column-wise standardization with population (divisor n) deviations.

    Zero-variance columns store std 1 and are flagged, so they map to zeros.
    """
    M = _as_matrix(X)
    if M.shape[0] == 0:
        raise FitError("cannot fit a scaler on an empty matrix")
    mean = M.mean(axis=0)
    std = np.sqrt(((M - mean) ** 2).mean(axis=0))
    constant = std == 0.0
    std = np.where(constant, 1.0, std)
    return FittedTransform(
        kind=SCALER,
        input_dim=M.shape[1],
        output_dim=M.shape[1],
        params={"mean": mean, "std": std, "constant_mask": constant},
    )


def fit_pca(X: "FeatureMatrix | np.ndarray", variance_target: float) -> FittedTransform:
    """Principal components by eigendecomposition of the covariance matrix.

    Keeps the smallest component count whose cumulative explained-variance
    ratio reaches ``variance_target``; components are sorted by descending
    eigenvalue with a fixed sign convention.
    """
    if not 0.0 < variance_target <= 1.0:
        raise ValueError(f"variance_target must be in (0, 1], got {variance_target}")
    M = _as_matrix(X)
    n, d = M.shape
    if n < 2:
        raise FitError(f"PCA needs at least 2 samples, got {n}")
    mean = M.mean(axis=0)
    centered = M - mean
    cov = centered.T @ centered / (n - 1)
    if not np.isfinite(cov).all():
        raise NumericError("covariance matrix has non-finite entries")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    components = _fix_signs(eigvecs[:, order].T)

    total = eigvals.sum()
    if total <= 0.0:
        raise FitError("PCA is undefined on zero-variance data")
    ratios = eigvals / total
    cumulative = np.cumsum(ratios)
    keep = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    keep = min(keep, d)
    return FittedTransform(
        kind=PCA,
        input_dim=d,
        output_dim=keep,
        params={
            "mean": mean,
            "components": components[:keep],
            "explained_variance_ratio": ratios[:keep],
            "eigenvalues": eigvals[:keep],
        },
    )


def _scatter_matrices(M: np.ndarray, labels: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Between-class and within-class scatter, plus the class list."""
    classes = np.unique(labels)
    d = M.shape[1]
    overall = M.mean(axis=0)
    s_b = np.zeros((d, d))
    s_w = np.zeros((d, d))
    for c in classes:
        group = M[labels == c]
        mu = group.mean(axis=0)
        diff = (mu - overall)[:, None]
        s_b += group.shape[0] * (diff @ diff.T)
        centered = group - mu
        s_w += centered.T @ centered
    return s_b, s_w, classes


def fit_lda(X: "FeatureMatrix | np.ndarray",
            labels: np.ndarray | None = None) -> FittedTransform:
    """Fisher discriminant axes from the scatter-matrix eigenproblem.

    The within-class scatter is ridge-regularized (1e-6 * trace / d) before
    Cholesky whitening; min(C - 1, d) axes are kept, sorted by descending
    eigenvalue.
    """
    M = _as_matrix(X)
    y = _labels_of(X, labels)
    if y.shape[0] != M.shape[0]:
        raise ShapeError("label vector length does not match sample count")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise FitError("LDA needs at least 2 classes")
    for c, n_c in zip(classes, counts):
        if n_c < 2:
            raise FitError(f"class {c!r} has {n_c} sample(s); LDA needs at least 2")

    d = M.shape[1]
    s_b, s_w, _ = _scatter_matrices(M, y)
    ridge = 1e-6 * np.trace(s_w) / d
    s_w_reg = s_w + ridge * np.eye(d)
    try:
        chol = np.linalg.cholesky(s_w_reg)
    except np.linalg.LinAlgError:
        raise NumericError("within-class scatter is singular after regularization")

    # Whiten: eigvectors of inv(L) Sb inv(L)^T map back through L^-T.
    half = np.linalg.solve(chol, s_b)
    whitened = np.linalg.solve(chol, half.T).T
    whitened = (whitened + whitened.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(whitened)
    order = np.argsort(eigvals)[::-1]
    keep = min(classes.size - 1, d)
    eigvals = eigvals[order][:keep]
    axes = np.linalg.solve(chol.T, eigvecs[:, order[:keep]])
    axes /= np.linalg.norm(axes, axis=0, keepdims=True)
    axes = _fix_signs(axes.T).T

    return FittedTransform(
        kind=LDA,
        input_dim=d,
        output_dim=keep,
        params={
            "mean": M.mean(axis=0),
            "axes": axes,  # (d, keep)
            "eigenvalues": eigvals,
            "classes": classes,
        },
    )


def anova_f_scores(X: "FeatureMatrix | np.ndarray",
                   labels: np.ndarray | None = None) -> np.ndarray:
    """One-way F-value of each feature against the class grouping.

    Features that are constant overall score 0; features with zero
    within-class variance but distinct class means score +inf.
    """
    M = _as_matrix(X)
    y = _labels_of(X, labels)
    if y.shape[0] != M.shape[0]:
        raise ShapeError("label vector length does not match sample count")
    classes = np.unique(y)
    n, d = M.shape
    c = classes.size
    if c < 2:
        raise StatsError("ANOVA needs at least 2 classes")
    if n - c < 1:
        raise StatsError(f"not enough degrees of freedom: {n} samples, {c} classes")

    overall = M.mean(axis=0)
    between = np.zeros(d)
    within = np.zeros(d)
    for cls in classes:
        group = M[y == cls]
        mu = group.mean(axis=0)
        between += group.shape[0] * (mu - overall) ** 2
        within += ((group - mu) ** 2).sum(axis=0)
    between /= c - 1
    within /= n - c

    scores = np.zeros(d)
    ok = within > 0.0
    scores[ok] = between[ok] / within[ok]
    separable = (~ok) & (between > 0.0)
    scores[separable] = np.inf
    if separable.any():
        warnings.warn(
            f"features {np.flatnonzero(separable).tolist()} have zero "
            "within-class variance; F reported as inf",
            stacklevel=2,
        )
    return scores


def select_k_best(scores: np.ndarray, k: int) -> FittedTransform:
    """Indices of the k largest scores; ties broken by the lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    ranked = np.argsort(-scores, kind="stable")[:k]
    indices = np.sort(ranked)
    return FittedTransform(
        kind=KBEST,
        input_dim=n,
        output_dim=k,
        params={"indices": indices, "scores": scores},
    )


def transform(t: FittedTransform, X: "FeatureMatrix | np.ndarray"
              ) -> "FeatureMatrix | np.ndarray":
    """Apply a fitted transform; never refits.

    Returns the same container type it was given: a FeatureMatrix in,
    FeatureMatrix out (labels carried through), else a plain array.
    """
    M = _as_matrix(X)
    if M.shape[1] != t.input_dim:
        raise ShapeError(
            f"{t.kind} expects {t.input_dim} columns, got {M.shape[1]}"
        )
    p = t.params
    names: tuple[str, ...] | None = None
    if t.kind == SCALER:
        out = (M - p["mean"]) / p["std"]
        if isinstance(X, FeatureMatrix):
            names = X.feature_names
    elif t.kind == PCA:
        out = (M - p["mean"]) @ np.asarray(p["components"]).T
    elif t.kind == LDA:
        out = (M - p["mean"]) @ np.asarray(p["axes"])
    elif t.kind == KBEST:
        indices = np.asarray(p["indices"], dtype=np.intp)
        out = M[:, indices]
        if isinstance(X, FeatureMatrix) and X.feature_names is not None:
            names = tuple(X.feature_names[i] for i in indices)
    else:  # pragma: no cover - guarded in FittedTransform
        raise ValueError(f"unknown transform kind {t.kind!r}")
    if isinstance(X, FeatureMatrix):
        return X.with_x(out, feature_names=names)
    return out


def inverse_transform(t: FittedTransform, Z: np.ndarray) -> np.ndarray:
    """Map transformed data back to the input space (SCALER and PCA only)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != t.output_dim:
        raise ShapeError(f"{t.kind} inverse expects {t.output_dim} columns")
    p = t.params
    if t.kind == SCALER:
        return Z * p["std"] + p["mean"]
    if t.kind == PCA:
        return Z @ np.asarray(p["components"]) + p["mean"]
    raise ValueError(f"{t.kind} has no inverse transform")


# -- serialization -----------------------------------------------------------

_ARRAY_PARAMS = {"mean", "std", "components", "explained_variance_ratio",
                 "eigenvalues", "axes", "scores"}


def serialize_transform(t: FittedTransform) -> dict:
    """Versioned JSON-ready document for a fitted transform."""
    params: dict[str, object] = {}
    for key, value in t.params.items():
        if isinstance(value, np.ndarray):
            params[key] = value.tolist()
        else:
            params[key] = value
    return {
        "schema_version": TRANSFORM_SCHEMA_VERSION,
        "kind": t.kind,
        "input_dim": t.input_dim,
        "output_dim": t.output_dim,
        "params": params,
    }


def deserialize_transform(doc: Mapping) -> FittedTransform:
    """Rebuild a fitted transform from its JSON document."""
    try:
        version = doc["schema_version"]
        if version != TRANSFORM_SCHEMA_VERSION:
            raise FormatError(f"unsupported transform schema version {version}")
        kind = doc["kind"]
        if kind not in TRANSFORM_KINDS:
            raise FormatError(f"unknown transform kind {kind!r}")
        raw = dict(doc["params"])
        params: dict[str, object] = {}
        for key, value in raw.items():
            if key == "indices":
                params[key] = np.asarray(value, dtype=np.intp)
            elif key == "constant_mask":
                params[key] = np.asarray(value, dtype=bool)
            elif key == "classes":
                params[key] = np.asarray(value)
            elif key in _ARRAY_PARAMS:
                params[key] = np.asarray(value, dtype=np.float64)
            else:
                params[key] = value
        return FittedTransform(
            kind=kind,
            input_dim=int(doc["input_dim"]),
            output_dim=int(doc["output_dim"]),
            params=params,
        )
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"corrupt transform document: {exc}") from None
