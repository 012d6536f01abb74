"""CART decision tree with exhaustive midpoint threshold search.

Split selection is deterministic: candidates are scored by impurity
decrease, with ties resolved toward the lower feature index and then the
lower threshold. Samples route left when ``x[feature] < threshold``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .base import TREE, ClassifierSpec, FittedModel, register_family

LEAF = -1


def _impurity_rows(counts: np.ndarray, totals: np.ndarray,
                   criterion: str) -> np.ndarray:
    """Impurity of each row of class counts; totals must be positive."""
    p = counts / totals[:, None]
    if criterion == "gini":
        return 1.0 - (p * p).sum(axis=1)
    logp = np.zeros_like(p)
    nz = p > 0.0
    logp[nz] = np.log2(p[nz])
    return -(p * logp).sum(axis=1)


def _impurity(counts: np.ndarray, criterion: str) -> float:
    return float(_impurity_rows(counts[None, :], np.array([counts.sum()]),
                                criterion)[0])


def best_split(
    X: np.ndarray,
    yidx: np.ndarray,
    n_classes: int,
    criterion: str,
    feature_subset: np.ndarray | None = None,
) -> tuple[float, int, float] | None:
    """Best (impurity decrease, feature, threshold) over all candidates.

    Returns None when no feature has two distinct values. Thresholds are
    midpoints of adjacent distinct sorted values.
    """
    m = X.shape[0]
    counts = np.bincount(yidx, minlength=n_classes).astype(np.float64)
    parent_imp = _impurity(counts, criterion)
    features = (np.arange(X.shape[1]) if feature_subset is None
                else np.sort(feature_subset))

    best: tuple[float, int, float] | None = None
    eye = np.eye(n_classes)
    for f in features:
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        cut = np.flatnonzero(sv[1:] > sv[:-1])
        if cut.size == 0:
            continue
        cum = np.cumsum(eye[yidx[order]], axis=0)
        left_counts = cum[cut]
        n_left = (cut + 1).astype(np.float64)
        right_counts = counts - left_counts
        n_right = m - n_left
        weighted = (
            n_left * _impurity_rows(left_counts, n_left, criterion)
            + n_right * _impurity_rows(right_counts, n_right, criterion)
        ) / m
        decrease = parent_imp - weighted
        j = int(np.argmax(decrease))  # first max -> lowest threshold
        candidate = (float(decrease[j]), int(f),
                     float((sv[cut[j]] + sv[cut[j] + 1]) / 2.0))
        if best is None or candidate[0] > best[0]:
            best = candidate
    return best


@dataclass
class TreeNodes:
    """Flat node arrays; leaves have feature == LEAF and a class distribution."""

    feature: np.ndarray    # (n_nodes,) int, LEAF for leaves
    threshold: np.ndarray  # (n_nodes,) float, nan for leaves
    left: np.ndarray       # (n_nodes,) int child index, LEAF for leaves
    right: np.ndarray
    dist: np.ndarray       # (n_nodes, n_classes) leaf class frequencies

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


def grow_tree(
    X: np.ndarray,
    yidx: np.ndarray,
    n_classes: int,
    criterion: str = "gini",
    max_depth: int | None = None,
    min_samples_split: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeNodes:
    """Grow a tree to purity (or until no valid split remains).

    ``max_features`` draws a fresh random feature subset at every node;
    nodes are processed in FIFO order so the rng consumption, and therefore
    the tree, is reproducible.
    """
    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    dists: list[np.ndarray] = []

    def new_node(idx: np.ndarray) -> int:
        node = len(features)
        counts = np.bincount(yidx[idx], minlength=n_classes).astype(np.float64)
        features.append(LEAF)
        thresholds.append(float("nan"))
        lefts.append(LEAF)
        rights.append(LEAF)
        dists.append(counts / counts.sum())
        return node

    all_idx = np.arange(X.shape[0], dtype=np.intp)
    queue: list[tuple[int, np.ndarray, int]] = [(new_node(all_idx), all_idx, 0)]
    d = X.shape[1]
    while queue:
        node, idx, depth = queue.pop(0)
        if idx.size < min_samples_split:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        sub_y = yidx[idx]
        if (sub_y == sub_y[0]).all():
            continue
        subset = None
        if max_features is not None and max_features < d:
            assert rng is not None, "max_features requires an rng"
            subset = rng.choice(d, size=max_features, replace=False)
        found = best_split(X[idx], sub_y, n_classes, criterion, subset)
        if found is None:
            continue
        _, f, thr = found
        mask = X[idx, f] < thr
        left_idx = idx[mask]
        right_idx = idx[~mask]
        features[node] = f
        thresholds[node] = thr
        left_node = new_node(left_idx)
        right_node = new_node(right_idx)
        lefts[node] = left_node
        rights[node] = right_node
        queue.append((left_node, left_idx, depth + 1))
        queue.append((right_node, right_idx, depth + 1))

    return TreeNodes(
        feature=np.array(features, dtype=np.int32),
        threshold=np.array(thresholds, dtype=np.float64),
        left=np.array(lefts, dtype=np.int32),
        right=np.array(rights, dtype=np.int32),
        dist=np.vstack(dists),
    )


def tree_leaf_dist(nodes: TreeNodes, X: np.ndarray) -> np.ndarray:
    """Leaf class distribution reached by each row."""
    pos = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feat = nodes.feature[pos]
        active = feat != LEAF
        if not active.any():
            break
        rows = np.flatnonzero(active)
        f = feat[rows]
        thr = nodes.threshold[pos[rows]]
        go_left = X[rows, f] < thr
        pos[rows] = np.where(go_left, nodes.left[pos[rows]], nodes.right[pos[rows]])
    return nodes.dist[pos]


class DecisionTreeModel(FittedModel):
    family = TREE

    def __init__(self, classes, nodes: TreeNodes, n_features: int,
                 criterion: str = "gini", train_seconds: float = 0.0):
        super().__init__(classes, n_features=n_features,
                         train_seconds=train_seconds)
        self.nodes = nodes
        self.criterion = criterion

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return tree_leaf_dist(self.nodes, X)

    def _params_doc(self) -> dict:
        return {
            "criterion": self.criterion,
            "feature": self.nodes.feature.tolist(),
            "threshold": self.nodes.threshold.tolist(),
            "left": self.nodes.left.tolist(),
            "right": self.nodes.right.tolist(),
            "dist": self.nodes.dist.tolist(),
        }

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float
                         ) -> "DecisionTreeModel":
        nodes = TreeNodes(
            feature=np.asarray(params["feature"], dtype=np.int32),
            threshold=np.asarray(params["threshold"], dtype=np.float64),
            left=np.asarray(params["left"], dtype=np.int32),
            right=np.asarray(params["right"], dtype=np.int32),
            dist=np.asarray(params["dist"], dtype=np.float64).reshape(
                len(params["feature"]), len(classes)),
        )
        return cls(classes, nodes, n_features, str(params["criterion"]),
                   train_seconds)


def train_tree(spec: ClassifierSpec, X: np.ndarray, classes: np.ndarray,
               yidx: np.ndarray) -> DecisionTreeModel:
    p = spec.params
    nodes = grow_tree(
        X, yidx, classes.size,
        criterion=p["criterion"],
        max_depth=p["max_depth"],
        min_samples_split=p["min_samples_split"],
    )
    return DecisionTreeModel(classes, nodes, X.shape[1], p["criterion"])


register_family(TREE, train_tree, DecisionTreeModel)
