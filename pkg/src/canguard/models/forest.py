"""Bootstrap forest of CART trees.

Per-tree generators are spawned from the spec seed before any work starts,
and results are aggregated in tree order, so a parallel fit is identical to
the sequential one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Mapping, Sequence

import numpy as np

from .base import FOREST, ClassifierSpec, FittedModel, register_family
from .tree import DecisionTreeModel, TreeNodes, grow_tree, tree_leaf_dist


def _resolve_max_features(max_features, d: int) -> int | None:
    if max_features is None:
        return None
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    return min(int(max_features), d)


class RandomForestModel(FittedModel):
    family = FOREST

    def __init__(self, classes, trees: Sequence[TreeNodes], n_features: int,
                 criterion: str = "gini", train_seconds: float = 0.0):
        super().__init__(classes, n_features=n_features,
                         train_seconds=train_seconds)
        self.trees = list(trees)
        self.criterion = criterion

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        total = np.zeros((X.shape[0], self.classes.size))
        for nodes in self.trees:
            total += tree_leaf_dist(nodes, X)
        return total / len(self.trees)

    def _params_doc(self) -> dict:
        return {
            "criterion": self.criterion,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "dist": t.dist.tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def _from_params_doc(cls, params: Mapping, classes: Sequence[str],
                         n_features: int, train_seconds: float
                         ) -> "RandomForestModel":
        trees = [
            TreeNodes(
                feature=np.asarray(t["feature"], dtype=np.int32),
                threshold=np.asarray(t["threshold"], dtype=np.float64),
                left=np.asarray(t["left"], dtype=np.int32),
                right=np.asarray(t["right"], dtype=np.int32),
                dist=np.asarray(t["dist"], dtype=np.float64).reshape(
                    len(t["feature"]), len(classes)),
            )
            for t in params["trees"]
        ]
        if not trees:
            raise ValueError("forest document has no trees")
        return cls(classes, trees, n_features, str(params["criterion"]),
                   train_seconds)


def train_forest(spec: ClassifierSpec, X: np.ndarray, classes: np.ndarray,
                 yidx: np.ndarray) -> RandomForestModel:
    p = spec.params
    n, d = X.shape
    n_trees = int(p["n_trees"])
    max_features = _resolve_max_features(p["max_features"], d)
    seeds = np.random.SeedSequence(spec.seed).spawn(n_trees)

    def build(seed_seq) -> TreeNodes:
        rng = np.random.default_rng(seed_seq)
        if p["bootstrap"]:
            sample = rng.integers(0, n, size=n)
            Xs, ys = X[sample], yidx[sample]
        else:
            Xs, ys = X, yidx
        return grow_tree(
            Xs, ys, classes.size,
            criterion=p["criterion"],
            max_depth=p["max_depth"],
            min_samples_split=p["min_samples_split"],
            max_features=max_features,
            rng=rng,
        )

    n_jobs = int(p["n_jobs"])
    if n_jobs == 1:
        trees = [build(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, seeds))
    return RandomForestModel(classes, trees, d, p["criterion"])


register_family(FOREST, train_forest, RandomForestModel)


def forest_as_single_tree(model: RandomForestModel) -> DecisionTreeModel:
    """View a 1-tree forest as a plain decision tree (testing convenience)."""
    if len(model.trees) != 1:
        raise ValueError("forest has more than one tree")
    return DecisionTreeModel(model.classes, model.trees[0], model.n_features,
                             model.criterion, model.train_seconds)
