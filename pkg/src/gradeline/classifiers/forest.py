"""Random forest of Gini decision trees.

Each tree sees a bootstrap resample and considers ceil(sqrt(d)) randomly drawn
dimensions per node; trees grow until their leaves are pure (or no split can
separate the remaining points). Per-tree RNGs are derived from the forest seed
so training is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .labels import Label

N_CLASSES = len(Label)


@dataclass
class TreeNode:
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: np.ndarray | None = None  # class counts at a leaf

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None

    def to_obj(self):
        if self.is_leaf:
            return {"counts": self.counts.tolist()}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_obj(),
            "right": self.right.to_obj(),
        }

    @classmethod
    def from_obj(cls, obj) -> "TreeNode":
        if "counts" in obj:
            return cls(counts=np.asarray(obj["counts"], dtype=np.int64))
        return cls(
            feature=int(obj["feature"]),
            threshold=float(obj["threshold"]),
            left=cls.from_obj(obj["left"]),
            right=cls.from_obj(obj["right"]),
        )


@dataclass
class ForestModel:
    trees: list[TreeNode]
    variant: str
    seed: int


def _gini_best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Best (feature, threshold, weighted gini) over the candidate features,
    or None if no feature admits a split. Points go left when x < threshold."""
    n = y.size
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), y] = 1.0
    best = None
    for f in features:
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        cum = np.cumsum(onehot[order], axis=0)  # (n, c) counts left of each cut
        total = cum[-1]
        left_n = np.arange(1, n, dtype=np.float64)
        right_n = n - left_n
        left_counts = cum[:-1]
        right_counts = total[None, :] - left_counts
        gini_l = 1.0 - np.sum((left_counts / left_n[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((right_counts / right_n[:, None]) ** 2, axis=1)
        weighted = (left_n * gini_l + right_n * gini_r) / n
        valid = sv[:-1] < sv[1:]
        if not valid.any():
            continue
        weighted = np.where(valid, weighted, np.inf)
        i = int(np.argmin(weighted))
        if best is None or weighted[i] < best[2]:
            threshold = (sv[i] + sv[i + 1]) / 2.0
            best = (int(f), float(threshold), float(weighted[i]))
    return best


def _grow(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, n_features: int) -> TreeNode:
    counts = np.bincount(y, minlength=N_CLASSES)
    if np.count_nonzero(counts) <= 1:
        return TreeNode(counts=counts)
    features = rng.choice(X.shape[1], size=n_features, replace=False)
    best = _gini_best_split(X, y, features)
    if best is None:
        # Duplicate points with conflicting labels; give up on this branch.
        return TreeNode(counts=counts)
    f, threshold, _ = best
    go_left = X[:, f] < threshold
    return TreeNode(
        feature=f,
        threshold=threshold,
        left=_grow(X[go_left], y[go_left], rng, n_features),
        right=_grow(X[~go_left], y[~go_left], rng, n_features),
    )


def rf_train(ds: LabeledDataset, trees: int = 100, seed: int = 0) -> ForestModel:
    if trees < 1:
        raise ValueError(f"need at least one tree, got {trees}")
    n = len(ds)
    n_features = min(ds.dim, max(1, math.ceil(math.sqrt(ds.dim))))
    grown = []
    for t in range(trees):
        rng = np.random.default_rng([seed, t])
        boot = rng.integers(0, n, size=n)
        grown.append(_grow(ds.vectors[boot], ds.labels[boot], rng, n_features))
    return ForestModel(trees=grown, variant=ds.variant, seed=seed)


def _tree_vote(node: TreeNode, x: np.ndarray) -> int:
    while not node.is_leaf:
        node = node.left if x[node.feature] < node.threshold else node.right
    return int(np.argmax(node.counts))  # first maximum = label order


def rf_predict(model: ForestModel, x) -> Label:
    x = np.asarray(x, dtype=np.float64)
    votes = np.bincount([_tree_vote(t, x) for t in model.trees], minlength=N_CLASSES)
    return Label(int(np.argmax(votes)))
