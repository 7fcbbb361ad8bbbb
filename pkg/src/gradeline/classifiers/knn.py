"""K-nearest-neighbour classifier over stored feature vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .labels import Label

METRICS = ("euclidean", "manhattan")


@dataclass
class KnnModel:
    k: int
    metric: str
    X: np.ndarray
    y: np.ndarray
    variant: str


def knn_train(ds: LabeledDataset, k: int = 3, metric: str = "euclidean") -> KnnModel:
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if not 1 <= k <= len(ds):
        raise ValueError(f"k must be in [1, {len(ds)}], got {k}")
    return KnnModel(k=k, metric=metric, X=ds.vectors.copy(), y=ds.labels.copy(),
                    variant=ds.variant)


def distances(metric: str, X: np.ndarray, x: np.ndarray) -> np.ndarray:
    diff = X - np.asarray(x, dtype=np.float64)[None, :]
    if metric == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=1))
    return np.sum(np.abs(diff), axis=1)


def knn_predict(model: KnnModel, x) -> Label:
    """Majority label among the k nearest samples. A vote tie goes to the
    label whose members sit closer in total, then to label order."""
    d = distances(model.metric, model.X, np.asarray(x, dtype=np.float64))
    # Sort by distance, then by sample index so equal distances stay stable.
    order = np.lexsort((np.arange(d.size), d))
    top = order[: model.k]
    top_labels = model.y[top]
    counts = np.bincount(top_labels, minlength=len(Label))
    best = counts.max()
    candidates = [c for c in range(len(Label)) if counts[c] == best]
    if len(candidates) == 1:
        return Label(candidates[0])
    sums = {c: float(d[top][top_labels == c].sum()) for c in candidates}
    min_sum = min(sums.values())
    winners = sorted(c for c, s in sums.items() if s == min_sum)
    return Label(winners[0])
