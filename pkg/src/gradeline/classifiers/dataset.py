"""Labeled feature datasets shared by the four first-layer classifiers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import VARIANT_DIMS, FeatureVector
from .labels import Label


@dataclass
class LabeledDataset:
    """Homogeneous (vectors, labels) pairs of one feature variant."""

    vectors: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64, Label values
    variant: str

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if self.vectors.shape[0] != self.labels.shape[0]:
            raise ValueError("vectors and labels disagree in length")
        if self.variant in VARIANT_DIMS and self.vectors.shape[1] != VARIANT_DIMS[self.variant]:
            raise ValueError(
                f"variant {self.variant} expects {VARIANT_DIMS[self.variant]}-dim vectors, "
                f"got {self.vectors.shape[1]}"
            )

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def classes(self) -> list[Label]:
        return [Label(c) for c in np.unique(self.labels)]

    @classmethod
    def from_pairs(cls, pairs: list[tuple[FeatureVector, Label]]) -> "LabeledDataset":
        if not pairs:
            raise ValueError("dataset must contain at least one sample")
        variant = pairs[0][0].variant
        for fv, _ in pairs:
            if fv.variant != variant:
                raise ValueError("mixed feature variants in one dataset")
        vectors = np.stack([fv.values for fv, _ in pairs])
        labels = np.array([int(lab) for _, lab in pairs], dtype=np.int64)
        return cls(vectors=vectors, labels=labels, variant=variant)

    def split(self, holdout: float, seed: int) -> tuple["LabeledDataset", "LabeledDataset"]:
        """Deterministic stratified split; the second part holds ~holdout of
        each class (at least one sample when the class has two or more)."""
        if not 0.0 < holdout < 1.0:
            raise ValueError(f"holdout must be in (0, 1), got {holdout}")
        rng = np.random.default_rng(seed)
        test_idx: list[np.ndarray] = []
        train_idx: list[np.ndarray] = []
        for c in np.unique(self.labels):
            members = np.flatnonzero(self.labels == c)
            perm = members[rng.permutation(members.size)]
            n_test = int(round(members.size * holdout))
            if members.size >= 2:
                n_test = min(max(n_test, 1), members.size - 1)
            else:
                n_test = 0
            test_idx.append(perm[:n_test])
            train_idx.append(perm[n_test:])
        tr = np.sort(np.concatenate(train_idx))
        te = np.sort(np.concatenate(test_idx))
        train = LabeledDataset(self.vectors[tr], self.labels[tr], self.variant)
        test = LabeledDataset(self.vectors[te], self.labels[te], self.variant)
        return train, test
