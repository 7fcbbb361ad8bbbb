"""Gaussian naive Bayes: per-class priors with independent per-dimension
normal likelihoods (variances floored to keep the log-density finite)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .labels import Label

VAR_FLOOR = 1e-9


@dataclass
class NbModel:
    classes: np.ndarray  # sorted Label values present at training
    priors: np.ndarray  # (c,)
    means: np.ndarray  # (c, d)
    variances: np.ndarray  # (c, d), floored
    variant: str


def nb_train(ds: LabeledDataset) -> NbModel:
    classes = np.unique(ds.labels)
    priors = np.empty(classes.size)
    means = np.empty((classes.size, ds.dim))
    variances = np.empty((classes.size, ds.dim))
    for i, c in enumerate(classes):
        members = ds.vectors[ds.labels == c]
        if members.shape[0] < 2:
            raise ValueError(
                f"class {Label(int(c)).wire_name} has {members.shape[0]} sample(s); "
                "need at least 2 to estimate a variance"
            )
        priors[i] = members.shape[0] / len(ds)
        means[i] = members.mean(axis=0)
        variances[i] = np.maximum(members.var(axis=0), VAR_FLOOR)
    return NbModel(classes=classes, priors=priors, means=means, variances=variances,
                   variant=ds.variant)


def nb_log_posteriors(model: NbModel, x) -> np.ndarray:
    """Unnormalized log posteriors, one per trained class in label order."""
    x = np.asarray(x, dtype=np.float64)
    log_lik = -0.5 * np.sum(
        np.log(2.0 * math.pi * model.variances) + (x[None, :] - model.means) ** 2 / model.variances,
        axis=1,
    )
    return np.log(model.priors) + log_lik


def nb_predict(model: NbModel, x) -> Label:
    scores = nb_log_posteriors(model, x)
    # argmax takes the first maximum; classes are stored in label order.
    return Label(int(model.classes[int(np.argmax(scores))]))
