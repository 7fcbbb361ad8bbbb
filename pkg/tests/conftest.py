"""Shared fixtures: small synthetic frames and a trained variant-B model that
unit tests can reuse without re-training."""

from __future__ import annotations

import numpy as np
import pytest

from gradeline.classifiers import LabeledDataset, Label, svm_train
from gradeline.features import build_feature_vector
from gradeline.imaging import RgbImage
from gradeline.segmentation import apply_mask, segment
from gradeline.services.synthetic import generate_synthetic, make_spec


def extract_pair(label: Label, seed: int, variant: str):
    spec = make_spec(label, seed=seed)
    img, truth = generate_synthetic(spec)
    mask = segment(img)
    fv = build_feature_vector(apply_mask(img, mask), mask, variant)
    return fv, label, img, truth


@pytest.fixture(scope="session")
def small_dataset_b() -> LabeledDataset:
    pairs = []
    for i in range(36):
        fv, label, _img, _truth = extract_pair(Label(i % 3), seed=i, variant="B")
        pairs.append((fv, label))
    return LabeledDataset.from_pairs(pairs)


@pytest.fixture(scope="session")
def small_dataset_a() -> LabeledDataset:
    pairs = []
    for i in range(90):
        fv, label, _img, _truth = extract_pair(Label(i % 3), seed=100 + i, variant="A")
        pairs.append((fv, label))
    return LabeledDataset.from_pairs(pairs)


@pytest.fixture(scope="session")
def svm_model_b(small_dataset_b):
    return svm_train(small_dataset_b, gamma=0.005, C=1000.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def checker_image(size: int = 8, low: int = 0, high: int = 255) -> RgbImage:
    ys, xs = np.mgrid[0:size, 0:size]
    plane = np.where((ys + xs) % 2 == 0, high, low).astype(np.uint8)
    return RgbImage(np.stack([plane] * 3, axis=-1))
