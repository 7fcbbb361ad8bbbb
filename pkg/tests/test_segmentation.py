import itertools

import numpy as np
import pytest

from gradeline.errors import DegenerateImageError, DimensionMismatchError
from gradeline.imaging import RgbImage
from gradeline.segmentation import (Mask, SegmentationConfig, apply_mask, kmeans, load_mask,
                                    save_mask, segment)


def brute_force_k2_wcss(points: np.ndarray) -> float:
    """Exhaustive best 2-partition WCSS (the independent oracle)."""
    n = len(points)
    best = np.inf
    for bits in itertools.product([0, 1], repeat=n - 1):
        assign = np.array((0,) + bits)
        if assign.min() == assign.max():
            continue
        wcss = 0.0
        for c in (0, 1):
            members = points[assign == c]
            if len(members):
                wcss += float(np.sum((members - members.mean(axis=0)) ** 2))
        best = min(best, wcss)
    return best


class TestKmeans:
    def test_k1_centroid_is_mean(self):
        model = kmeans(np.array([[0.0, 0.0], [2.0, 0.0]]), k=1)
        assert np.allclose(model.centroids[0], [1.0, 0.0])
        assert model.wcss == pytest.approx(2.0)

    def test_k2_finds_the_obvious_partition(self):
        pts = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]])
        model = kmeans(pts, k=2, seed=0)
        assert model.assignments[0] == model.assignments[1]
        assert model.assignments[2] == model.assignments[3]
        assert model.assignments[0] != model.assignments[2]
        assert model.wcss == pytest.approx(brute_force_k2_wcss(pts))

    def test_k_equals_n_gives_zero_wcss(self):
        pts = np.array([[0.0], [1.0], [5.0], [9.0]])
        model = kmeans(pts, k=4, seed=3)
        assert model.wcss == pytest.approx(0.0, abs=1e-12)

    def test_k_above_distinct_points_rejected(self):
        with pytest.raises(DegenerateImageError):
            kmeans(np.array([[1.0, 1.0], [1.0, 1.0]]), k=2)

    def test_empty_input_rejected(self):
        with pytest.raises(DegenerateImageError):
            kmeans(np.zeros((0, 3)), k=1)

    def test_same_seed_bit_reproducible(self, rng):
        pts = rng.normal(size=(60, 3))
        a = kmeans(pts, k=3, seed=7)
        b = kmeans(pts, k=3, seed=7)
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.assignments, b.assignments)
        assert a.wcss == b.wcss

    def test_wcss_trace_non_increasing_on_random_instances(self, rng):
        for _ in range(25):
            pts = rng.normal(size=(int(rng.integers(10, 80)), int(rng.integers(1, 4))))
            model = kmeans(pts, k=int(rng.integers(1, 5)), seed=int(rng.integers(1000)))
            trace = np.array(model.wcss_trace)
            assert np.all(np.diff(trace) <= 1e-9)
            assert model.wcss >= 0.0

    def test_near_optimal_on_small_k2_instances(self, rng):
        for trial in range(15):
            pts = rng.uniform(0, 10, size=(int(rng.integers(4, 13)), 2))
            model = kmeans(pts, k=2, seed=trial)
            best = brute_force_k2_wcss(pts)
            assert model.wcss >= best - 1e-9  # can never beat the optimum
            assert model.wcss <= best * 1.05 + 1e-9


def two_tone_image(fg_color, bg_color, size=48):
    ys, xs = np.mgrid[0:size, 0:size]
    ellipse = ((xs - size / 2) / (size * 0.32)) ** 2 + ((ys - size / 2) / (size * 0.22)) ** 2 <= 1
    arr = np.empty((size, size, 3), dtype=np.uint8)
    arr[:] = bg_color
    arr[ellipse] = fg_color
    return RgbImage(arr), ellipse


class TestSegment:
    def test_uniform_image_is_degenerate(self):
        img = RgbImage(np.full((16, 16, 3), 120, dtype=np.uint8))
        with pytest.raises(DegenerateImageError):
            segment(img)

    def test_ellipse_mask_iou(self):
        img, truth = two_tone_image((220, 190, 40), (96, 96, 108))
        mask = segment(img)
        inter = np.logical_and(mask.bits, truth).sum()
        union = np.logical_or(mask.bits, truth).sum()
        assert inter / union >= 0.95
        assert (mask.height, mask.width) == (img.height, img.width)

    def test_distant_speck_removed_by_largest_component(self):
        img, truth = two_tone_image((220, 190, 40), (96, 96, 108))
        arr = img.pixels.copy()
        arr[2, 2] = (220, 190, 40)  # lone foreground-coloured speck
        mask = segment(RgbImage(arr))
        assert not mask.bits[2, 2]
        assert mask.bits[24, 24]

    def test_segment_is_deterministic(self):
        img, _ = two_tone_image((220, 190, 40), (96, 96, 108))
        assert segment(img) == segment(img)

    def test_k3_configuration(self, rng):
        img, truth = two_tone_image((220, 190, 40), (96, 96, 108))
        noisy = np.clip(img.pixels.astype(np.int16)
                        + rng.integers(-4, 5, size=img.pixels.shape), 0, 255)
        mask = segment(RgbImage(noisy.astype(np.uint8)), SegmentationConfig(k=3))
        inter = np.logical_and(mask.bits, truth).sum()
        assert inter / truth.sum() >= 0.8


class TestApplyMask:
    def test_all_true_identity(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(4, 5, 3)).astype(np.uint8))
        mask = Mask(np.ones((4, 5), dtype=bool))
        assert apply_mask(img, mask) == img

    def test_all_false_blackout(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(4, 5, 3)).astype(np.uint8))
        mask = Mask(np.zeros((4, 5), dtype=bool))
        assert np.all(apply_mask(img, mask).pixels == 0)

    def test_half_mask_keeps_exactly_half(self, rng):
        img = RgbImage(rng.integers(1, 256, size=(4, 4, 3)).astype(np.uint8))
        bits = np.zeros((4, 4), dtype=bool)
        bits[:, :2] = True
        out = apply_mask(img, Mask(bits))
        assert np.array_equal(out.pixels[:, :2], img.pixels[:, :2])
        assert np.all(out.pixels[:, 2:] == 0)

    def test_dimension_mismatch_rejected(self):
        img = RgbImage(np.zeros((4, 4, 3), dtype=np.uint8))
        with pytest.raises(DimensionMismatchError):
            apply_mask(img, Mask(np.ones((3, 4), dtype=bool)))


def test_mask_png_round_trip(tmp_path, rng):
    bits = rng.integers(0, 2, size=(9, 6)).astype(bool)
    p = tmp_path / "m.png"
    save_mask(Mask(bits), p)
    assert load_mask(p) == Mask(bits)
