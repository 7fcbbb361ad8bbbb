import math

import numpy as np
import pytest

from gradeline.classifiers.labels import Label
from gradeline.errors import DimensionMismatchError
from gradeline.features import (FeatureVector, build_feature_vector, hsv_planes, hv_stats, lbp,
                                lbp_histogram, rgb_to_hsv)
from gradeline.imaging import GrayImage, RgbImage
from gradeline.segmentation import Mask
from gradeline.services.synthetic import (RIPENED_HUE, UNRIPENED_HUE, generate_synthetic,
                                          make_spec)


def reference_hsv(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Independent scalar conversion straight from the defining equations,
    kept free of the library's vectorized code path."""
    v = max(r, g, b) / 255.0
    total = r + g + b
    s = 0.0 if total == 0 else 1.0 - 3.0 * min(r, g, b) / total
    num = (r - g) + (r - b)
    den = 2.0 * math.sqrt((r - g) ** 2 + (r - b) * (g - b))
    if den == 0.0 or s == 0.0:
        return 0.0, s, v
    theta = math.degrees(math.acos(max(-1.0, min(1.0, num / den))))
    h = theta if g >= b else 360.0 - theta
    return h % 360.0, s, v


class TestRgbToHsv:
    def test_pure_red(self):
        hsv = rgb_to_hsv(255, 0, 0)
        assert hsv.h == pytest.approx(0.0, abs=1e-9)
        assert hsv.s == pytest.approx(1.0)
        assert hsv.v == pytest.approx(1.0)

    def test_pure_green(self):
        hsv = rgb_to_hsv(0, 255, 0)
        # theta = acos(-255/510) = 120 degrees, and G >= B keeps H = theta
        assert hsv.h == pytest.approx(120.0, abs=1e-9)
        assert hsv.s == pytest.approx(1.0)
        assert hsv.v == pytest.approx(1.0)

    def test_achromatic_gray(self):
        hsv = rgb_to_hsv(100, 100, 100)
        assert hsv.h == 0.0
        assert hsv.s == 0.0
        assert hsv.v == pytest.approx(100 / 255)

    def test_black_division_guard(self):
        hsv = rgb_to_hsv(0, 0, 0)
        assert (hsv.h, hsv.s, hsv.v) == (0.0, 0.0, 0.0)

    def test_channel_validation(self):
        with pytest.raises(ValueError):
            rgb_to_hsv(-1, 0, 0)
        with pytest.raises(ValueError):
            rgb_to_hsv(0, 256, 0)

    def test_matches_independent_reference_on_10000_triples(self, rng):
        triples = rng.integers(0, 256, size=(10_000, 3))
        h, s, v = hsv_planes(triples.astype(np.uint8))
        for (r, g, b), hh, ss, vv in zip(triples.tolist(), h, s, v):
            rh, rs, rv = reference_hsv(r, g, b)
            assert abs(hh - rh) <= 1e-6
            assert abs(ss - rs) <= 1e-6
            assert abs(vv - rv) <= 1e-6

    def test_hue_range_never_reaches_360(self, rng):
        triples = rng.integers(0, 256, size=(5000, 3)).astype(np.uint8)
        h, _, _ = hsv_planes(triples)
        assert np.all(h >= 0.0)
        assert np.all(h < 360.0)


class TestLbp:
    def test_constant_patch_codes_255(self):
        img = GrayImage(np.full((3, 3), 7, dtype=np.uint8))
        assert lbp(img).codes[0, 0] == 255

    def test_hand_derived_alternating_neighbours(self):
        # Clockwise neighbours from top-left: 110, 90, 110, 90, 110, 90, 110, 90
        arr = np.array([
            [110, 90, 110],
            [90, 100, 90],
            [110, 90, 110],
        ], dtype=np.uint8)
        # offsets (-1,-1),(-1,0),(-1,1),(0,1),(1,1),(1,0),(1,-1),(0,-1)
        # values  110   90    110   90    110   90    110   90
        # bits     1     0     1     0     1     0     1     0 -> 1+4+16+64
        assert lbp(GrayImage(arr)).codes[0, 0] == 85

    def test_gray_shift_invariance(self, rng):
        arr = rng.integers(20, 200, size=(8, 8)).astype(np.uint8)
        shifted = (arr + 7).astype(np.uint8)  # no clipping in [20, 200] + 7
        assert lbp(GrayImage(arr)) == lbp(GrayImage(shifted))

    def test_too_small_image_rejected(self):
        with pytest.raises(ValueError):
            lbp(GrayImage(np.zeros((2, 5), dtype=np.uint8)))

    def test_map_is_interior_sized(self):
        img = GrayImage(np.zeros((5, 9), dtype=np.uint8))
        m = lbp(img)
        assert (m.height, m.width) == (3, 7)


class TestLbpHistogram:
    def test_constant_patch_full_mask(self):
        img = GrayImage(np.full((4, 4), 9, dtype=np.uint8))
        hist = lbp_histogram(lbp(img), Mask(np.ones((4, 4), dtype=bool)))
        assert hist[255] == pytest.approx(1.0)
        assert hist.sum() == pytest.approx(1.0)

    def test_empty_mask_gives_zero_vector(self):
        img = GrayImage(np.full((4, 4), 9, dtype=np.uint8))
        hist = lbp_histogram(lbp(img), Mask(np.zeros((4, 4), dtype=bool)))
        assert np.all(hist == 0.0)

    def test_checkerboard_concentrates_on_two_codes(self):
        ys, xs = np.mgrid[0:4, 0:4]
        board = np.where((ys + xs) % 2 == 0, 255, 0).astype(np.uint8)
        hist = lbp_histogram(lbp(GrayImage(board)), Mask(np.ones((4, 4), dtype=bool)))
        # Interior 2x2: centres on 255 see equal diagonals only (code 85),
        # centres on 0 see everything >= (code 255); two of each.
        assert hist[85] == pytest.approx(0.5)
        assert hist[255] == pytest.approx(0.5)

    def test_dimension_mismatch_rejected(self):
        img = GrayImage(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(DimensionMismatchError):
            lbp_histogram(lbp(img), Mask(np.ones((5, 5), dtype=bool)))


class TestHvStats:
    def test_uniform_green_foreground(self):
        img = RgbImage(np.tile(np.array([0, 255, 0], dtype=np.uint8), (3, 3, 1)))
        mean_h, mean_v = hv_stats(img, Mask(np.ones((3, 3), dtype=bool)))
        assert mean_h == pytest.approx(120.0, abs=1e-9)
        assert mean_v == pytest.approx(1.0)

    def test_mean_is_arithmetic(self):
        # Two pixels with hues 40 and 80 degrees average to 60.
        a = hue_pixel(40.0)
        b = hue_pixel(80.0)
        img = RgbImage(np.array([[a, b]], dtype=np.uint8))
        mean_h, _ = hv_stats(img, Mask(np.ones((1, 2), dtype=bool)))
        expected = (rgb_to_hsv(*a).h + rgb_to_hsv(*b).h) / 2
        assert mean_h == pytest.approx(expected, abs=1e-9)
        assert abs(mean_h - 60.0) < 1.0

    def test_empty_mask_rejected(self):
        img = RgbImage(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            hv_stats(img, Mask(np.zeros((2, 2), dtype=bool)))

    def test_unripened_band_membership(self):
        spec = make_spec(Label.UNRIPENED, seed=11)
        img, truth = generate_synthetic(spec)
        mean_h, _ = hv_stats(img, truth.mask)
        assert UNRIPENED_HUE[0] <= mean_h <= UNRIPENED_HUE[1]

    def test_ripened_band_membership(self):
        spec = make_spec(Label.RIPENED, seed=11, spot_count=0)
        img, truth = generate_synthetic(spec)
        mean_h, _ = hv_stats(img, truth.mask)
        assert RIPENED_HUE[0] <= mean_h <= RIPENED_HUE[1]


def hue_pixel(target_h: float) -> tuple[int, int, int]:
    from gradeline.services.synthetic import rgb_for_hue
    return rgb_for_hue(target_h, 0.8, 0.9)


class TestFeatureVector:
    def test_variant_b_on_uniform_green(self):
        img = RgbImage(np.tile(np.array([0, 255, 0], dtype=np.uint8), (3, 3, 1)))
        fv = build_feature_vector(img, Mask(np.ones((3, 3), dtype=bool)), "B")
        assert fv.values.tolist() == pytest.approx([120.0 / 360.0, 1.0])

    def test_variant_lengths(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(6, 6, 3)).astype(np.uint8))
        mask = Mask(np.ones((6, 6), dtype=bool))
        assert build_feature_vector(img, mask, "A").values.shape == (258,)
        assert build_feature_vector(img, mask, "B").values.shape == (2,)

    def test_variant_a_histogram_sums_to_one(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(6, 6, 3)).astype(np.uint8))
        mask = Mask(np.ones((6, 6), dtype=bool))
        fv = build_feature_vector(img, mask, "A")
        assert fv.values[2:].sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(fv.values[2:] >= 0.0)

    def test_unknown_variant_rejected(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(4, 4, 3)).astype(np.uint8))
        with pytest.raises(ValueError):
            build_feature_vector(img, Mask(np.ones((4, 4), dtype=bool)), "C")

    def test_json_round_trip(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(4, 4, 3)).astype(np.uint8))
        fv = build_feature_vector(img, Mask(np.ones((4, 4), dtype=bool)), "A")
        assert FeatureVector.from_obj(fv.to_obj()) == fv
