import hashlib
import json

import numpy as np
import pytest

from gradeline.augmentation import (DatasetManifest, ManifestEntry, augment_dataset, flip,
                                    rotate, shift)
from gradeline.classifiers.labels import Label
from gradeline.imaging import RgbImage, save_image


def img_from(rows) -> RgbImage:
    return RgbImage(np.asarray(rows, dtype=np.uint8))


def two_pixel() -> RgbImage:
    # 2x1 image: a then b, left to right.
    return img_from([[[10, 0, 0], [0, 20, 0]]])


class TestRotate:
    def test_right_angle_transposes_canvas(self):
        out = rotate(two_pixel(), 90)
        assert (out.width, out.height) == (1, 2)
        assert out.pixels[0, 0].tolist() == [10, 0, 0]
        assert out.pixels[1, 0].tolist() == [0, 20, 0]

    def test_full_turn_is_identity(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(5, 7, 3)).astype(np.uint8))
        assert rotate(img, 360) == img

    def test_half_turn_twice_is_identity(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(6, 4, 3)).astype(np.uint8))
        assert rotate(rotate(img, 180), 180) == img

    def test_right_angles_preserve_pixel_multiset(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(5, 8, 3)).astype(np.uint8))
        for angle in (90, 180, 270):
            out = rotate(img, angle)
            assert sorted(map(tuple, out.pixels.reshape(-1, 3))) == \
                sorted(map(tuple, img.pixels.reshape(-1, 3)))

    def test_arbitrary_angle_same_canvas_black_fill(self, rng):
        img = RgbImage(rng.integers(1, 256, size=(9, 9, 3)).astype(np.uint8))
        out = rotate(img, 30)
        assert (out.width, out.height) == (9, 9)
        # Corners rotate out of the frame and backfill with black.
        assert out.pixels[0, 0].tolist() == [0, 0, 0]


class TestFlip:
    def test_flip_twice_is_identity(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(4, 6, 3)).astype(np.uint8))
        for axis in ("horizontal", "vertical"):
            assert flip(flip(img, axis), axis) == img

    def test_horizontal_swaps_columns(self):
        out = flip(two_pixel(), "horizontal")
        assert out.pixels[0, 0].tolist() == [0, 20, 0]
        assert out.pixels[0, 1].tolist() == [10, 0, 0]

    def test_h_then_v_equals_half_turn(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(5, 5, 3)).astype(np.uint8))
        assert flip(flip(img, "horizontal"), "vertical") == rotate(img, 180)

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValueError):
            flip(two_pixel(), "diagonal")


class TestShift:
    def test_zero_shift_identity(self, rng):
        img = RgbImage(rng.integers(0, 256, size=(3, 3, 3)).astype(np.uint8))
        assert shift(img, 0, 0) == img

    def test_shift_right_vacates_black(self):
        out = shift(two_pixel(), 1, 0)
        assert out.pixels[0, 0].tolist() == [0, 0, 0]
        assert out.pixels[0, 1].tolist() == [10, 0, 0]

    def test_round_trip_loses_border_content(self):
        img = two_pixel()
        back = shift(shift(img, 1, 0), -1, 0)
        assert back != img  # the pixel pushed out is gone
        assert back.pixels[0, 0].tolist() == [10, 0, 0]
        assert back.pixels[0, 1].tolist() == [0, 0, 0]

    def test_oversized_shift_rejected(self):
        with pytest.raises(ValueError):
            shift(two_pixel(), 2, 0)


def write_source_images(tmp_path, n: int) -> DatasetManifest:
    tmp_path.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(99)
    entries = []
    for i in range(n):
        img = RgbImage(rng.integers(0, 256, size=(12, 12, 3)).astype(np.uint8))
        p = tmp_path / f"src_{i:03d}.png"
        save_image(img, p)
        entries.append(ManifestEntry(path=str(p), label=Label(i % 3), tag="original"))
    return DatasetManifest(entries=entries)


class TestAugmentDataset:
    def test_plan_counts_honoured(self, tmp_path):
        manifest = write_source_images(tmp_path / "src", 6)
        out = augment_dataset(manifest, {"rotation": 4, "flipping": 3, "shifting": 2},
                              seed=1, out_dir=tmp_path / "aug")
        counts = out.counts_per_tag()
        assert counts == {"original": 6, "rotation": 4, "flipping": 3, "shifting": 2}
        out.validate_files()

    def test_zero_plan_is_identity(self, tmp_path):
        manifest = write_source_images(tmp_path / "src", 3)
        out = augment_dataset(manifest, {}, seed=5, out_dir=tmp_path / "aug")
        assert out.entries == manifest.entries

    def test_same_seed_same_manifest(self, tmp_path):
        manifest = write_source_images(tmp_path / "src", 4)
        a = augment_dataset(manifest, {"rotation": 3}, seed=7, out_dir=tmp_path / "a")
        b = augment_dataset(manifest, {"rotation": 3}, seed=7, out_dir=tmp_path / "b")
        assert [(e.label, e.tag) for e in a.entries] == [(e.label, e.tag) for e in b.entries]
        ha = [hashlib.sha256((tmp_path / "a" / f"rotation_{i:05d}.png").read_bytes()).hexdigest()
              for i in range(3)]
        hb = [hashlib.sha256((tmp_path / "b" / f"rotation_{i:05d}.png").read_bytes()).hexdigest()
              for i in range(3)]
        assert ha == hb

    def test_labels_inherited_from_source(self, tmp_path):
        manifest = write_source_images(tmp_path / "src", 3)
        out = augment_dataset(manifest, {"flipping": 9}, seed=2, out_dir=tmp_path / "aug")
        by_path = {e.path: e.label for e in manifest.entries}
        assert all(e.label in by_path.values() for e in out.entries if e.tag == "flipping")

    def test_enlargement_plan_totals(self, tmp_path):
        # 150 originals + 250 per traditional transform = 900 entries.
        manifest = write_source_images(tmp_path / "src", 150)
        out = augment_dataset(manifest, {"rotation": 250, "flipping": 250, "shifting": 250},
                              seed=0, out_dir=tmp_path / "aug")
        assert len(out) == 900
        assert out.counts_per_tag() == {
            "original": 150, "rotation": 250, "flipping": 250, "shifting": 250,
        }

    def test_negative_plan_rejected(self, tmp_path):
        manifest = write_source_images(tmp_path / "src", 2)
        with pytest.raises(ValueError):
            augment_dataset(manifest, {"rotation": -1}, seed=0, out_dir=tmp_path / "x")


class TestManifest:
    def test_save_load_round_trip(self, tmp_path):
        manifest = write_source_images(tmp_path / "src", 5)
        p = tmp_path / "m.jsonl"
        manifest.save(p)
        again = DatasetManifest.load(p)
        assert again.entries == manifest.entries

    def test_jsonl_schema(self, tmp_path):
        manifest = write_source_images(tmp_path / "src", 1)
        p = tmp_path / "m.jsonl"
        manifest.save(p)
        line = json.loads(p.read_text().splitlines()[0])
        assert set(line) == {"path", "label", "tag"}
        assert line["label"] == "Unripened"

    def test_duplicate_paths_rejected(self):
        e = ManifestEntry(path="x.png", label=Label.RIPENED, tag="original")
        with pytest.raises(ValueError):
            DatasetManifest(entries=[e, e])

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError):
            ManifestEntry.from_obj({"path": "x", "label": "Ripened", "tag": "mystery"})
