"""Traditional dataset enlargement (rotation, flipping, shifting) and the
JSON-lines dataset manifest."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifiers.labels import Label
from .imaging import RgbImage, load_image, save_image

TAGS = ("original", "rotation", "flipping", "shifting", "synthetic")
AUGMENT_TAGS = ("rotation", "flipping", "shifting")

DEFAULT_MAX_ANGLE = 25.0  # degrees either way
DEFAULT_MAX_SHIFT_FRAC = 0.10


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: Label
    tag: str

    def to_obj(self) -> dict:
        return {"path": self.path, "label": self.label.wire_name, "tag": self.tag}

    @classmethod
    def from_obj(cls, obj: dict) -> "ManifestEntry":
        tag = obj["tag"]
        if tag not in TAGS:
            raise ValueError(f"unknown provenance tag {tag!r}")
        return cls(path=obj["path"], label=Label.from_name(obj["label"]), tag=tag)


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("manifest paths must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    def counts_per_tag(self) -> dict[str, int]:
        counts = {t: 0 for t in TAGS}
        for e in self.entries:
            counts[e.tag] += 1
        return {t: c for t, c in counts.items() if c}

    def validate_files(self) -> None:
        missing = [e.path for e in self.entries if not Path(e.path).exists()]
        if missing:
            raise FileNotFoundError(f"{len(missing)} manifest file(s) missing, first: {missing[0]}")

    def save(self, path) -> None:
        lines = [json.dumps(e.to_obj()) for e in self.entries]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        entries = []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                entries.append(ManifestEntry.from_obj(json.loads(line)))
        return cls(entries=entries)


def rotate(img: RgbImage, angle: float) -> RgbImage:
    """Rotate clockwise by angle degrees. Right angles are exact pixel
    permutations (the canvas transposes); anything else resamples nearest-
    neighbour about the centre onto a same-size canvas with black fill."""
    angle = angle % 360.0
    if angle == 0.0:
        return RgbImage(img.pixels)
    if angle % 90.0 == 0.0:
        return RgbImage(np.rot90(img.pixels, k=-int(angle // 90)))
    h, w = img.height, img.width
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rad = math.radians(angle)
    cos_a, sin_a = math.cos(rad), math.sin(rad)
    ys, xs = np.mgrid[0:h, 0:w]
    dx = xs - cx
    dy = ys - cy
    # Inverse map: rotate output coordinates back by -angle.
    src_x = np.rint(cos_a * dx - sin_a * dy + cx).astype(np.int64)
    src_y = np.rint(sin_a * dx + cos_a * dy + cy).astype(np.int64)
    inside = (src_x >= 0) & (src_x < w) & (src_y >= 0) & (src_y < h)
    out = np.zeros_like(img.pixels)
    out[inside] = img.pixels[src_y[inside], src_x[inside]]
    return RgbImage(out)


def flip(img: RgbImage, axis: str) -> RgbImage:
    """Mirror the image; axis 'horizontal' swaps left/right, 'vertical'
    swaps top/bottom."""
    if axis == "horizontal":
        return RgbImage(np.fliplr(img.pixels))
    if axis == "vertical":
        return RgbImage(np.flipud(img.pixels))
    raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")


def shift(img: RgbImage, dx: int, dy: int) -> RgbImage:
    """Translate by (dx, dy) pixels; vacated pixels turn black."""
    if abs(dx) >= img.width or abs(dy) >= img.height:
        raise ValueError(f"shift ({dx}, {dy}) moves the whole {img.width}x{img.height} image out")
    out = np.zeros_like(img.pixels)
    src = img.pixels
    h, w = img.height, img.width
    ys_dst = slice(max(dy, 0), h + min(dy, 0))
    xs_dst = slice(max(dx, 0), w + min(dx, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[ys_dst, xs_dst] = src[ys_src, xs_src]
    return RgbImage(out)


def augment_dataset(manifest: DatasetManifest, plan: dict[str, int], seed: int,
                    out_dir) -> DatasetManifest:
    """Enlarge the dataset per the plan ({tag: count}); source images sample
    uniformly with the seeded RNG and transforms use random parameters. The
    returned manifest appends the written files, labels inherited."""
    for tag, count in plan.items():
        if tag not in AUGMENT_TAGS:
            raise ValueError(f"unknown augmentation tag {tag!r}")
        if count < 0:
            raise ValueError(f"plan count for {tag} must be >= 0")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    new_entries = list(manifest.entries)
    for tag in AUGMENT_TAGS:  # fixed tag order keeps runs reproducible
        count = plan.get(tag, 0)
        for i in range(count):
            src = manifest.entries[int(rng.integers(len(manifest.entries)))]
            img = load_image(src.path)
            if tag == "rotation":
                angle = float(rng.uniform(-DEFAULT_MAX_ANGLE, DEFAULT_MAX_ANGLE))
                img = rotate(img, angle)
            elif tag == "flipping":
                img = flip(img, "horizontal" if rng.integers(2) == 0 else "vertical")
            else:
                max_dx = max(1, int(img.width * DEFAULT_MAX_SHIFT_FRAC))
                max_dy = max(1, int(img.height * DEFAULT_MAX_SHIFT_FRAC))
                img = shift(img, int(rng.integers(-max_dx, max_dx + 1)),
                            int(rng.integers(-max_dy, max_dy + 1)))
            path = out_dir / f"{tag}_{i:05d}.png"
            save_image(img, path)
            new_entries.append(ManifestEntry(path=str(path), label=src.label, tag=tag))
    return DatasetManifest(entries=new_entries)
