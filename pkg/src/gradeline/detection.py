"""Second-layer defect localization: boxes, IoU, connected components, the
pluggable detector contract and the deterministic brown-spot baseline, plus
the defect-count sub-classification rule."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy import ndimage

from .classifiers.labels import Subclass
from .errors import DimensionMismatchError
from .features import hsv_planes
from .imaging import RgbImage
from .segmentation import CROSS, Mask

DEFECT_CLASS = "defect"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left pixel (x, y) and positive extents (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got w={self.w} h={self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def x2(self) -> int:  # exclusive
        return self.x + self.w

    @property
    def y2(self) -> int:  # exclusive
        return self.y + self.h


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    score: float
    class_tag: str = DEFECT_CLASS

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


class Detector(Protocol):
    """Contract every second-layer detector implements."""

    def detect(self, img: RgbImage, fruit: Mask) -> list[Detection]: ...


@dataclass(frozen=True)
class SpotDetectorConfig:
    """Thresholds for the brown-spot baseline; all surfaced, never hard-coded."""

    hue_lo: float = 10.0
    hue_hi: float = 40.0
    max_value: float = 0.55
    min_area: int = 25
    merge_gap: int = 2

    def __post_init__(self):
        if not 0.0 <= self.hue_lo <= self.hue_hi < 360.0:
            raise ValueError(f"bad hue band [{self.hue_lo}, {self.hue_hi}]")
        if not 0.0 <= self.max_value <= 1.0:
            raise ValueError(f"max_value must be in [0, 1], got {self.max_value}")
        if self.min_area < 1 or self.merge_gap < 0:
            raise ValueError("min_area must be >= 1 and merge_gap >= 0")


def iou(a: BBox, b: BBox) -> float:
    """Intersection area over union area; 0 for disjoint boxes."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


@dataclass
class Region:
    """One 4-connected foreground region."""

    ys: np.ndarray
    xs: np.ndarray
    bbox: BBox = field(init=False)

    def __post_init__(self):
        y0, y1 = int(self.ys.min()), int(self.ys.max())
        x0, x1 = int(self.xs.min()), int(self.xs.max())
        self.bbox = BBox(x=x0, y=y0, w=x1 - x0 + 1, h=y1 - y0 + 1)

    @property
    def area(self) -> int:
        return int(self.ys.size)


def connected_components(m: Mask) -> list[Region]:
    """4-connected foreground regions, ordered by (top, left) of their boxes."""
    labelled, count = ndimage.label(m.bits, structure=CROSS)
    regions = []
    for i in range(1, count + 1):
        ys, xs = np.nonzero(labelled == i)
        regions.append(Region(ys=ys, xs=xs))
    regions.sort(key=lambda r: (r.bbox.y, r.bbox.x))
    return regions


class BrownSpotDetector:
    """Deterministic colour/region defect detector.

    Pixels inside the fruit whose hue falls in the brown band and whose value
    stays below the darkness threshold form candidate spots. A dilation pass
    only decides which candidates merge into one defect; areas, boxes and
    scores are measured on the original candidate pixels, so sub-threshold
    speckles never inflate into detections.
    """

    def __init__(self, cfg: SpotDetectorConfig = SpotDetectorConfig()):
        self.cfg = cfg

    def detect(self, img: RgbImage, fruit: Mask) -> list[Detection]:
        return detect_spots(img, fruit, self.cfg)


def detect_spots(img: RgbImage, fruit: Mask,
                 cfg: SpotDetectorConfig = SpotDetectorConfig()) -> list[Detection]:
    if (fruit.height, fruit.width) != (img.height, img.width):
        raise DimensionMismatchError("fruit mask does not match image dimensions")
    h, s, v = hsv_planes(img.pixels)
    candidates = fruit.bits & (h >= cfg.hue_lo) & (h <= cfg.hue_hi) & (v <= cfg.max_value)
    if not candidates.any():
        return []
    grouped = candidates
    if cfg.merge_gap > 0:
        grouped = ndimage.binary_dilation(candidates, structure=np.ones((3, 3), dtype=bool),
                                          iterations=cfg.merge_gap)
    labelled, count = ndimage.label(grouped, structure=CROSS)
    detections = []
    for i in range(1, count + 1):
        ys, xs = np.nonzero(candidates & (labelled == i))
        area = ys.size
        if area < cfg.min_area:
            continue
        y0, y1 = int(ys.min()), int(ys.max())
        x0, x1 = int(xs.min()), int(xs.max())
        score = min(1.0, area / (4.0 * cfg.min_area))
        detections.append(Detection(
            bbox=BBox(x=x0, y=y0, w=x1 - x0 + 1, h=y1 - y0 + 1),
            score=score,
        ))
    detections.sort(key=lambda d: (d.bbox.y, d.bbox.x))
    return detections


def ripeness_subclass(dets: list[Detection]) -> Subclass:
    """Five or fewer defects keeps the fruit mid-ripened; more means well-ripened."""
    return Subclass.MID_RIPENED if len(dets) <= 5 else Subclass.WELL_RIPENED


def detection_to_obj(d: Detection) -> dict:
    return {"x": d.bbox.x, "y": d.bbox.y, "w": d.bbox.w, "h": d.bbox.h,
            "score": d.score, "class": d.class_tag}


def detection_from_obj(obj: dict) -> Detection:
    return Detection(bbox=bbox_from_obj(obj), score=float(obj.get("score", 1.0)),
                     class_tag=str(obj.get("class", DEFECT_CLASS)))


def bbox_from_obj(obj: dict) -> BBox:
    """Accept either {x, y, w, h} or the corner-pair convention {x1, y1, x2, y2}."""
    if "w" in obj and "h" in obj:
        return BBox(x=int(obj["x"]), y=int(obj["y"]), w=int(obj["w"]), h=int(obj["h"]))
    if {"x1", "y1", "x2", "y2"} <= obj.keys():
        x1, y1, x2, y2 = (int(obj[k]) for k in ("x1", "y1", "x2", "y2"))
        return BBox(x=min(x1, x2), y=min(y1, y2), w=abs(x2 - x1), h=abs(y2 - y1))
    raise ValueError(f"box object needs x/y/w/h or x1/y1/x2/y2, got keys {sorted(obj)}")


def save_detections(dets: list[Detection], path) -> None:
    Path(path).write_text(json.dumps([detection_to_obj(d) for d in dets]))


def load_detections(path) -> list[Detection]:
    return [detection_from_obj(o) for o in json.loads(Path(path).read_text())]


def load_ground_truth(path) -> list[BBox]:
    """Ground-truth box file: a JSON array of box objects (score ignored)."""
    return [bbox_from_obj(o) for o in json.loads(Path(path).read_text())]
