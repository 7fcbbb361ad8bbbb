"""Colour and texture features: HSV conversion, local binary patterns and the
two feature-vector layouts consumed by the first-layer classifiers.

Variant "A" is [mean hue / 360, mean value, 256-bin LBP histogram] (258 dims);
variant "B" is [mean hue / 360, mean value] (2 dims).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .imaging import GrayImage, RgbImage, to_gray
from .segmentation import Mask

VARIANTS = ("A", "B")
VARIANT_DIMS = {"A": 258, "B": 2}

# 8-neighbour order for LBP codes: start at the top-left neighbour and walk
# clockwise; bit p carries weight 2**p. Trained models must record this tag.
LBP_NEIGHBOR_ORDER = "top-left-clockwise"
_LBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass(frozen=True)
class Hsv:
    """Hue in degrees [0, 360), saturation and value as fractions in [0, 1].

    Achromatic convention: h = 0 whenever s = 0.
    """

    h: float
    s: float
    v: float


@dataclass(frozen=True, eq=False)
class LbpMap:
    """Per-pixel 8-bit texture codes over the interior of the source image
    (one-pixel border trimmed)."""

    codes: np.ndarray  # (height, width) uint8, read-only

    def __post_init__(self):
        arr = np.asarray(self.codes, dtype=np.uint8).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "codes", arr)

    @property
    def width(self) -> int:
        return self.codes.shape[1]

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, LbpMap) and np.array_equal(self.codes, other.codes)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    variant: str
    values: np.ndarray

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown feature variant {self.variant!r}")
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.shape != (VARIANT_DIMS[self.variant],):
            raise ValueError(
                f"variant {self.variant} expects {VARIANT_DIMS[self.variant]} values, "
                f"got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FeatureVector) and self.variant == other.variant
                and np.array_equal(self.values, other.values))

    def to_obj(self) -> dict:
        return {"variant": self.variant, "values": self.values.tolist()}

    @classmethod
    def from_obj(cls, obj: dict) -> "FeatureVector":
        return cls(variant=obj["variant"], values=np.asarray(obj["values"], dtype=np.float64))


def hsv_planes(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized HSV over an (..., 3) uint8 array; returns (H deg, S, V)."""
    rgb = np.asarray(pixels, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.max(rgb, axis=-1) / 255.0
    total = r + g + b
    safe_total = np.where(total > 0, total, 1.0)
    s = np.where(total > 0, 1.0 - 3.0 * np.min(rgb, axis=-1) / safe_total, 0.0)
    num = (r - g) + (r - b)
    den = 2.0 * np.sqrt((r - g) ** 2 + (r - b) * (g - b))
    arg = np.clip(np.divide(num, den, out=np.ones_like(num), where=den > 0), -1.0, 1.0)
    theta = np.degrees(np.arccos(arg))
    h = np.where(g >= b, theta, 360.0 - theta)
    h = np.where((den == 0) | (s == 0), 0.0, h)
    h = np.where(h >= 360.0, 0.0, h)  # float guard: keep hue in [0, 360)
    return h, s, v


def rgb_to_hsv(r: int, g: int, b: int) -> Hsv:
    """Convert one RGB triple, channels in [0, 255], to the Hsv type."""
    for name, c in (("r", r), ("g", g), ("b", b)):
        if not 0 <= c <= 255:
            raise ValueError(f"channel {name}={c} outside [0, 255]")
    h, s, v = hsv_planes(np.array([[r, g, b]], dtype=np.float64))
    return Hsv(h=float(h[0]), s=float(s[0]), v=float(v[0]))


def lbp(img: GrayImage) -> LbpMap:
    """8-bit local binary pattern codes for every interior pixel.

    A neighbour contributes a 1-bit when its value is >= the centre value
    (ties count as 1, so a constant patch codes to 255).
    """
    h, w = img.height, img.width
    if h < 3 or w < 3:
        raise ValueError(f"image must be at least 3x3 for LBP, got {w}x{h}")
    a = img.pixels.astype(np.int16)
    center = a[1 : h - 1, 1 : w - 1]
    codes = np.zeros_like(center, dtype=np.uint8)
    for p, (dy, dx) in enumerate(_LBP_OFFSETS):
        neighbour = a[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes |= (neighbour >= center).astype(np.uint8) << p
    return LbpMap(codes)


def lbp_histogram(m: LbpMap, mask: Mask) -> np.ndarray:
    """256-bin histogram of codes at foreground interior pixels, normalized to
    sum 1. Returns the all-zero vector when the foreground is empty."""
    if (mask.height, mask.width) != (m.height + 2, m.width + 2):
        raise DimensionMismatchError(
            f"mask {mask.width}x{mask.height} does not match LBP source "
            f"{m.width + 2}x{m.height + 2}"
        )
    interior = mask.bits[1:-1, 1:-1]
    selected = m.codes[interior]
    hist = np.bincount(selected, minlength=256).astype(np.float64)
    total = hist.sum()
    if total == 0:
        return np.zeros(256, dtype=np.float64)
    return hist / total


def hv_stats(img: RgbImage, mask: Mask) -> tuple[float, float]:
    """Arithmetic means of per-pixel hue (degrees) and value over the
    foreground. Means are plain, not circular: the peel hues sit well away
    from the 0/360 wrap."""
    if (mask.height, mask.width) != (img.height, img.width):
        raise DimensionMismatchError("mask does not match image dimensions")
    if not mask.bits.any():
        raise ValueError("hv_stats requires a non-empty mask")
    h, _, v = hsv_planes(img.pixels)
    return float(h[mask.bits].mean()), float(v[mask.bits].mean())


def build_feature_vector(img: RgbImage, mask: Mask, variant: str) -> FeatureVector:
    """Assemble the per-image feature vector for the requested variant.

    Mean hue is scaled into [0, 1] by dividing by 360 so every component of
    the vector shares the same magnitude.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown feature variant {variant!r}")
    mean_h, mean_v = hv_stats(img, mask)
    head = [mean_h / 360.0, mean_v]
    if variant == "B":
        return FeatureVector(variant="B", values=np.array(head))
    hist = lbp_histogram(lbp(to_gray(img)), mask)
    return FeatureVector(variant="A", values=np.concatenate([head, hist]))
