"""Raster types, image I/O and the pre-processing operators applied before segmentation.

Quantization rule for the whole package: round half up (x.5 goes to x+1).
Windowed operators replicate edge pixels so outputs never shrink.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import ImageFormatError

# Guard against absurd header dimensions before allocating.
MAX_PIXELS = 100_000_000

# Scale that maps the full 8-bit range onto itself: 255 = c * ln(256).
LOG_SCALE = 255.0 / math.log(256.0)

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


def round_half_up(values):
    """Round to the nearest integer with .5 ties going up. Package-wide rule."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Immutable row-major RGB raster, every channel an integer in [0, 255]."""

    pixels: np.ndarray  # (height, width, 3) uint8, read-only

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a (h, w, 3) pixel array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("channel values outside [0, 255]")
            arr = arr.astype(np.uint8)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, RgbImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable row-major grayscale raster with values in [0, 255]."""

    pixels: np.ndarray  # (height, width) uint8, read-only

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a (h, w) pixel array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("pixel values outside [0, 255]")
            arr = arr.astype(np.uint8)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


def load_image(path) -> RgbImage:
    """Decode a PNG or binary PPM (P6) file into an RgbImage."""
    data = Path(path).read_bytes()
    if data[:4] == b"\x89PNG":
        try:
            with Image.open(io.BytesIO(data)) as im:
                return RgbImage(np.asarray(im.convert("RGB")))
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise ImageFormatError(f"corrupt PNG: {path}") from exc
    if data[:2] == b"P6":
        return _decode_ppm(data, path)
    raise ImageFormatError(f"unsupported or corrupt image format: {path}")


def save_image(img: RgbImage, path) -> None:
    """Encode as PNG or binary PPM (P6) depending on the file suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")
    elif suffix in (".ppm", ".pnm"):
        path.write_bytes(encode_ppm(img))
    else:
        raise ImageFormatError(f"unsupported output format: {suffix!r}")


def encode_ppm(img: RgbImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def image_to_png_bytes(img: RgbImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def image_from_png_bytes(data: bytes) -> RgbImage:
    try:
        with Image.open(io.BytesIO(data)) as im:
            return RgbImage(np.asarray(im.convert("RGB")))
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError("corrupt PNG payload") from exc


def _decode_ppm(data: bytes, path) -> RgbImage:
    # Header tokens may be separated by any whitespace and '#' comments.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"unsupported or corrupt PPM header: {path}")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"unsupported or corrupt PPM header: {path}") from exc
    if width <= 0 or height <= 0 or width * height > MAX_PIXELS:
        raise ImageFormatError(f"PPM dimensions out of range: {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported PPM maxval {maxval} (only 255)")
    need = width * height * 3
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise ImageFormatError(f"unsupported or corrupt PPM (truncated pixel data): {path}")
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage(arr)


def to_gray(img: RgbImage) -> GrayImage:
    """Luma conversion: gray = round(0.299 R + 0.587 G + 0.114 B)."""
    gray = round_half_up(img.pixels.astype(np.float64) @ GRAY_WEIGHTS)
    return GrayImage(np.clip(gray, 0, 255).astype(np.uint8))


def rank_filter(img: GrayImage, window: int = 3, rank: int | None = None) -> GrayImage:
    """Order-statistic filter: each output pixel is the rank-th smallest value
    in the window centred on it (0-based). rank=None selects the median.
    Borders are handled by edge replication."""
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if rank is None:
        rank = (window * window) // 2
    if not 0 <= rank < window * window:
        raise ValueError(f"rank must be in [0, {window * window - 1}], got {rank}")
    out = ndimage.rank_filter(img.pixels, rank=rank, size=window, mode="nearest")
    return GrayImage(out)


def log_transform(img: GrayImage) -> GrayImage:
    """Contrast stretch: out = round(c * ln(1 + in)) with c = 255 / ln(256)."""
    lut = np.clip(round_half_up(LOG_SCALE * np.log1p(np.arange(256))), 0, 255).astype(np.uint8)
    return GrayImage(lut[img.pixels])
