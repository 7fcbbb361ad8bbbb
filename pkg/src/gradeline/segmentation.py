"""Fruit/background separation: K-means over pre-processed pixel colours, then
border-majority background selection and largest-component cleanup."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DegenerateImageError, DimensionMismatchError
from .imaging import GrayImage, RgbImage, log_transform, rank_filter

# 4-connectivity structuring element shared by the cleanup steps.
CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary foreground mask aligned with its source image."""

    bits: np.ndarray  # (height, width) bool, read-only

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=bool).copy()
        if arr.ndim != 2:
            raise ValueError(f"expected a (h, w) boolean array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def foreground_count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, Mask) and np.array_equal(self.bits, other.bits)


@dataclass
class ClusterModel:
    """Result of Lloyd's algorithm: centroids, point assignments and the
    within-cluster sum of squared distances (with its per-iteration trace)."""

    k: int
    centroids: np.ndarray  # (k, d)
    assignments: np.ndarray  # (n,) int
    wcss: float
    n_iter: int
    wcss_trace: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class SegmentationConfig:
    k: int = 2
    window: int = 3
    rank: int | None = None  # None = median
    max_iter: int = 50
    tol: float = 1e-4
    seed: int = 0
    fill_holes: bool = True  # keep dark defects inside the fruit mask


def kmeans(points, k: int, max_iter: int = 100, tol: float = 1e-4, seed: int = 0,
           n_init: int | str = "auto") -> ClusterModel:
    """Lloyd iterations from k-means++ style seeding, deterministic given seed.

    Stops when the largest centroid movement drops below tol or max_iter is
    reached. The WCSS trace is recorded after every assignment step and is
    non-increasing. Small inputs (<= 1000 points under the "auto" policy) get
    ten seeded restarts and keep the best run, which reliably lands on the
    optimal partition for tiny instances; image-scale inputs run once.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n == 0:
        raise DegenerateImageError("kmeans: empty input")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    distinct = np.unique(pts, axis=0)
    if k > distinct.shape[0]:
        raise DegenerateImageError(
            f"kmeans: k={k} exceeds the {distinct.shape[0]} distinct point(s)"
        )
    if n_init == "auto":
        n_init = 10 if n <= 1000 else 1
    best: ClusterModel | None = None
    for restart in range(int(n_init)):
        rng = np.random.default_rng([seed, restart])
        model = _lloyd(pts, k, max_iter, tol, rng)
        if best is None or model.wcss < best.wcss:
            best = model
    return best


def _lloyd(pts: np.ndarray, k: int, max_iter: int, tol: float,
           rng: np.random.Generator) -> ClusterModel:
    n = pts.shape[0]
    centroids = _seed_plus_plus(pts, k, rng)
    assignments = np.zeros(n, dtype=np.int64)
    wcss = 0.0
    trace: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_distances(pts, centroids)
        assignments = np.argmin(d2, axis=1)
        # Re-home empty clusters onto the point currently worst represented.
        counts = np.bincount(assignments, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            worst = int(np.argmax(d2[np.arange(n), assignments]))
            centroids[empty] = pts[worst]
            d2[:, empty] = np.sum((pts - centroids[empty]) ** 2, axis=1)
            assignments = np.argmin(d2, axis=1)
        wcss = float(np.sum(d2[np.arange(n), assignments]))
        trace.append(wcss)
        new_centroids = centroids.copy()
        for c in range(k):
            members = pts[assignments == c]
            if members.size:
                new_centroids[c] = members.mean(axis=0)
        movement = float(np.max(np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1))))
        centroids = new_centroids
        if movement < tol:
            break
    # Final assignment against the converged centroids.
    d2 = _sq_distances(pts, centroids)
    assignments = np.argmin(d2, axis=1)
    final = float(np.sum(d2[np.arange(n), assignments]))
    if not trace or final < trace[-1]:
        trace.append(final)
    wcss = trace[-1]
    return ClusterModel(k=k, centroids=centroids, assignments=assignments, wcss=wcss,
                        n_iter=n_iter, wcss_trace=trace)


def _seed_plus_plus(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0.0:
            # All remaining mass on duplicates of chosen points; take the first
            # unchosen index to stay deterministic.
            remaining = [i for i in range(n) if i not in chosen]
            nxt = remaining[0]
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return pts[chosen].astype(np.float64).copy()


def _sq_distances(pts: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)


def segment(img: RgbImage, cfg: SegmentationConfig = SegmentationConfig()) -> Mask:
    """Foreground mask via K-means on rank-filtered, log-transformed RGB pixels.

    The background cluster is the one owning the majority of image-border
    pixels; everything else is foreground, reduced to its largest 4-connected
    component (holes filled when cfg.fill_holes is set).
    """
    channels = []
    for c in range(3):
        plane = GrayImage(img.pixels[:, :, c])
        plane = rank_filter(plane, window=cfg.window, rank=cfg.rank)
        plane = log_transform(plane)
        channels.append(plane.pixels)
    filtered = np.stack(channels, axis=-1)

    h, w = filtered.shape[:2]
    model = kmeans(filtered.reshape(-1, 3), k=cfg.k, max_iter=cfg.max_iter,
                   tol=cfg.tol, seed=cfg.seed)
    labels = model.assignments.reshape(h, w)

    border = np.zeros((h, w), dtype=bool)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    border_counts = np.bincount(labels[border], minlength=cfg.k)
    background = int(np.argmax(border_counts))

    fg = labels != background
    if not fg.any():
        raise DegenerateImageError("segment: no foreground pixels after background removal")
    fg = _largest_component(fg)
    if cfg.fill_holes:
        fg = ndimage.binary_fill_holes(fg, structure=CROSS)
    return Mask(fg)


def _largest_component(bits: np.ndarray) -> np.ndarray:
    labelled, count = ndimage.label(bits, structure=CROSS)
    if count <= 1:
        return bits
    sizes = np.bincount(labelled.ravel())
    sizes[0] = 0
    return labelled == int(np.argmax(sizes))


def apply_mask(img: RgbImage, m: Mask) -> RgbImage:
    """Zero out background pixels; foreground is passed through unchanged."""
    if (m.height, m.width) != (img.height, img.width):
        raise DimensionMismatchError(
            f"mask {m.width}x{m.height} does not match image {img.width}x{img.height}"
        )
    out = img.pixels * m.bits[:, :, None].astype(np.uint8)
    return RgbImage(out)


def save_mask(m: Mask, path) -> None:
    """Serialize as an 8-bit PNG with foreground 255 and background 0."""
    Image.fromarray(m.bits.astype(np.uint8) * 255, mode="L").save(Path(path), format="PNG")


def load_mask(path) -> Mask:
    with Image.open(Path(path)) as im:
        arr = np.asarray(im.convert("L"))
    return Mask(arr >= 128)
