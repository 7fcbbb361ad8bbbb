"""Synthetic conveyor frames: a crescent-shaped fruit of class-appropriate
peel colour on a plain background, with brown elliptical defects injected for
ripened fruit. The generator emits the exact fruit mask and defect boxes as
ground truth, and identical seeds render bit-identical frames."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..classifiers.labels import Label, Subclass
from ..detection import BBox
from ..features import rgb_to_hsv
from ..imaging import RgbImage
from ..segmentation import CROSS, Mask

# Peel hue bands (degrees) and value bands per class; the generator samples
# inside narrower sub-bands so pixel noise cannot leak outside them.
UNRIPENED_HUE = (72.0, 78.0)
RIPENED_HUE = (39.0, 72.0)
OVERRIPENED_HUE = (10.0, 40.0)
BROWN_SPOT_HUE = (10.0, 40.0)

_CLASS_STYLE = {
    # label: (hue sample band, value sample band, saturation, noise amplitude)
    Label.UNRIPENED: ((73.0, 77.0), (0.34, 0.48), 0.82, 3),
    Label.RIPENED: ((46.0, 64.0), (0.78, 0.92), 0.85, 6),
    Label.OVERRIPENED: ((20.0, 34.0), (0.36, 0.50), 0.78, 9),
}
_SPOT_HUE = (22.0, 30.0)
_SPOT_VALUE = (0.34, 0.44)

# Dark belt colour: after the log-transform pre-processing step it stays far
# from both peel tones, so two-cluster segmentation never lumps peel and belt.
DEFAULT_BACKGROUND = (42, 42, 52)
DEFAULT_SIZE = 128

# Boxes padded by this much must stay disjoint, leaving at least six empty
# cells between spots: growing both sides by a 2-pixel merge gap still cannot
# bridge them, so a detector sees every injected defect as distinct.
SPOT_SPACING = 3


@dataclass(frozen=True)
class SyntheticSpec:
    label: Label
    subclass: Subclass | None
    peel_hue: float
    peel_value: float
    peel_saturation: float
    spot_count: int
    seed: int
    size: int = DEFAULT_SIZE
    background: tuple[int, int, int] = DEFAULT_BACKGROUND
    noise_amplitude: int = 5
    spots: tuple[tuple[int, int, int, int], ...] | None = None  # (cx, cy, ax, ay)

    def __post_init__(self):
        if self.label != Label.RIPENED:
            if self.spot_count != 0:
                raise ValueError(f"{self.label.wire_name} frames must have 0 spots, "
                                 f"got {self.spot_count}")
            if self.subclass is not None:
                raise ValueError("only ripened frames carry a subclass")
        else:
            if self.subclass is None:
                raise ValueError("ripened frames need a subclass")
            if self.subclass == Subclass.MID_RIPENED and self.spot_count > 5:
                raise ValueError(f"mid-ripened allows at most 5 spots, got {self.spot_count}")
            if self.subclass == Subclass.WELL_RIPENED and self.spot_count <= 5:
                raise ValueError(f"well-ripened needs more than 5 spots, got {self.spot_count}")
        if self.size < 48:
            raise ValueError(f"size must be >= 48, got {self.size}")


@dataclass
class GroundTruth:
    label: Label
    subclass: Subclass | None
    mask: Mask
    spot_boxes: list[BBox] = field(default_factory=list)


def make_spec(label: Label, subclass: Subclass | None = None, seed: int = 0,
              size: int = DEFAULT_SIZE, spot_count: int | None = None) -> SyntheticSpec:
    """Sample a frame spec for the class: peel colour from the class bands and,
    for ripened fruit, a defect count consistent with the subclass."""
    rng = np.random.default_rng([seed, int(label)])
    hue_band, value_band, saturation, noise = _CLASS_STYLE[label]
    if label == Label.RIPENED:
        if subclass is None and spot_count is not None:
            subclass = (Subclass.MID_RIPENED if spot_count <= 5 else Subclass.WELL_RIPENED)
        elif subclass is None:
            subclass = Subclass(int(rng.integers(2)))
        if spot_count is None:
            spot_count = (int(rng.integers(0, 6)) if subclass == Subclass.MID_RIPENED
                          else int(rng.integers(6, 10)))
    else:
        subclass = None
        spot_count = 0
    return SyntheticSpec(
        label=label, subclass=subclass,
        peel_hue=float(rng.uniform(*hue_band)),
        peel_value=float(rng.uniform(*value_band)),
        peel_saturation=saturation,
        spot_count=spot_count, seed=seed, size=size, noise_amplitude=noise,
    )


def rgb_for_hue(hue: float, value: float, saturation: float) -> tuple[int, int, int]:
    """Find an RGB triple whose arccos-form hue matches the target by bisecting
    along the red-to-green edge of the colour hexagon at fixed value and
    saturation. Valid for targets in (0, 120)."""
    if not 0.0 < hue < 120.0:
        raise ValueError(f"hue target must be in (0, 120), got {hue}")
    hi_ch = max(1, min(255, round(value * 255)))
    lo_ch = max(0, min(hi_ch - 1, round(hi_ch * (1.0 - saturation))))

    def color_at(t: float) -> tuple[int, int, int]:
        if t <= 60.0:
            return hi_ch, round(lo_ch + (hi_ch - lo_ch) * t / 60.0), lo_ch
        return round(lo_ch + (hi_ch - lo_ch) * (120.0 - t) / 60.0), hi_ch, lo_ch

    lo_t, hi_t = 0.0, 120.0
    for _ in range(48):
        mid = (lo_t + hi_t) / 2.0
        if rgb_to_hsv(*color_at(mid)).h < hue:
            lo_t = mid
        else:
            hi_t = mid
    return color_at((lo_t + hi_t) / 2.0)


def _ellipse_mask(h: int, w: int, cx: float, cy: float, ax: float, ay: float) -> np.ndarray:
    ys, xs = np.mgrid[0:h, 0:w]
    return ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 <= 1.0


def _crescent_mask(size: int) -> np.ndarray:
    outer = _ellipse_mask(size, size, size * 0.5, size * 0.54, size * 0.43, size * 0.30)
    carve = _ellipse_mask(size, size, size * 0.5, size * 0.24, size * 0.45, size * 0.22)
    return outer & ~carve


def generate_synthetic(spec: SyntheticSpec) -> tuple[RgbImage, GroundTruth]:
    rng = np.random.default_rng(spec.seed)
    size = spec.size
    canvas = np.empty((size, size, 3), dtype=np.float64)
    canvas[:] = spec.background

    fruit = _crescent_mask(size)
    peel = rgb_for_hue(spec.peel_hue, spec.peel_value, spec.peel_saturation)
    canvas[fruit] = peel

    boxes: list[BBox] = []
    if spec.spots is not None:
        placed = [(cx, cy, ax, ay) for cx, cy, ax, ay in spec.spots]
    else:
        placed = _place_spots(fruit, spec.spot_count, rng)
    if len(placed) != spec.spot_count:
        raise ValueError(
            f"could not place {spec.spot_count} spots on this fruit (fit {len(placed)})"
        )
    for cx, cy, ax, ay in placed:
        spot_hue = float(rng.uniform(*_SPOT_HUE))
        spot_value = float(rng.uniform(*_SPOT_VALUE))
        colour = rgb_for_hue(spot_hue, spot_value, 0.85)
        spot = _ellipse_mask(size, size, cx, cy, ax, ay) & fruit
        if not spot.any():
            raise ValueError("spot placed outside the fruit")
        canvas[spot] = colour
        ys, xs = np.nonzero(spot)
        boxes.append(BBox(x=int(xs.min()), y=int(ys.min()),
                          w=int(xs.max() - xs.min() + 1), h=int(ys.max() - ys.min() + 1)))

    if spec.noise_amplitude > 0:
        canvas += rng.integers(-spec.noise_amplitude, spec.noise_amplitude + 1,
                               size=canvas.shape)
    img = RgbImage(np.clip(canvas, 0, 255).astype(np.uint8))
    truth = GroundTruth(label=spec.label, subclass=spec.subclass, mask=Mask(fruit),
                        spot_boxes=boxes)
    return img, truth


def _place_spots(fruit: np.ndarray, count: int, rng: np.random.Generator):
    """Choose non-overlapping spot ellipses well inside the fruit (eroded by a
    few pixels so defects never touch the silhouette). Greedy first-fit over a
    seeded permutation of interior positions, biggest spots first, with a few
    restart permutations for crowded frames."""
    if count == 0:
        return []
    h, w = fruit.shape
    interior = ndimage.binary_erosion(fruit, structure=CROSS, iterations=3)
    ys, xs = np.nonzero(interior)
    if ys.size == 0:
        return []
    # Spot axes scale with the canvas but never shrink below a 3-pixel radius,
    # which keeps every defect above the detector's default area floor.
    # Crowded frames use the smallest axes so everything fits.
    scale = min(h, w) / DEFAULT_SIZE
    if count >= 7:
        ax_lo, ax_hi = 3, 4
        ay_lo, ay_hi = 3, 3
    else:
        ax_lo, ax_hi = max(3, round(4 * scale)), max(4, round(6 * scale))
        ay_lo, ay_hi = 3, max(4, round(4 * scale))
    axes = [(int(rng.integers(ax_lo, ax_hi + 1)), int(rng.integers(ay_lo, ay_hi + 1)))
            for _ in range(count)]
    axes.sort(key=lambda p: -p[0] * p[1])
    templates: dict[tuple[int, int], np.ndarray] = {}
    best: list[tuple[int, int, int, int]] = []
    for restart in range(10):
        if restart < 8:
            order = rng.permutation(ys.size)
        else:
            # Crowded frames: raster-order first-fit packs tighter.
            order = np.arange(ys.size) if restart == 8 else np.arange(ys.size)[::-1]
        placed: list[tuple[int, int, int, int]] = []
        taken: list[tuple[int, int, int, int]] = []  # padded boxes x0,y0,x1,y1
        for idx in order:
            if len(placed) == count:
                break
            ax, ay = axes[len(placed)]
            cx, cy = int(xs[idx]), int(ys[idx])
            x0, y0 = cx - ax - SPOT_SPACING, cy - ay - SPOT_SPACING
            x1, y1 = cx + ax + SPOT_SPACING, cy + ay + SPOT_SPACING
            if x0 < 0 or y0 < 0 or x1 >= w or y1 >= h:
                continue
            if any(not (x1 < tx0 or tx1 < x0 or y1 < ty0 or ty1 < y0)
                   for tx0, ty0, tx1, ty1 in taken):
                continue
            key = (ax, ay)
            if key not in templates:
                yy, xx = np.mgrid[-ay : ay + 1, -ax : ax + 1]
                templates[key] = (xx / ax) ** 2 + (yy / ay) ** 2 <= 1.0
            region = interior[cy - ay : cy + ay + 1, cx - ax : cx + ax + 1]
            if not region[templates[key]].all():
                continue
            placed.append((cx, cy, ax, ay))
            taken.append((x0, y0, x1, y1))
        if len(placed) > len(best):
            best = placed
        if len(best) == count:
            break
    return best
