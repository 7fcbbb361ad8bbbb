"""End-to-end two-layer grading: segment, extract features, classify, and
(only for ripened fruit) count defects; then route to a conveyor track."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

from . import classifiers
from .classifiers.labels import Label, Subclass
from .detection import Detection, Detector, detection_from_obj, detection_to_obj, ripeness_subclass
from .errors import DegenerateImageError
from .features import build_feature_vector
from .imaging import RgbImage
from .segmentation import Mask, SegmentationConfig, apply_mask, segment


class Route(enum.Enum):
    MARKET = "Market"
    DEFECTIVE = "Defective"

    @classmethod
    def from_name(cls, name: str) -> "Route":
        for r in cls:
            if r.value == name:
                return r
        raise ValueError(f"unknown route {name!r}")


PRIORITY_SALE = "priority-sale"


@dataclass(frozen=True)
class RoutingPolicy:
    """Track assignment per outcome. Well-ripened fruit still goes to market
    but is annotated for priority sale; unclassifiable frames fail safe."""

    unripened: Route = Route.MARKET
    mid_ripened: Route = Route.MARKET
    well_ripened: Route = Route.MARKET
    overripened: Route = Route.DEFECTIVE
    unclassifiable: Route = Route.DEFECTIVE
    degraded: Route = Route.DEFECTIVE  # ripened frames when the cloud is down

    def route_for(self, label: Label | None, subclass: Subclass | None) -> Route:
        if label is None:
            return self.unclassifiable
        if label == Label.UNRIPENED:
            return self.unripened
        if label == Label.OVERRIPENED:
            return self.overripened
        if subclass == Subclass.WELL_RIPENED:
            return self.well_ripened
        return self.mid_ripened


@dataclass(frozen=True)
class GradeConfig:
    segmentation: SegmentationConfig = SegmentationConfig()
    policy: RoutingPolicy = RoutingPolicy()


@dataclass
class GradeResult:
    label: Label | None  # None when the frame could not be classified
    subclass: Subclass | None
    detections: list[Detection]
    route: Route
    timings: dict[str, float] = field(default_factory=dict)
    layer2_invoked: bool = False
    unclassifiable: bool = False
    degraded: bool = False
    annotations: tuple[str, ...] = ()

    def to_obj(self) -> dict:
        return {
            "label": self.label.wire_name if self.label is not None else "Unclassifiable",
            "subclass": self.subclass.wire_name if self.subclass is not None else None,
            "detections": [detection_to_obj(d) for d in self.detections],
            "route": self.route.value,
            "timings": self.timings,
            "layer2_invoked": self.layer2_invoked,
            "unclassifiable": self.unclassifiable,
            "degraded": self.degraded,
            "annotations": list(self.annotations),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "GradeResult":
        label = None if obj["label"] == "Unclassifiable" else Label.from_name(obj["label"])
        sub = obj.get("subclass")
        return cls(
            label=label,
            subclass=Subclass.from_name(sub) if sub else None,
            detections=[detection_from_obj(d) for d in obj.get("detections", [])],
            route=Route.from_name(obj["route"]),
            timings=dict(obj.get("timings", {})),
            layer2_invoked=bool(obj.get("layer2_invoked", False)),
            unclassifiable=bool(obj.get("unclassifiable", False)),
            degraded=bool(obj.get("degraded", False)),
            annotations=tuple(obj.get("annotations", ())),
        )

    def same_grading(self, other: "GradeResult") -> bool:
        """Field-for-field equality excluding timings."""
        return (self.label == other.label and self.subclass == other.subclass
                and self.detections == other.detections and self.route == other.route
                and self.layer2_invoked == other.layer2_invoked
                and self.unclassifiable == other.unclassifiable
                and self.degraded == other.degraded
                and self.annotations == other.annotations)


def classify_frame(img: RgbImage, model, cfg: GradeConfig) -> tuple[Label, Mask, dict[str, float]]:
    """First layer only: segment, mask, features, predict. Raises
    DegenerateImageError when the frame has no usable foreground."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    mask = segment(img, cfg.segmentation)
    timings["segment"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    masked = apply_mask(img, mask)
    fv = build_feature_vector(masked, mask, model.variant)
    timings["features"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    label = classifiers.predict(model, fv.values)
    timings["classify"] = time.perf_counter() - t0
    return label, mask, timings


def assemble_result(label: Label | None, subclass: Subclass | None,
                    detections: list[Detection], layer2_invoked: bool,
                    policy: RoutingPolicy, timings: dict[str, float],
                    unclassifiable: bool = False, degraded: bool = False) -> GradeResult:
    if degraded:
        route = policy.degraded
    else:
        route = policy.route_for(label, subclass)
    annotations: tuple[str, ...] = ()
    if subclass == Subclass.WELL_RIPENED and route == Route.MARKET:
        annotations = (PRIORITY_SALE,)
    return GradeResult(label=label, subclass=subclass, detections=detections,
                       route=route, timings=timings, layer2_invoked=layer2_invoked,
                       unclassifiable=unclassifiable, degraded=degraded,
                       annotations=annotations)


def grade(img: RgbImage, model, detector: Detector,
          cfg: GradeConfig = GradeConfig()) -> GradeResult:
    """Grade one frame in-process. The detector runs if and only if the first
    layer predicts Ripened; an unsegmentable frame is flagged unclassifiable
    and routed fail-safe."""
    start = time.perf_counter()
    try:
        label, mask, timings = classify_frame(img, model, cfg)
    except DegenerateImageError:
        timings = {"total": time.perf_counter() - start}
        return assemble_result(None, None, [], False, cfg.policy, timings,
                               unclassifiable=True)

    detections: list[Detection] = []
    subclass = None
    layer2 = False
    if label == Label.RIPENED:
        t0 = time.perf_counter()
        detections = detector.detect(img, mask)
        subclass = ripeness_subclass(detections)
        timings["detect"] = time.perf_counter() - t0
        layer2 = True
    timings["total"] = time.perf_counter() - start
    return assemble_result(label, subclass, detections, layer2, cfg.policy, timings)
