"""Classification metrics, greedy detection matching, average IoU and AP.

Per-class metrics with a zero denominator are reported as None (absent),
never silently as 0. AP integrates the raw score-ranked PR curve: each time
recall steps up, the precision at that point contributes (delta recall) *
precision, with no monotone envelope applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifiers.labels import Label
from .detection import BBox, Detection, iou


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns predicted, both in label order."""

    labels: list[Label]
    counts: np.ndarray  # (n, n) int64

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))


def confusion(pred: list[Label], truth: list[Label],
              labels: list[Label] | None = None) -> ConfusionMatrix:
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(truth)} truths")
    if not pred:
        raise ValueError("cannot build a confusion matrix from zero samples")
    labels = labels or list(Label)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, t in zip(pred, truth):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(labels=list(labels), counts=counts)


def accuracy(cm: ConfusionMatrix) -> float:
    """Overall accuracy: correctly predicted samples over all samples."""
    return cm.trace / cm.total


def recall_per_class(cm: ConfusionMatrix) -> list[float | None]:
    """One-vs-rest recall (sensitivity) per class; None when the class has no
    true samples."""
    out = []
    for i in range(len(cm.labels)):
        denom = int(cm.counts[i, :].sum())
        out.append(None if denom == 0 else int(cm.counts[i, i]) / denom)
    return out


def precision_per_class(cm: ConfusionMatrix) -> list[float | None]:
    """One-vs-rest precision per class; None when nothing was predicted as it."""
    out = []
    for i in range(len(cm.labels)):
        denom = int(cm.counts[:, i].sum())
        out.append(None if denom == 0 else int(cm.counts[i, i]) / denom)
    return out


def f1_per_class(cm: ConfusionMatrix) -> list[float | None]:
    out = []
    for p, r in zip(precision_per_class(cm), recall_per_class(cm)):
        if p is None or r is None or p + r == 0:
            out.append(None)
        else:
            out.append(2.0 * p * r / (p + r))
    return out


def classification_report(cm: ConfusionMatrix) -> dict:
    return {
        "labels": [lab.wire_name for lab in cm.labels],
        "counts": cm.counts.tolist(),
        "accuracy": accuracy(cm),
        "recall": recall_per_class(cm),
        "precision": precision_per_class(cm),
        "f1": f1_per_class(cm),
        "total": cm.total,
    }


def format_classification_table(cm: ConfusionMatrix) -> str:
    """Human-readable confusion table with per-class metrics."""
    names = [lab.wire_name for lab in cm.labels]
    width = max(len(n) for n in names) + 2
    lines = [" " * width + "".join(f"{n:>{width}}" for n in names) +
             f"{'recall':>{width}}"]
    recalls = recall_per_class(cm)
    for i, n in enumerate(names):
        row = "".join(f"{int(c):>{width}}" for c in cm.counts[i])
        rec = "-" if recalls[i] is None else f"{recalls[i] * 100:.2f}%"
        lines.append(f"{n:>{width}}" + row + f"{rec:>{width}}")
    precs = ["-" if p is None else f"{p * 100:.2f}%" for p in precision_per_class(cm)]
    lines.append(f"{'precision':>{width}}" + "".join(f"{p:>{width}}" for p in precs)
                 + f"{accuracy(cm) * 100:>{width - 1}.2f}%")
    return "\n".join(lines)


@dataclass
class PrCurve:
    """(recall, precision) points along the score-ranked detections."""

    points: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class DetectionEvalResult:
    tp: int
    fp: int
    fn: int
    average_iou: float
    ap: float
    recall: float | None
    precision: float | None
    curve: PrCurve = field(default_factory=PrCurve)

    def to_obj(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "average_iou": self.average_iou, "ap": self.ap,
                "recall": self.recall, "precision": self.precision}


def _ranked_matches(preds: list[Detection], truths: list[BBox], iou_thresh: float):
    """Greedy matching down the score ranking. Returns (flags, ious) where
    flags[i] is True when the i-th ranked prediction is a true positive."""
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].score, i))
    taken = [False] * len(truths)
    flags: list[bool] = []
    matched_ious: list[float] = []
    for pi in order:
        best_iou = 0.0
        best_t = -1
        for t, truth in enumerate(truths):
            if taken[t]:
                continue
            val = iou(preds[pi].bbox, truth)
            if val > best_iou:  # strict: ties keep the earlier truth index
                best_iou = val
                best_t = t
        if best_t >= 0 and best_iou >= iou_thresh:
            taken[best_t] = True
            flags.append(True)
            matched_ious.append(best_iou)
        else:
            flags.append(False)
    return flags, matched_ious


def match_detections(preds: list[Detection], truths: list[BBox],
                     iou_thresh: float = 0.5) -> DetectionEvalResult:
    """Score-ordered greedy matching at the IoU threshold; unmatched truths
    count as false negatives."""
    if not 0.0 < iou_thresh <= 1.0:
        raise ValueError(f"iou_thresh must be in (0, 1], got {iou_thresh}")
    flags, matched_ious = _ranked_matches(preds, truths, iou_thresh)
    tp = sum(flags)
    fp = len(flags) - tp
    fn = len(truths) - tp
    curve = PrCurve()
    running_tp = 0
    for i, flag in enumerate(flags, start=1):
        running_tp += int(flag)
        rec = running_tp / len(truths) if truths else 0.0
        curve.points.append((rec, running_tp / i))
    ap = _step_ap(flags, len(truths)) if truths else 0.0
    return DetectionEvalResult(
        tp=tp, fp=fp, fn=fn,
        average_iou=float(np.mean(matched_ious)) if matched_ious else 0.0,
        ap=ap,
        recall=tp / (tp + fn) if (tp + fn) > 0 else None,
        precision=tp / (tp + fp) if (tp + fp) > 0 else None,
        curve=curve,
    )


def _step_ap(flags: list[bool], n_truths: int) -> float:
    ap = 0.0
    tp = 0
    for i, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
            ap += (1.0 / n_truths) * (tp / i)
    return ap


def average_precision(preds: list[Detection], truths: list[BBox],
                      iou_thresh: float = 0.5) -> float:
    """Area under the raw score-ranked PR curve for the single defect class
    (so the mean over classes equals this value)."""
    if not truths:
        raise ValueError("average_precision needs a non-empty truth set")
    flags, _ = _ranked_matches(preds, truths, iou_thresh)
    return _step_ap(flags, len(truths))
