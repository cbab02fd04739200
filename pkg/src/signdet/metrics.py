"""Detection metrics.

Greedy confidence-ordered matching, precision/recall/F1, per-class
precision-recall curves with all-point-interpolated average precision,
mAP@0.5, an F1-vs-confidence sweep, and a confusion matrix with a
background row/column.

The dataset unit used throughout is a sequence of image pairs
``(detections, ground_truths)``; images without predictions or without
objects simply carry empty lists.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import iou_norm
from .labels import Annotation, Detection

ImagePair = tuple[Sequence[Detection], Sequence[Annotation]]


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching one image's detections against its ground truth.

    ``detection_is_tp`` and ``detection_gt`` are aligned with the input
    detection order; ``detection_gt[i]`` is the matched ground-truth index or
    None for a false positive. ``gt_matched`` is aligned with the input
    ground-truth order.
    """

    detection_is_tp: tuple[bool, ...]
    detection_gt: tuple[int | None, ...]
    gt_matched: tuple[bool, ...]

    @property
    def tp(self) -> int:
        return sum(self.detection_is_tp)

    @property
    def fp(self) -> int:
        return len(self.detection_is_tp) - self.tp

    @property
    def fn(self) -> int:
        return len(self.gt_matched) - sum(self.gt_matched)


def match(
    detections: Sequence[Detection],
    ground_truths: Sequence[Annotation],
    iou_threshold: float = 0.5,
) -> MatchResult:
    """Greedily match detections to same-class ground truths on one image.

    Detections are visited per class in order of descending confidence (ties
    broken by input position). Each takes the still-unmatched ground truth of
    its class with the highest IoU, provided that IoU reaches the threshold;
    otherwise it is a false positive. IoU ties go to the lowest ground-truth
    index.
    """
    is_tp: list[bool] = [False] * len(detections)
    det_gt: list[int | None] = [None] * len(detections)
    gt_matched = [False] * len(ground_truths)

    order = sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))
    for det_index in order:
        det = detections[det_index]
        best_iou = 0.0
        best_gt = None
        for gt_index, gt in enumerate(ground_truths):
            if gt_matched[gt_index] or gt.class_id != det.class_id:
                continue
            overlap = iou_norm(det.box, gt.box)
            if overlap > best_iou:
                best_iou = overlap
                best_gt = gt_index
        if best_gt is not None and best_iou >= iou_threshold:
            is_tp[det_index] = True
            det_gt[det_index] = best_gt
            gt_matched[best_gt] = True
    return MatchResult(tuple(is_tp), tuple(det_gt), tuple(gt_matched))


def precision(tp: int, fp: int) -> float:
    """TP / (TP + FP); 0.0 when there are no detections."""
    return tp / (tp + fp) if tp + fp > 0 else 0.0


def recall(tp: int, fn: int) -> float:
    """TP / (TP + FN); 0.0 when there is no ground truth."""
    return tp / (tp + fn) if tp + fn > 0 else 0.0


def f1(precision_value: float, recall_value: float) -> float:
    """Harmonic mean 2PR/(P+R); 0.0 when both inputs are 0."""
    total = precision_value + recall_value
    return 2.0 * precision_value * recall_value / total if total > 0 else 0.0


@dataclass(frozen=True)
class ClassRates:
    """P/R/F1 for one class with zero-denominator flags.

    A False ``*_defined`` flag means the value is the 0.0 convention for an
    empty denominator and should be rendered as "--" rather than a score.
    """

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    precision_defined: bool
    recall_defined: bool
    f1_defined: bool


def rates(tp: int, fp: int, fn: int) -> ClassRates:
    p = precision(tp, fp)
    r = recall(tp, fn)
    return ClassRates(
        tp=tp,
        fp=fp,
        fn=fn,
        precision=p,
        recall=r,
        f1=f1(p, r),
        precision_defined=tp + fp > 0,
        recall_defined=tp + fn > 0,
        f1_defined=p + r > 0,
    )


@dataclass(frozen=True)
class PRPoint:
    confidence: float
    precision: float
    recall: float


@dataclass(frozen=True)
class PRCurve:
    """Cumulative precision/recall walk down the global confidence ranking."""

    class_id: int
    n_gt: int
    points: tuple[PRPoint, ...]

    def __post_init__(self):
        for earlier, later in zip(self.points, self.points[1:]):
            if later.confidence > earlier.confidence:
                raise ValueError("PR points must have non-increasing confidence")
            if later.recall < earlier.recall:
                raise ValueError("PR recall must be non-decreasing")


def _class_ranking(images: Sequence[ImagePair], class_id: int):
    """All detections of one class, ranked by confidence across the dataset.

    Returns (ranked list of (confidence, image index, detection), ground
    truth boxes per image for the class, total ground-truth count).
    """
    entries = []
    gts_per_image = []
    n_gt = 0
    for image_index, (detections, ground_truths) in enumerate(images):
        for det_index, det in enumerate(detections):
            if det.class_id == class_id:
                entries.append((-det.confidence, image_index, det_index, det))
        class_gts = [gt for gt in ground_truths if gt.class_id == class_id]
        gts_per_image.append(class_gts)
        n_gt += len(class_gts)
    entries.sort(key=lambda e: e[:3])
    return entries, gts_per_image, n_gt


def pr_curve(images: Sequence[ImagePair], class_id: int, iou_threshold: float = 0.5) -> PRCurve:
    """Cumulative PR points for one class over the whole dataset."""
    entries, gts_per_image, n_gt = _class_ranking(images, class_id)
    matched = [[False] * len(gts) for gts in gts_per_image]
    points = []
    tp = 0
    fp = 0
    for neg_conf, image_index, _, det in entries:
        gts = gts_per_image[image_index]
        taken = matched[image_index]
        best_iou = 0.0
        best_gt = None
        for gt_index, gt in enumerate(gts):
            if taken[gt_index]:
                continue
            overlap = iou_norm(det.box, gt.box)
            if overlap > best_iou:
                best_iou = overlap
                best_gt = gt_index
        if best_gt is not None and best_iou >= iou_threshold:
            taken[best_gt] = True
            tp += 1
        else:
            fp += 1
        points.append(
            PRPoint(
                confidence=-neg_conf,
                precision=tp / (tp + fp),
                recall=tp / n_gt if n_gt > 0 else 0.0,
            )
        )
    return PRCurve(class_id=class_id, n_gt=n_gt, points=tuple(points))


def average_precision(curve: PRCurve, *, interpolation: str = "all_point") -> float:
    """Area under the precision envelope of a PR curve.

    ``all_point`` integrates max_{r' >= r} p(r') over recall (the default);
    ``11_point`` averages the envelope at recall 0.0, 0.1, ..., 1.0.
    """
    if interpolation not in ("all_point", "11_point"):
        raise ValueError(f"unknown interpolation: {interpolation!r}")
    recalls = [0.0] + [pt.recall for pt in curve.points] + [1.0]
    precisions = [0.0] + [pt.precision for pt in curve.points] + [0.0]
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    if interpolation == "11_point":
        total = 0.0
        for step in range(11):
            r = step / 10.0
            # envelope value at the first recall >= r
            idx = bisect.bisect_left(recalls, r)
            total += precisions[idx] if idx < len(precisions) else 0.0
        return total / 11.0
    ap = 0.0
    for i in range(1, len(recalls)):
        if recalls[i] != recalls[i - 1]:
            ap += (recalls[i] - recalls[i - 1]) * precisions[i]
    return ap


def per_class_ap(
    images: Sequence[ImagePair],
    *,
    iou_threshold: float = 0.5,
    interpolation: str = "all_point",
) -> dict[int, float]:
    """AP for every class that has at least one ground-truth box."""
    class_ids = sorted({gt.class_id for _, gts in images for gt in gts})
    return {
        class_id: average_precision(pr_curve(images, class_id, iou_threshold), interpolation=interpolation)
        for class_id in class_ids
    }


def map_at_50(
    images: Sequence[ImagePair],
    *,
    iou_threshold: float = 0.5,
    interpolation: str = "all_point",
) -> float:
    """Mean AP over classes with ground truth (classes absent from the ground
    truth are excluded from the mean, not scored zero)."""
    aps = per_class_ap(images, iou_threshold=iou_threshold, interpolation=interpolation)
    if not aps:
        raise ValueError("dataset has no ground-truth boxes")
    return sum(aps.values()) / len(aps)


@dataclass(frozen=True)
class F1Curve:
    thresholds: tuple[float, ...]
    values: tuple[float, ...]
    best_threshold: float
    best_f1: float


def default_f1_grid() -> tuple[float, ...]:
    return tuple(i / 1000 for i in range(1001))


def f1_confidence_curve(
    images: Sequence[ImagePair],
    iou_threshold: float = 0.5,
    grid: Sequence[float] | None = None,
) -> F1Curve:
    """Macro-mean F1 versus confidence threshold.

    For each threshold, detections with confidence >= threshold are kept and
    per-class F1 is averaged (unweighted) over classes that have ground
    truth. The reported best threshold is the first grid point achieving the
    maximum, which makes the argmax reproducible.
    """
    thresholds = tuple(grid) if grid is not None else default_f1_grid()
    class_ids = sorted({gt.class_id for _, gts in images for gt in gts})
    if not class_ids:
        raise ValueError("dataset has no ground-truth boxes")

    # Per class: confidences (ascending) and the cumulative-TP walk in
    # descending-confidence order. Filtering at threshold t keeps a prefix of
    # the descending ranking, so each sweep point is a pair of array lookups.
    per_class = []
    for class_id in class_ids:
        entries, gts_per_image, n_gt = _class_ranking(images, class_id)
        matched = [[False] * len(gts) for gts in gts_per_image]
        cumulative_tp = []
        tp = 0
        for _, image_index, _, det in entries:
            gts = gts_per_image[image_index]
            taken = matched[image_index]
            best_iou = 0.0
            best_gt = None
            for gt_index, gt in enumerate(gts):
                if taken[gt_index]:
                    continue
                overlap = iou_norm(det.box, gt.box)
                if overlap > best_iou:
                    best_iou = overlap
                    best_gt = gt_index
            if best_gt is not None and best_iou >= iou_threshold:
                taken[best_gt] = True
                tp += 1
            cumulative_tp.append(tp)
        ascending_confs = sorted(-entry[0] for entry in entries)
        per_class.append((ascending_confs, cumulative_tp, n_gt))

    values = []
    for threshold in thresholds:
        f1_sum = 0.0
        for ascending_confs, cumulative_tp, n_gt in per_class:
            kept = len(ascending_confs) - bisect.bisect_left(ascending_confs, threshold)
            tp = cumulative_tp[kept - 1] if kept > 0 else 0
            fp = kept - tp
            fn = n_gt - tp
            f1_sum += f1(precision(tp, fp), recall(tp, fn))
        values.append(f1_sum / len(per_class))

    best_index = max(range(len(thresholds)), key=lambda i: (values[i], -i))
    return F1Curve(
        thresholds=thresholds,
        values=tuple(values),
        best_threshold=thresholds[best_index],
        best_f1=values[best_index],
    )


def confusion_matrix(
    images: Sequence[ImagePair],
    num_classes: int,
    *,
    confidence_threshold: float = 0.25,
    iou_threshold: float = 0.45,
) -> np.ndarray:
    """(C+1) x (C+1) counts; row = ground-truth class, column = detected class.

    Index C is the background: unmatched ground truths land in column C and
    unmatched detections in row C. Matching is spatial only, across classes,
    greedy in confidence order, so a detection of the wrong class on top of a
    ground truth counts as (gt_class, det_class).
    """
    if num_classes <= 0:
        raise ValueError("num_classes must be positive")
    background = num_classes
    counts = np.zeros((num_classes + 1, num_classes + 1), dtype=np.int64)
    for detections, ground_truths in images:
        for gt in ground_truths:
            if gt.class_id >= num_classes:
                raise ValueError(f"ground-truth class {gt.class_id} outside num_classes={num_classes}")
        kept = [d for d in detections if d.confidence >= confidence_threshold]
        for det in kept:
            if det.class_id >= num_classes:
                raise ValueError(f"detection class {det.class_id} outside num_classes={num_classes}")
        order = sorted(range(len(kept)), key=lambda i: (-kept[i].confidence, i))
        taken = [False] * len(ground_truths)
        for det_index in order:
            det = kept[det_index]
            best_iou = 0.0
            best_gt = None
            for gt_index, gt in enumerate(ground_truths):
                if taken[gt_index]:
                    continue
                overlap = iou_norm(det.box, gt.box)
                if overlap > best_iou:
                    best_iou = overlap
                    best_gt = gt_index
            if best_gt is not None and best_iou >= iou_threshold:
                taken[best_gt] = True
                counts[ground_truths[best_gt].class_id, det.class_id] += 1
            else:
                counts[background, det.class_id] += 1
        for gt_index, gt in enumerate(ground_truths):
            if not taken[gt_index]:
                counts[gt.class_id, background] += 1
    return counts
