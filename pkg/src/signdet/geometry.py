"""Box geometry: corner conversion, intersection-over-union, NMS."""

from __future__ import annotations

from dataclasses import dataclass

from .labels import Detection, NormBox


@dataclass(frozen=True)
class CornerBox:
    """Axis-aligned box as (x1, y1, x2, y2) with x1 <= x2 and y1 <= y2.

    Unit-agnostic: works for normalized fractions and for pixels alike.
    Degenerate boxes (zero width or height) are allowed and have zero area.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(f"corners out of order: ({self.x1}, {self.y1}, {self.x2}, {self.y2})")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height


def to_corners(box: NormBox) -> CornerBox:
    return CornerBox(
        box.cx - box.w / 2.0,
        box.cy - box.h / 2.0,
        box.cx + box.w / 2.0,
        box.cy + box.h / 2.0,
    )


def from_corners(corners: CornerBox, *, clamp: bool = False) -> NormBox:
    """Convert corners back to center format.

    With ``clamp=True`` the corners are first clipped to [0, 1]. Without it,
    corners that imply an invalid NormBox (center outside the image, zero or
    oversized extent) raise.
    """
    x1, y1, x2, y2 = corners.x1, corners.y1, corners.x2, corners.y2
    if clamp:
        x1, y1 = max(0.0, x1), max(0.0, y1)
        x2, y2 = min(1.0, x2), min(1.0, y2)
        if x2 < x1 or y2 < y1:
            raise ValueError("box lies entirely outside the image")
    return NormBox((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)


def iou(a: CornerBox, b: CornerBox) -> float:
    """Intersection over union; 0.0 for disjoint or degenerate boxes."""
    inter_w = min(a.x2, b.x2) - max(a.x1, b.x1)
    inter_h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def iou_norm(a: NormBox, b: NormBox) -> float:
    return iou(to_corners(a), to_corners(b))


def iou_wh(a: tuple[float, float], b: tuple[float, float]) -> float:
    """IoU of two boxes aligned at a common center, given as (w, h) pairs."""
    wa, ha = a
    wb, hb = b
    if wa <= 0.0 or ha <= 0.0 or wb <= 0.0 or hb <= 0.0:
        return 0.0
    inter = min(wa, wb) * min(ha, hb)
    return inter / (wa * ha + wb * hb - inter)


def nms(
    detections: list[Detection],
    *,
    iou_threshold: float = 0.45,
    confidence_threshold: float = 0.25,
    class_aware: bool = True,
) -> list[Detection]:
    """Greedy non-maximum suppression.

    Detections below ``confidence_threshold`` and degenerate boxes are
    dropped; the rest are visited in order of descending confidence (ties
    broken by input position) and kept iff their IoU with every
    already-kept detection -- of the same class when ``class_aware`` -- is
    at most ``iou_threshold``. The result is idempotent and sorted by
    confidence.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold outside [0, 1]: {iou_threshold}")
    if not 0.0 <= confidence_threshold <= 1.0:
        raise ValueError(f"confidence_threshold outside [0, 1]: {confidence_threshold}")

    candidates = [
        (index, det, to_corners(det.box))
        for index, det in enumerate(detections)
        if det.confidence >= confidence_threshold and det.box.area > 0.0
    ]
    candidates.sort(key=lambda item: (-item[1].confidence, item[0]))

    kept: list[tuple[Detection, CornerBox]] = []
    for _, det, corners in candidates:
        suppressed = any(
            iou(corners, kept_corners) > iou_threshold
            for kept_det, kept_corners in kept
            if not class_aware or kept_det.class_id == det.class_id
        )
        if not suppressed:
            kept.append((det, corners))
    return [det for det, _ in kept]
