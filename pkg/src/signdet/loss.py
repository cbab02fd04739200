"""Composite grid-detection loss: target assignment, per-term evaluation,
and analytic gradients.

The image is divided into an S×S grid (cells indexed row-major). Each cell
holds B box predictors (x, y cell-relative center in [0,1]; w, h
image-relative size; confidence C) plus one class vector p of length C.
For each annotated box, the cell containing its center gets an object
target, and the predictor with the highest IoU against the annotation is
"responsible" for it. The loss is

    total = lambda_coord * sum_resp [(x - x̂)² + (y - ŷ)²]
          + lambda_coord * sum_resp [(√(w+ε) - √(ŵ+ε))² + (√(h+ε) - √(ĥ+ε))²]
          +                sum_resp (C - Ĉ)²
          + lambda_noobj * sum_rest (C - 0)²
          +                sum_scope ‖p - p̂‖²

where `resp` ranges over responsible (cell, predictor) pairs, `rest` over
every other pair, and the class sum over object cells or all cells by
configuration. ε keeps the square-root term differentiable at zero size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import CornerBox, iou, to_corners
from .labels import Annotation

CLASS_LOSS_SCOPES = ("object_cells", "all_cells")
CONFIDENCE_TARGETS = ("iou", "one")


class AssignmentWarning(UserWarning):
    """More than one annotation landed in the same grid cell."""


@dataclass(frozen=True)
class LossConfig:
    S: int
    B: int
    C: int
    lambda_coord: float = 5.0
    lambda_noobj: float = 0.5
    sqrt_epsilon: float = 1e-8
    class_loss_scope: str = "object_cells"
    confidence_target: str = "iou"

    def __post_init__(self):
        if self.S < 1 or self.B < 1 or self.C < 1:
            raise ValueError(f"S, B, C must be >= 1, got ({self.S}, {self.B}, {self.C})")
        if self.lambda_coord < 0 or self.lambda_noobj < 0:
            raise ValueError("lambda weights must be >= 0")
        if not self.sqrt_epsilon > 0:
            raise ValueError(f"sqrt_epsilon must be > 0, got {self.sqrt_epsilon}")
        if self.class_loss_scope not in CLASS_LOSS_SCOPES:
            raise ValueError(f"class_loss_scope must be one of {CLASS_LOSS_SCOPES}")
        if self.confidence_target not in CONFIDENCE_TARGETS:
            raise ValueError(f"confidence_target must be one of {CONFIDENCE_TARGETS}")

    @property
    def n_cells(self) -> int:
        return self.S * self.S


def _as_float_array(value, name: str) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} must be finite")
    return array


@dataclass(frozen=True, eq=False)
class GridPrediction:
    """Raw predictor outputs: boxes (S², B, 4), confidences (S², B),
    class_probs (S², C). Box columns are x, y (cell-relative) and w, h
    (image-relative)."""

    boxes: np.ndarray
    confidences: np.ndarray
    class_probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "boxes", _as_float_array(self.boxes, "boxes"))
        object.__setattr__(self, "confidences", _as_float_array(self.confidences, "confidences"))
        object.__setattr__(self, "class_probs", _as_float_array(self.class_probs, "class_probs"))
        if self.boxes.ndim != 3 or self.boxes.shape[2] != 4:
            raise ValueError(f"boxes must have shape (cells, B, 4), got {self.boxes.shape}")
        if self.confidences.shape != self.boxes.shape[:2]:
            raise ValueError(
                f"confidences shape {self.confidences.shape} does not match boxes {self.boxes.shape[:2]}"
            )
        if self.class_probs.ndim != 2 or self.class_probs.shape[0] != self.boxes.shape[0]:
            raise ValueError(f"class_probs must have shape (cells, C), got {self.class_probs.shape}")

    @property
    def n_cells(self) -> int:
        return self.boxes.shape[0]

    @property
    def n_predictors(self) -> int:
        return self.boxes.shape[1]

    @property
    def n_classes(self) -> int:
        return self.class_probs.shape[1]


@dataclass(frozen=True, eq=False)
class GridTarget:
    """Assignment result. ``responsible`` is -1 exactly where no object is
    present; ``boxes`` rows are (x̂, ŷ, ŵ, ĥ) with cell-relative offsets and
    image-relative sizes; ``class_probs`` rows are one-hot for object cells
    and all-zero elsewhere."""

    object_mask: np.ndarray
    responsible: np.ndarray
    boxes: np.ndarray
    confidences: np.ndarray
    class_probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "object_mask", np.asarray(self.object_mask, dtype=bool))
        object.__setattr__(self, "responsible", np.asarray(self.responsible, dtype=int))
        object.__setattr__(self, "boxes", _as_float_array(self.boxes, "boxes"))
        object.__setattr__(self, "confidences", _as_float_array(self.confidences, "confidences"))
        object.__setattr__(self, "class_probs", _as_float_array(self.class_probs, "class_probs"))
        n = self.object_mask.shape[0]
        if self.object_mask.ndim != 1:
            raise ValueError("object_mask must be one-dimensional")
        if self.responsible.shape != (n,) or self.confidences.shape != (n,):
            raise ValueError("responsible and confidences must have one entry per cell")
        if self.boxes.shape != (n, 4) or self.class_probs.ndim != 2 or self.class_probs.shape[0] != n:
            raise ValueError("boxes must be (cells, 4) and class_probs (cells, C)")
        if np.any(self.responsible[~self.object_mask] != -1):
            raise ValueError("responsible must be -1 in cells without an object")
        if np.any(self.responsible[self.object_mask] < 0):
            raise ValueError("responsible must be set in cells with an object")
        onehot = self.class_probs[self.object_mask]
        if onehot.size and not (
            np.all((onehot == 0.0) | (onehot == 1.0)) and np.all(onehot.sum(axis=1) == 1.0)
        ):
            raise ValueError("object-cell class targets must be one-hot")
        if np.any(self.class_probs[~self.object_mask] != 0.0):
            raise ValueError("class targets must be all-zero in cells without an object")

    @property
    def n_cells(self) -> int:
        return self.object_mask.shape[0]


@dataclass(frozen=True)
class LossBreakdown:
    coord_xy: float
    coord_wh: float
    obj_conf: float
    noobj_conf: float
    class_term: float
    total: float


@dataclass(frozen=True, eq=False)
class LossGradient:
    """Partial derivatives of the total loss, shaped like GridPrediction."""

    boxes: np.ndarray
    confidences: np.ndarray
    class_probs: np.ndarray


def cell_index(cx: float, cy: float, S: int) -> tuple[int, int, int]:
    """Map a normalized center to (row, col, row*S + col). Cells are
    half-open intervals, so a center on an interior boundary belongs to the
    higher cell; cx or cy equal to 1.0 stays in the last cell."""
    col = min(math.floor(cx * S), S - 1)
    row = min(math.floor(cy * S), S - 1)
    return row, col, row * S + col


def _check_pred(pred: GridPrediction, config: LossConfig) -> None:
    if pred.n_cells != config.n_cells or pred.n_predictors != config.B or pred.n_classes != config.C:
        raise ValueError(
            f"prediction shaped ({pred.n_cells}, {pred.n_predictors}, {pred.n_classes}) does not "
            f"match config (S²={config.n_cells}, B={config.B}, C={config.C})"
        )
    if np.any(pred.boxes[:, :, 2:4] < 0):
        raise ValueError("predicted w and h must be >= 0")


def _check_target(target: GridTarget, config: LossConfig) -> None:
    if target.n_cells != config.n_cells or target.class_probs.shape[1] != config.C:
        raise ValueError("target does not match config dimensions")
    if np.any(target.responsible >= config.B):
        raise ValueError(f"responsible predictor index out of range for B={config.B}")


def assign_targets(
    annotations: list[Annotation] | tuple[Annotation, ...],
    predictions: GridPrediction,
    config: LossConfig,
) -> GridTarget:
    """Build the per-cell training target for a set of annotations.

    Each annotation goes to the cell containing its center. When several
    land in one cell, the largest-area one is kept (first one on area ties)
    and an AssignmentWarning is issued. The responsible predictor is the one
    whose decoded box has the highest IoU with the annotation (lowest index
    on ties); its confidence target is that IoU, or 1.0 when the config says
    ``confidence_target="one"``.
    """
    _check_pred(predictions, config)
    S = config.S

    chosen: dict[int, Annotation] = {}
    for annotation in annotations:
        if annotation.class_id >= config.C:
            raise ValueError(f"class {annotation.class_id} outside C={config.C}")
        _, _, cell = cell_index(annotation.box.cx, annotation.box.cy, S)
        if cell in chosen:
            warnings.warn(
                f"cell {cell} holds more than one annotation; keeping the largest box",
                AssignmentWarning,
                stacklevel=2,
            )
            chosen[cell] = max((chosen[cell], annotation), key=lambda a: a.box.area)
        else:
            chosen[cell] = annotation

    n_cells = config.n_cells
    object_mask = np.zeros(n_cells, dtype=bool)
    responsible = np.full(n_cells, -1, dtype=int)
    boxes = np.zeros((n_cells, 4))
    confidences = np.zeros(n_cells)
    class_probs = np.zeros((n_cells, config.C))

    for cell, annotation in chosen.items():
        row, col = divmod(cell, S)
        gt_corners = to_corners(annotation.box)
        best_j, best_iou = 0, -1.0
        for j in range(config.B):
            x, y, w, h = predictions.boxes[cell, j]
            px = (col + x) / S
            py = (row + y) / S
            decoded = CornerBox(px - w / 2, py - h / 2, px + w / 2, py + h / 2)
            candidate = iou(decoded, gt_corners)
            if candidate > best_iou:
                best_j, best_iou = j, candidate

        object_mask[cell] = True
        responsible[cell] = best_j
        boxes[cell] = (
            annotation.box.cx * S - col,
            annotation.box.cy * S - row,
            annotation.box.w,
            annotation.box.h,
        )
        confidences[cell] = best_iou if config.confidence_target == "iou" else 1.0
        class_probs[cell, annotation.class_id] = 1.0

    return GridTarget(object_mask, responsible, boxes, confidences, class_probs)


def _scope_cells(target: GridTarget, config: LossConfig) -> np.ndarray:
    if config.class_loss_scope == "object_cells":
        return np.flatnonzero(target.object_mask)
    return np.arange(target.n_cells)


def loss(pred: GridPrediction, target: GridTarget, config: LossConfig) -> LossBreakdown:
    """Evaluate every term of the composite loss. All terms are sums of
    squares, so each is nonnegative and the total is their exact sum."""
    _check_pred(pred, config)
    _check_target(target, config)
    eps = config.sqrt_epsilon

    obj_cells = np.flatnonzero(target.object_mask)
    resp = target.responsible[obj_cells]
    pred_resp = pred.boxes[obj_cells, resp]
    target_boxes = target.boxes[obj_cells]

    coord_xy = config.lambda_coord * float(
        ((pred_resp[:, 0] - target_boxes[:, 0]) ** 2 + (pred_resp[:, 1] - target_boxes[:, 1]) ** 2).sum()
    )
    sqrt_w = np.sqrt(pred_resp[:, 2] + eps) - np.sqrt(target_boxes[:, 2] + eps)
    sqrt_h = np.sqrt(pred_resp[:, 3] + eps) - np.sqrt(target_boxes[:, 3] + eps)
    coord_wh = config.lambda_coord * float((sqrt_w**2 + sqrt_h**2).sum())

    obj_conf = float(((pred.confidences[obj_cells, resp] - target.confidences[obj_cells]) ** 2).sum())

    rest = np.ones_like(pred.confidences, dtype=bool)
    rest[obj_cells, resp] = False
    noobj_conf = config.lambda_noobj * float((pred.confidences[rest] ** 2).sum())

    scope = _scope_cells(target, config)
    class_term = float(((pred.class_probs[scope] - target.class_probs[scope]) ** 2).sum())

    total = coord_xy + coord_wh + obj_conf + noobj_conf + class_term
    return LossBreakdown(coord_xy, coord_wh, obj_conf, noobj_conf, class_term, total)


def loss_gradient(pred: GridPrediction, target: GridTarget, config: LossConfig) -> LossGradient:
    """Analytic partial derivatives of loss().total with respect to every
    predicted value. The confidence target is a constant: nothing flows
    back through the IoU used to build it."""
    _check_pred(pred, config)
    _check_target(target, config)
    eps = config.sqrt_epsilon

    grad_boxes = np.zeros_like(pred.boxes)
    grad_conf = np.zeros_like(pred.confidences)
    grad_class = np.zeros_like(pred.class_probs)

    obj_cells = np.flatnonzero(target.object_mask)
    resp = target.responsible[obj_cells]
    pred_resp = pred.boxes[obj_cells, resp]
    target_boxes = target.boxes[obj_cells]

    grad_boxes[obj_cells, resp, 0] = 2.0 * config.lambda_coord * (pred_resp[:, 0] - target_boxes[:, 0])
    grad_boxes[obj_cells, resp, 1] = 2.0 * config.lambda_coord * (pred_resp[:, 1] - target_boxes[:, 1])
    sqrt_pred_w = np.sqrt(pred_resp[:, 2] + eps)
    sqrt_pred_h = np.sqrt(pred_resp[:, 3] + eps)
    grad_boxes[obj_cells, resp, 2] = (
        config.lambda_coord * (sqrt_pred_w - np.sqrt(target_boxes[:, 2] + eps)) / sqrt_pred_w
    )
    grad_boxes[obj_cells, resp, 3] = (
        config.lambda_coord * (sqrt_pred_h - np.sqrt(target_boxes[:, 3] + eps)) / sqrt_pred_h
    )

    grad_conf[:] = 2.0 * config.lambda_noobj * pred.confidences
    grad_conf[obj_cells, resp] = 2.0 * (
        pred.confidences[obj_cells, resp] - target.confidences[obj_cells]
    )

    scope = _scope_cells(target, config)
    grad_class[scope] = 2.0 * (pred.class_probs[scope] - target.class_probs[scope])

    return LossGradient(grad_boxes, grad_conf, grad_class)


@dataclass(frozen=True)
class FiniteDifferenceReport:
    max_relative_error: float
    worst_component: str
    n_components: int
    step: float

    @property
    def ok(self) -> bool:
        return self.max_relative_error <= 1e-5


def finite_difference_check(
    pred: GridPrediction,
    target: GridTarget,
    config: LossConfig,
    *,
    step: float = 1e-4,
) -> FiniteDifferenceReport:
    """Compare loss_gradient() against central finite differences of
    loss().total. Relative error per component is
    |analytic - numeric| / max(|analytic|, |numeric|, 1). Predicted w and h
    must be >= step so the negative probe stays valid."""
    analytic = loss_gradient(pred, target, config)
    parts = [
        ("boxes", pred.boxes, analytic.boxes),
        ("confidences", pred.confidences, analytic.confidences),
        ("class_probs", pred.class_probs, analytic.class_probs),
    ]
    worst, worst_name, count = 0.0, "", 0
    for name, values, gradient in parts:
        flat = values.ravel()
        for i in range(flat.size):
            count += 1
            probe = {p_name: p_values.copy() for p_name, p_values, _ in parts}
            probe[name].ravel()[i] = flat[i] + step
            upper = loss(GridPrediction(probe["boxes"], probe["confidences"], probe["class_probs"]), target, config).total
            probe[name].ravel()[i] = flat[i] - step
            lower = loss(GridPrediction(probe["boxes"], probe["confidences"], probe["class_probs"]), target, config).total
            numeric = (upper - lower) / (2.0 * step)
            a = float(gradient.ravel()[i])
            error = abs(a - numeric) / max(abs(a), abs(numeric), 1.0)
            if error > worst:
                worst, worst_name = error, f"{name}[{i}]"
    return FiniteDifferenceReport(worst, worst_name, count, step)
