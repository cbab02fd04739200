"""Dataset operations: deterministic splits, integrity checks, statistics,
and anchor generation by k-means over box shapes."""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import iou_wh
from .labels import Annotation, DatasetDescriptor, LabelError, NormBox, parse_label_file


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    train_fraction: float
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


def _shuffle_key(seed: int, sample_id: str) -> tuple[bytes, str]:
    # Deterministic shuffle without PRNG state: order ids by
    # SHA-256("<seed>\x00<id>"). Reproducible from any language or runtime.
    digest = hashlib.sha256(f"{seed}\x00{sample_id}".encode("utf-8")).digest()
    return digest, sample_id


def _train_count(n: int, train_fraction: float) -> int:
    # Fraction keeps floor(fraction * N) exact even when the product lands
    # within float error of an integer.
    return math.floor(Fraction(train_fraction) * n)


def split(
    ids: Sequence[str],
    train_fraction: float,
    seed: int,
    *,
    stratify_by: Mapping[str, int] | None = None,
) -> SplitPlan:
    """Deterministically split ids into train/test.

    Ids are ordered by a seeded hash key (SHA-256 over seed and id) and the
    first floor(train_fraction * N) go to train. With ``stratify_by`` (a
    mapping id -> class), the same rule is applied within each class and the
    per-class parts are concatenated in class order, so every class keeps
    roughly the global train fraction.
    """
    ids = list(ids)
    if not ids:
        raise ValueError("cannot split an empty id list")
    if len(set(ids)) != len(ids):
        duplicates = sorted(value for value, count in Counter(ids).items() if count > 1)
        raise ValueError(f"duplicate ids: {duplicates}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction outside (0, 1): {train_fraction}")

    if stratify_by is not None:
        missing = [sample_id for sample_id in ids if sample_id not in stratify_by]
        if missing:
            raise ValueError(f"stratify_by missing ids: {missing[:5]}")
        train: list[str] = []
        test: list[str] = []
        for class_id in sorted(set(stratify_by[sample_id] for sample_id in ids)):
            group = [sample_id for sample_id in ids if stratify_by[sample_id] == class_id]
            part = split(group, train_fraction, seed)
            train.extend(part.train_ids)
            test.extend(part.test_ids)
        return SplitPlan(seed, train_fraction, tuple(train), tuple(test))

    shuffled = sorted(ids, key=lambda sample_id: _shuffle_key(seed, sample_id))
    n_train = _train_count(len(ids), train_fraction)
    return SplitPlan(seed, train_fraction, tuple(shuffled[:n_train]), tuple(shuffled[n_train:]))


def write_split_manifests(plan: SplitPlan, train_path: str | Path, test_path: str | Path) -> None:
    from .ioutil import atomic_write_text

    atomic_write_text(train_path, "".join(f"{sample_id}\n" for sample_id in plan.train_ids))
    atomic_write_text(test_path, "".join(f"{sample_id}\n" for sample_id in plan.test_ids))


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # orphan_label | missing_label | class_out_of_range | malformed_line | duplicate_box
    path: str
    line: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues

    def count(self, kind: str) -> int:
        return sum(1 for issue in self.issues if issue.kind == kind)


def validate_dataset(
    descriptor: DatasetDescriptor,
    image_paths: Iterable[str | Path],
    label_paths: Iterable[str | Path],
    *,
    strict: bool = True,
) -> ValidationReport:
    """Cross-check images against label files, pairing them by stem.

    Reported findings: labels without an image (orphan_label), images without
    a label file (missing_label), class ids >= the descriptor's class count,
    unparseable lines, and exact duplicate boxes. Unreadable paths raise.
    """
    images = {Path(p).stem: Path(p) for p in image_paths}
    labels = {Path(p).stem: Path(p) for p in label_paths}
    issues: list[ValidationIssue] = []

    for stem in sorted(labels.keys() - images.keys()):
        issues.append(ValidationIssue("orphan_label", str(labels[stem]), None, "label file has no matching image"))
    for stem in sorted(images.keys() - labels.keys()):
        issues.append(ValidationIssue("missing_label", str(images[stem]), None, "image has no label file"))

    for stem in sorted(labels):
        path = labels[stem]
        try:
            annotations = parse_label_file(path.read_text(encoding="utf-8"), strict=strict)
        except LabelError as err:
            issues.append(ValidationIssue("malformed_line", str(path), err.line, str(err)))
            continue
        seen: set[tuple] = set()
        for index, annotation in enumerate(annotations, start=1):
            if annotation.class_id >= descriptor.class_count:
                issues.append(
                    ValidationIssue(
                        "class_out_of_range",
                        str(path),
                        None,
                        f"class {annotation.class_id} with nc={descriptor.class_count}",
                    )
                )
            key = (annotation.class_id, annotation.box.cx, annotation.box.cy, annotation.box.w, annotation.box.h)
            if key in seen:
                issues.append(
                    ValidationIssue("duplicate_box", str(path), index, f"duplicate of an earlier box: {key}")
                )
            seen.add(key)
    return ValidationReport(tuple(issues))


@dataclass(frozen=True)
class BoxSizeStats:
    count: int
    w_mean: float
    w_min: float
    w_max: float
    h_mean: float
    h_min: float
    h_max: float
    area_mean: float
    area_min: float
    area_max: float


_EMPTY_SIZES = BoxSizeStats(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DatasetStats:
    class_counts: tuple[int, ...]
    boxes_per_image: dict[int, int]
    sizes: BoxSizeStats


def dataset_stats(annotations_by_image: Mapping[str, Sequence[Annotation]], num_classes: int) -> DatasetStats:
    """Per-class box counts, a boxes-per-image histogram, and box size ranges."""
    class_counts = [0] * num_classes
    histogram: Counter[int] = Counter()
    widths: list[float] = []
    heights: list[float] = []
    for annotations in annotations_by_image.values():
        histogram[len(annotations)] += 1
        for annotation in annotations:
            if annotation.class_id >= num_classes:
                raise ValueError(f"class {annotation.class_id} outside num_classes={num_classes}")
            class_counts[annotation.class_id] += 1
            widths.append(annotation.box.w)
            heights.append(annotation.box.h)
    if not widths:
        sizes = _EMPTY_SIZES
    else:
        areas = [w * h for w, h in zip(widths, heights)]
        sizes = BoxSizeStats(
            count=len(widths),
            w_mean=sum(widths) / len(widths),
            w_min=min(widths),
            w_max=max(widths),
            h_mean=sum(heights) / len(heights),
            h_min=min(heights),
            h_max=max(heights),
            area_mean=sum(areas) / len(areas),
            area_min=min(areas),
            area_max=max(areas),
        )
    return DatasetStats(tuple(class_counts), dict(sorted(histogram.items())), sizes)


ANCHOR_STRIDES = (8, 16, 32)


@dataclass(frozen=True)
class AnchorGroup:
    stride: int
    pairs: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class AnchorSet:
    """Anchor (w, h) pairs in pixels, grouped per stride by ascending area."""

    groups: tuple[AnchorGroup, ...]
    reference_resolution: tuple[int, int]
    mean_best_iou: float | None = None

    def __post_init__(self):
        strides = [group.stride for group in self.groups]
        if strides != sorted(strides):
            raise ValueError("anchor groups must be ordered by stride")
        for group in self.groups:
            for w, h in group.pairs:
                if w <= 0 or h <= 0:
                    raise ValueError(f"anchor sides must be positive, got ({w}, {h})")
            areas = [w * h for w, h in group.pairs]
            if areas != sorted(areas):
                raise ValueError(f"anchors within stride {group.stride} must have ascending area")
        # element-wise across groups at equal sorted position
        for first, second in zip(self.groups, self.groups[1:]):
            for (w1, h1), (w2, h2) in zip(first.pairs, second.pairs):
                if w1 * h1 > w2 * h2:
                    raise ValueError(
                        f"stride {first.stride} anchor area exceeds stride {second.stride} at the same position"
                    )

    @property
    def pairs(self) -> tuple[tuple[float, float], ...]:
        return tuple(pair for group in self.groups for pair in group.pairs)


def group_anchors(
    pairs: Sequence[tuple[float, float]],
    reference_resolution: tuple[int, int],
    mean_best_iou: float | None = None,
) -> AnchorSet:
    """Distribute area-sorted anchors over the strides, small to large."""
    ordered = sorted(pairs, key=lambda wh: (wh[0] * wh[1], wh))
    chunks = np.array_split(np.arange(len(ordered)), len(ANCHOR_STRIDES))
    groups = tuple(
        AnchorGroup(stride, tuple(ordered[i] for i in chunk))
        for stride, chunk in zip(ANCHOR_STRIDES, chunks)
    )
    return AnchorSet(groups, tuple(reference_resolution), mean_best_iou)


def mean_best_iou(boxes_wh: np.ndarray, anchors_wh: np.ndarray) -> float:
    """Mean over boxes of the best shape-IoU against any anchor."""
    best = np.zeros(len(boxes_wh))
    for anchor in anchors_wh:
        inter = np.minimum(boxes_wh[:, 0], anchor[0]) * np.minimum(boxes_wh[:, 1], anchor[1])
        union = boxes_wh[:, 0] * boxes_wh[:, 1] + anchor[0] * anchor[1] - inter
        best = np.maximum(best, inter / union)
    return float(best.mean())


def _kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [points[int(rng.integers(len(points)))]]
    while len(centroids) < k:
        distances = np.ones(len(points))
        for centroid in centroids:
            inter = np.minimum(points[:, 0], centroid[0]) * np.minimum(points[:, 1], centroid[1])
            union = points[:, 0] * points[:, 1] + centroid[0] * centroid[1] - inter
            distances = np.minimum(distances, 1.0 - inter / union)
        weights = distances**2
        total = weights.sum()
        if total <= 0:
            index = int(rng.integers(len(points)))
        else:
            index = int(rng.choice(len(points), p=weights / total))
        centroids.append(points[index])
    return np.array(centroids)


def kmeans_anchors(
    boxes: Sequence[NormBox],
    k: int = 9,
    seed: int = 0,
    reference_resolution: tuple[int, int] = (640, 640),
    max_iterations: int = 300,
) -> AnchorSet:
    """Cluster box shapes into k anchors.

    Distance is 1 - IoU of (w, h) pairs aligned at a common center. Centroids
    start from k-means++ seeding and are updated as cluster means; iteration
    stops when assignments are stable, when ``max_iterations`` is reached, or
    when a mean update would lower the mean best-IoU (the update is then
    discarded, which keeps the fit monotone). Output pairs are scaled to
    pixels at ``reference_resolution``.
    """
    if not boxes:
        raise ValueError("boxes must be non-empty")
    points = np.array([(box.w, box.h) for box in boxes], dtype=float)
    distinct = len({(box.w, box.h) for box in boxes})
    if k > distinct:
        raise ValueError(f"k={k} exceeds the {distinct} distinct box shapes")
    if k < 1:
        raise ValueError("k must be >= 1")

    rng = np.random.default_rng(seed)
    centroids = _kmeans_plus_plus(points, k, rng)

    def assign(current: np.ndarray) -> np.ndarray:
        ious = np.empty((len(points), len(current)))
        for column, centroid in enumerate(current):
            inter = np.minimum(points[:, 0], centroid[0]) * np.minimum(points[:, 1], centroid[1])
            union = points[:, 0] * points[:, 1] + centroid[0] * centroid[1] - inter
            ious[:, column] = inter / union
        return ious.argmax(axis=1)

    assignments = assign(centroids)
    fit = mean_best_iou(points, centroids)
    for _ in range(max_iterations):
        updated = centroids.copy()
        for cluster in range(k):
            members = points[assignments == cluster]
            if len(members):
                updated[cluster] = members.mean(axis=0)
        new_assignments = assign(updated)
        new_fit = mean_best_iou(points, updated)
        if new_fit < fit - 1e-12:
            break  # a mean update is not guaranteed to help under IoU distance
        centroids = updated
        fit = new_fit
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments

    ref_w, ref_h = reference_resolution
    pixel_pairs = [(float(w * ref_w), float(h * ref_h)) for w, h in centroids]
    return group_anchors(pixel_pairs, reference_resolution, mean_best_iou=fit)
