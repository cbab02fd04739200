"""Label file format for gesture detection datasets.

One annotation per line::

    <class_id> <cx> <cy> <w> <h>

All four coordinates are fractions of the image size, center format.
Prediction files carry one extra trailing field, the confidence::

    <class_id> <cx> <cy> <w> <h> <confidence>

Files are UTF-8 text with LF line endings. Coordinates are emitted with
exactly six decimal places, so emitting and re-parsing a file yields equal
values, and re-emitting a parsed file reproduces it byte for byte.
An empty file is a valid image with no objects.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import yaml

from .ioutil import atomic_write_text

# Slack granted to lenient parsing: coordinate values and box corners may
# stick out of [0, 1] by at most this much before the line is rejected.
LENIENT_TOLERANCE = 1e-3


class LabelError(ValueError):
    """Base class for label-format violations.

    ``field`` names the offending value ("cx", "w", "class_id", ...) when one
    can be singled out; ``line`` is the 1-based line number when the error
    came from parsing a whole file.
    """

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line


class LabelFieldCountError(LabelError):
    """Line does not have the expected number of whitespace-separated fields."""


class LabelNumericError(LabelError):
    """A coordinate token is not a number."""


class LabelClassError(LabelError):
    """Class id is not a non-negative integer."""


class LabelRangeError(LabelError):
    """A value is outside its allowed range."""


class LabelWarning(UserWarning):
    """Raised when lenient parsing repairs a slightly out-of-range value."""


@dataclass(frozen=True)
class NormBox:
    """Center-format box; every field is a fraction of the image size.

    ``cx``/``cy`` lie in [0, 1] and ``w``/``h`` in (0, 1]. The corners of a
    valid NormBox may still stick out of the image (e.g. a box centered near
    an edge); whether that is acceptable is a parse-time policy, not a
    property of the value.
    """

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise LabelRangeError(f"{name} must be a finite number, got {value!r}", field=name)
        if not 0.0 <= self.cx <= 1.0:
            raise LabelRangeError(f"cx outside [0, 1]: {self.cx!r}", field="cx")
        if not 0.0 <= self.cy <= 1.0:
            raise LabelRangeError(f"cy outside [0, 1]: {self.cy!r}", field="cy")
        if not 0.0 < self.w <= 1.0:
            raise LabelRangeError(f"w outside (0, 1]: {self.w!r}", field="w")
        if not 0.0 < self.h <= 1.0:
            raise LabelRangeError(f"h outside (0, 1]: {self.h!r}", field="h")

    @property
    def area(self) -> float:
        return self.w * self.h

    def corner_overflow(self) -> float:
        """How far the box corners stick out of [0, 1], 0.0 if fully inside."""
        x1 = self.cx - self.w / 2.0
        y1 = self.cy - self.h / 2.0
        x2 = self.cx + self.w / 2.0
        y2 = self.cy + self.h / 2.0
        return max(0.0, -x1, -y1, x2 - 1.0, y2 - 1.0)


@dataclass(frozen=True)
class Annotation:
    """One ground-truth box with its class id."""

    class_id: int
    box: NormBox

    def __post_init__(self):
        if not isinstance(self.class_id, int) or isinstance(self.class_id, bool):
            raise LabelClassError(f"class id must be an integer, got {self.class_id!r}", field="class_id")
        if self.class_id < 0:
            raise LabelClassError(f"class id must be non-negative, got {self.class_id}", field="class_id")


@dataclass(frozen=True)
class Detection:
    """One predicted box with class id and confidence in [0, 1]."""

    class_id: int
    box: NormBox
    confidence: float

    def __post_init__(self):
        if not isinstance(self.class_id, int) or isinstance(self.class_id, bool):
            raise LabelClassError(f"class id must be an integer, got {self.class_id!r}", field="class_id")
        if self.class_id < 0:
            raise LabelClassError(f"class id must be non-negative, got {self.class_id}", field="class_id")
        conf = self.confidence
        if not isinstance(conf, (int, float)) or isinstance(conf, bool) or not math.isfinite(conf):
            raise LabelRangeError(f"confidence must be a finite number, got {conf!r}", field="confidence")
        if not 0.0 <= conf <= 1.0:
            raise LabelRangeError(f"confidence outside [0, 1]: {conf!r}", field="confidence")


@dataclass(frozen=True)
class ClassEntry:
    index: int
    gloss: str
    name: str


@dataclass(frozen=True)
class ClassTable:
    """Ordered class list; ``name`` is the label used in dataset descriptors."""

    entries: tuple[ClassEntry, ...]

    def __post_init__(self):
        for position, entry in enumerate(self.entries):
            if entry.index != position:
                raise ValueError(f"class indices must be contiguous from 0, got {entry.index} at position {position}")
        names = [entry.name for entry in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(entry.name for entry in self.entries)

    @property
    def glosses(self) -> tuple[str, ...]:
        return tuple(entry.gloss for entry in self.entries)

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "ClassTable":
        """Build a table from bare names; the gloss defaults to the name."""
        return cls(tuple(ClassEntry(i, name, name) for i, name in enumerate(names)))

    @classmethod
    def anonymous(cls, count: int) -> "ClassTable":
        """A table of ``count`` placeholder names for datasets without one."""
        if count < 1:
            raise ValueError(f"class count must be >= 1, got {count}")
        return cls.from_names(tuple(f"class{i}" for i in range(count)))


_DEFAULT_CLASSES = (
    ("Home", "illu"),
    ("Love", "prema"),
    ("Money", "dabbulu"),
    ("No", "kadhu"),
    ("One", "okati"),
    ("Yes", "avunu"),
    ("Fine", "bagunna"),
    ("Family", "kutumbam"),
    ("Pray", "Namasthe"),
    ("Help", "sahayam"),
    ("Why", "enduku"),
    ("Where", "ekkada"),
)


def default_class_table() -> ClassTable:
    """The 12 Telugu gesture classes this toolkit ships with, in index order."""
    return ClassTable(tuple(ClassEntry(i, gloss, name) for i, (gloss, name) in enumerate(_DEFAULT_CLASSES)))


@dataclass(frozen=True)
class DatasetDescriptor:
    """Where a dataset lives and what its classes are."""

    train_dir: str
    test_dir: str
    class_names: tuple[str, ...]

    def __post_init__(self):
        if not self.class_names:
            raise ValueError("descriptor needs at least one class name")

    @property
    def class_count(self) -> int:
        return len(self.class_names)


def load_descriptor(path: str | Path) -> DatasetDescriptor:
    """Read a dataset descriptor: a YAML file with keys train, val, nc, names."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: descriptor must be a mapping")
    missing = [key for key in ("train", "val", "nc", "names") if key not in raw]
    if missing:
        raise ValueError(f"{path}: descriptor missing keys: {', '.join(missing)}")
    names = raw["names"]
    if isinstance(names, dict):
        # index->name mapping form; normalize to a list ordered by index
        names = [names[i] for i in sorted(names)]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise ValueError(f"{path}: names must be a list of strings")
    if raw["nc"] != len(names):
        raise ValueError(f"{path}: nc is {raw['nc']} but names has {len(names)} entries")
    return DatasetDescriptor(train_dir=str(raw["train"]), test_dir=str(raw["val"]), class_names=tuple(names))


def save_descriptor(descriptor: DatasetDescriptor, path: str | Path) -> None:
    payload = {
        "train": descriptor.train_dir,
        "val": descriptor.test_dir,
        "nc": descriptor.class_count,
        "names": list(descriptor.class_names),
    }
    atomic_write_text(path, yaml.safe_dump(payload, sort_keys=False))


def _parse_class_token(token: str) -> int:
    try:
        class_id = int(token)
    except ValueError:
        raise LabelClassError(f"class id must be an integer, got {token!r}", field="class_id") from None
    if class_id < 0:
        raise LabelClassError(f"class id must be non-negative, got {class_id}", field="class_id")
    return class_id


def _parse_float_token(token: str, field: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise LabelNumericError(f"{field} is not a number: {token!r}", field=field) from None
    if not math.isfinite(value):
        raise LabelRangeError(f"{field} must be finite, got {token!r}", field=field)
    return value


def _repair_range(value: float, field: str, lo: float, hi: float, *, lo_open: bool, strict: bool) -> float:
    """Range-check one coordinate; in lenient mode pull near misses back in."""
    above_lo = value > lo if lo_open else value >= lo
    if above_lo and value <= hi:
        return value
    bounds = f"({lo}, {hi}]" if lo_open else f"[{lo}, {hi}]"
    if strict:
        raise LabelRangeError(f"{field} outside {bounds}: {value!r}", field=field)
    # lenient: clamp an overshoot of at most LENIENT_TOLERANCE, reject worse
    if hi < value <= hi + LENIENT_TOLERANCE:
        repaired = hi
    elif not lo_open and lo - LENIENT_TOLERANCE <= value < lo:
        repaired = lo
    else:
        raise LabelRangeError(f"{field} outside {bounds}: {value!r}", field=field)
    warnings.warn(f"clamped {field} from {value!r} to {repaired!r}", LabelWarning, stacklevel=3)
    return repaired


def _apply_corner_policy(box: NormBox, *, strict: bool, corner_tolerance: float | None) -> NormBox:
    overflow = box.corner_overflow()
    if strict:
        # Corner containment is opt-in: a box centered near an edge may
        # legally overhang it, so strict parsing checks corners only when the
        # caller pins down a tolerance.
        if corner_tolerance is not None and overflow > corner_tolerance:
            raise LabelRangeError(
                f"box corners exceed the image by {overflow:.6g} (allowed {corner_tolerance:.6g})"
            )
        return box
    if overflow <= (corner_tolerance if corner_tolerance is not None else 0.0):
        return box
    if overflow > LENIENT_TOLERANCE:
        raise LabelRangeError(f"box corners exceed the image by {overflow:.6g} (allowed {LENIENT_TOLERANCE:.6g})")
    x1 = max(0.0, box.cx - box.w / 2.0)
    y1 = max(0.0, box.cy - box.h / 2.0)
    x2 = min(1.0, box.cx + box.w / 2.0)
    y2 = min(1.0, box.cy + box.h / 2.0)
    repaired = NormBox((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)
    warnings.warn(f"clamped box corners inside the image (overflow {overflow:.6g})", LabelWarning, stacklevel=3)
    return repaired


def _parse_box_fields(tokens: list[str], *, strict: bool, corner_tolerance: float | None) -> NormBox:
    values = {}
    for token, field in zip(tokens, ("cx", "cy", "w", "h")):
        value = _parse_float_token(token, field)
        lo_open = field in ("w", "h")
        values[field] = _repair_range(value, field, 0.0, 1.0, lo_open=lo_open, strict=strict)
    box = NormBox(values["cx"], values["cy"], values["w"], values["h"])
    return _apply_corner_policy(box, strict=strict, corner_tolerance=corner_tolerance)


def parse_label_line(line: str, *, strict: bool = True, corner_tolerance: float | None = None) -> Annotation:
    """Parse one ``class cx cy w h`` line.

    Strict mode (the default) rejects any coordinate outside its range.
    Corners are checked only when ``corner_tolerance`` is given: strict mode
    then rejects boxes overhanging the image by more than the tolerance,
    while lenient mode repairs overshoots up to 1e-3 and warns instead.
    """
    tokens = line.split()
    if len(tokens) != 5:
        raise LabelFieldCountError(f"expected 5 fields, got {len(tokens)}")
    class_id = _parse_class_token(tokens[0])
    box = _parse_box_fields(tokens[1:], strict=strict, corner_tolerance=corner_tolerance)
    return Annotation(class_id, box)


def parse_prediction_line(line: str, *, strict: bool = True, corner_tolerance: float | None = None) -> Detection:
    """Parse one ``class cx cy w h confidence`` line."""
    tokens = line.split()
    if len(tokens) != 6:
        raise LabelFieldCountError(f"expected 6 fields, got {len(tokens)}")
    class_id = _parse_class_token(tokens[0])
    box = _parse_box_fields(tokens[1:5], strict=strict, corner_tolerance=corner_tolerance)
    confidence = _parse_float_token(tokens[5], "confidence")
    if not 0.0 <= confidence <= 1.0:
        raise LabelRangeError(f"confidence outside [0, 1]: {confidence!r}", field="confidence")
    return Detection(class_id, box, confidence)


def _parse_lines(text: str, parse_one, **options):
    out = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            out.append(parse_one(raw, **options))
        except LabelError as err:
            raise type(err)(f"line {line_no}: {err}", field=err.field, line=line_no) from None
    return out


def parse_label_file(text: str, *, strict: bool = True, corner_tolerance: float | None = None) -> list[Annotation]:
    """Parse a whole label file. Blank lines are skipped; an empty file is a
    valid negative sample. Errors carry the 1-based line number."""
    return _parse_lines(text, parse_label_line, strict=strict, corner_tolerance=corner_tolerance)


def parse_prediction_file(text: str, *, strict: bool = True, corner_tolerance: float | None = None) -> list[Detection]:
    return _parse_lines(text, parse_prediction_line, strict=strict, corner_tolerance=corner_tolerance)


def format_label_line(annotation: Annotation) -> str:
    box = annotation.box
    return f"{annotation.class_id} {box.cx:.6f} {box.cy:.6f} {box.w:.6f} {box.h:.6f}"


def format_prediction_line(detection: Detection) -> str:
    box = detection.box
    return (
        f"{detection.class_id} {box.cx:.6f} {box.cy:.6f} {box.w:.6f} {box.h:.6f} "
        f"{detection.confidence:.6f}"
    )


def emit_label_file(annotations: list[Annotation]) -> str:
    """Render annotations as label-file text (one line each, LF endings)."""
    return "".join(format_label_line(a) + "\n" for a in annotations)


def emit_prediction_file(detections: list[Detection]) -> str:
    return "".join(format_prediction_line(d) + "\n" for d in detections)


def read_label_file(path: str | Path, *, strict: bool = True, corner_tolerance: float | None = None) -> list[Annotation]:
    return parse_label_file(Path(path).read_text(encoding="utf-8"), strict=strict, corner_tolerance=corner_tolerance)


def read_prediction_file(path: str | Path, *, strict: bool = True, corner_tolerance: float | None = None) -> list[Detection]:
    return parse_prediction_file(
        Path(path).read_text(encoding="utf-8"), strict=strict, corner_tolerance=corner_tolerance
    )


def write_label_file(path: str | Path, annotations: list[Annotation]) -> None:
    atomic_write_text(path, emit_label_file(annotations))
