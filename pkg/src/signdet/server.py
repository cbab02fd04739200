"""HTTP service for browsing a detection dataset and editing its labels.

The service exposes a small JSON API over a dataset directory laid out as::

    root/
      images/   one file per image; the stem is the image id
      labels/   <id>.txt files in the standard annotation format

Label edits use optimistic concurrency: every image carries a revision
counter that starts at 0 when the service boots and increments by one per
successful write. A ``PUT`` must quote the revision it read; a mismatch is
rejected with 409 so concurrent editors cannot silently overwrite each
other. Revisions live in memory only — restarting the service resets them.

Image dimensions are read once at startup and cached. Label files are
re-read from disk on every request, so edits made outside the service are
picked up immediately.
"""

from __future__ import annotations

import math
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from .labels import Annotation, ClassTable, NormBox, default_class_table, read_label_file, write_label_file

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".webp")


class AnnotationBody(BaseModel):
    class_id: int
    cx: float
    cy: float
    w: float
    h: float


class LabelWriteBody(BaseModel):
    revision: int
    annotations: list[AnnotationBody]


def _field_errors(index: int, body: AnnotationBody, num_classes: int) -> list[dict]:
    """Every rule violation in one annotation, as ``{index, field, reason}`` rows."""
    errors = []

    def bad(field: str, reason: str) -> None:
        errors.append({"index": index, "field": field, "reason": reason})

    if body.class_id < 0 or body.class_id >= num_classes:
        bad("class_id", f"class id outside [0, {num_classes - 1}]: {body.class_id}")
    for field in ("cx", "cy", "w", "h"):
        value = getattr(body, field)
        if not math.isfinite(value):
            bad(field, f"{field} must be finite, got {value!r}")
        elif field in ("cx", "cy") and not 0.0 <= value <= 1.0:
            bad(field, f"{field} outside [0, 1]: {value!r}")
        elif field in ("w", "h") and not 0.0 < value <= 1.0:
            bad(field, f"{field} outside (0, 1]: {value!r}")
    return errors


def _scan_images(images_dir: Path) -> dict[str, Path]:
    """Map image id (file stem) to its path; duplicate stems are an error."""
    found: dict[str, Path] = {}
    for path in sorted(images_dir.iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
            continue
        if path.stem in found:
            raise ValueError(f"duplicate image id {path.stem!r}: {found[path.stem].name} and {path.name}")
        found[path.stem] = path
    return found


def create_app(root: str | Path, *, class_table: ClassTable | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the service over ``root`` (which must contain ``images/``).

    ``labels/`` is created when missing. ``class_table`` defaults to the
    bundled gesture classes; ``ui_dir``, when given, is served at ``/``.
    """
    root = Path(root)
    images_dir = root / "images"
    labels_dir = root / "labels"
    if not images_dir.is_dir():
        raise ValueError(f"not a dataset root (no images/ directory): {root}")
    labels_dir.mkdir(exist_ok=True)

    table = class_table if class_table is not None else default_class_table()
    image_paths = _scan_images(images_dir)
    dimensions: dict[str, tuple[int, int]] = {}
    for image_id, path in image_paths.items():
        with Image.open(path) as image:
            dimensions[image_id] = image.size
    revisions = {image_id: 0 for image_id in image_paths}
    write_locks = {image_id: threading.Lock() for image_id in image_paths}

    app = FastAPI(title="annotation service")

    def require(image_id: str) -> None:
        if image_id not in image_paths:
            raise HTTPException(status_code=404, detail=f"unknown image id: {image_id}")

    def label_path(image_id: str) -> Path:
        return labels_dir / f"{image_id}.txt"

    def label_document(image_id: str) -> dict:
        path = label_path(image_id)
        annotations = read_label_file(path) if path.exists() else []
        return {
            "image_id": image_id,
            "revision": revisions[image_id],
            "annotations": [
                {"class_id": a.class_id, "cx": a.box.cx, "cy": a.box.cy, "w": a.box.w, "h": a.box.h}
                for a in annotations
            ],
        }

    @app.get("/api/classes")
    def get_classes() -> dict:
        return {"classes": [{"index": e.index, "gloss": e.gloss, "name": e.name} for e in table]}

    @app.get("/api/images")
    def get_images() -> dict:
        return {
            "images": [
                {
                    "id": image_id,
                    "width": dimensions[image_id][0],
                    "height": dimensions[image_id][1],
                    "labeled": label_path(image_id).exists(),
                }
                for image_id in image_paths
            ]
        }

    @app.get("/api/images/{image_id}")
    def get_image(image_id: str) -> Response:
        require(image_id)
        return FileResponse(image_paths[image_id])

    @app.get("/api/labels/{image_id}")
    def get_labels(image_id: str) -> dict:
        require(image_id)
        return label_document(image_id)

    @app.put("/api/labels/{image_id}")
    def put_labels(image_id: str, body: LabelWriteBody) -> dict:
        require(image_id)
        errors = [
            error
            for index, annotation in enumerate(body.annotations)
            for error in _field_errors(index, annotation, len(table))
        ]
        if errors:
            raise HTTPException(status_code=422, detail=errors)
        annotations = [
            Annotation(a.class_id, NormBox(a.cx, a.cy, a.w, a.h)) for a in body.annotations
        ]
        with write_locks[image_id]:
            if body.revision != revisions[image_id]:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": "stale revision",
                        "expected": revisions[image_id],
                        "got": body.revision,
                    },
                )
            write_label_file(label_path(image_id), annotations)
            revisions[image_id] += 1
        return label_document(image_id)

    @app.get("/api/progress")
    def get_progress() -> dict:
        labeled = sum(1 for image_id in image_paths if label_path(image_id).exists())
        return {"total": len(image_paths), "labeled": labeled, "unlabeled": len(image_paths) - labeled}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=Path(ui_dir), html=True), name="ui")

    return app
