"""Command-line entry point. One subcommand per library operation.

Exit codes: 0 on success, 1 when a reporting subcommand finds problems
(validation issues, failed F1 audit, failed gradient check), 2 on usage or
input errors. Machine-readable output is available through
``--format json`` (stable key order) and ``--format csv``; default output is
human-oriented text. File writes go through write-temp-then-rename so
interrupted runs never leave partial artifacts.

A JSON file named by the ``SIGNDET_CONFIG`` environment variable supplies
per-subcommand flag defaults, e.g. ``{"eval": {"iou": 0.45}}``; explicit
flags always win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import datasetops, metrics, modelcfg, report as report_mod
from . import loss as loss_mod
from .ioutil import atomic_write_text
from .labels import (
    Annotation,
    ClassTable,
    Detection,
    LabelError,
    default_class_table,
    load_descriptor,
    parse_label_file,
    parse_prediction_file,
)

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".webp")
ENV_CONFIG = "SIGNDET_CONFIG"


# ---------------------------------------------------------------- helpers


def _fail(message: str) -> "SystemExit":
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(2)


def _directory_stems(directory: str | Path, suffixes: tuple[str, ...]) -> dict[str, Path]:
    root = Path(directory)
    if not root.is_dir():
        raise _fail(f"not a directory: {root}")
    found: dict[str, Path] = {}
    for path in sorted(root.iterdir()):
        if path.suffix.lower() in suffixes:
            if path.stem in found:
                raise _fail(f"duplicate stem {path.stem!r}: {found[path.stem]} and {path}")
            found[path.stem] = path
    return found


def _parse_directory(paths: dict[str, Path], parse_one, jobs: int) -> dict[str, list]:
    """Parse every file; the result is independent of ``jobs``."""

    def read(item: tuple[str, Path]):
        stem, path = item
        try:
            return stem, parse_one(path.read_text(encoding="utf-8"))
        except LabelError as err:
            raise _fail(f"{path}: {err}") from None

    items = sorted(paths.items())
    if jobs <= 1:
        return dict(read(item) for item in items)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return dict(pool.map(read, items))


def _load_eval_images(args) -> list[tuple[list[Detection], list[Annotation]]]:
    predictions = _parse_directory(
        _directory_stems(args.predictions, (".txt",)), parse_prediction_file, args.jobs
    )
    labels = _parse_directory(_directory_stems(args.labels, (".txt",)), parse_label_file, args.jobs)
    stems = sorted(predictions.keys() | labels.keys())
    return [(predictions.get(stem, []), labels.get(stem, [])) for stem in stems]


def _class_table(args) -> ClassTable:
    if getattr(args, "descriptor", None):
        descriptor = load_descriptor(args.descriptor)
        return ClassTable.from_names(descriptor.class_names)
    if getattr(args, "classes", None):
        return ClassTable.anonymous(args.classes)
    return default_class_table()


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _print_csv(rows) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerows(rows)


def _check_unit_interval(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise _fail(f"--{name} must lie in [0, 1], got {value}")
    return value


# ---------------------------------------------------------------- validate


def _cmd_validate(args) -> int:
    descriptor = load_descriptor(args.descriptor)
    images = _directory_stems(args.images, IMAGE_SUFFIXES)
    labels = _directory_stems(args.labels, (".txt",))
    result = datasetops.validate_dataset(
        descriptor, images.values(), labels.values(), strict=not args.lenient
    )
    if args.format == "json":
        _print_json(
            {
                "ok": result.ok,
                "issues": [
                    {"kind": issue.kind, "path": issue.path, "line": issue.line, "message": issue.message}
                    for issue in result.issues
                ],
            }
        )
    elif args.format == "csv":
        rows = [["kind", "path", "line", "message"]]
        rows += [[i.kind, i.path, "" if i.line is None else i.line, i.message] for i in result.issues]
        _print_csv(rows)
    else:
        for issue in result.issues:
            location = f"{issue.path}:{issue.line}" if issue.line is not None else issue.path
            print(f"{issue.kind}: {location}: {issue.message}")
        if result.ok:
            print(f"OK: {len(images)} images, {len(labels)} label files, no issues")
        else:
            print(f"{len(result.issues)} issue(s) found")
    return 0 if result.ok else 1


# ---------------------------------------------------------------- split


def _cmd_split(args) -> int:
    if bool(args.ids) == bool(args.images):
        raise _fail("provide exactly one of --ids or --images")
    if args.ids:
        text = Path(args.ids).read_text(encoding="utf-8")
        ids = [line.strip() for line in text.splitlines() if line.strip()]
    else:
        ids = sorted(_directory_stems(args.images, IMAGE_SUFFIXES))

    stratify_by = None
    if args.stratify_labels:
        labels = _parse_directory(
            _directory_stems(args.stratify_labels, (".txt",)), parse_label_file, args.jobs
        )
        # images with no label file or an empty one group together under -1
        stratify_by = {
            sample_id: (labels[sample_id][0].class_id if labels.get(sample_id) else -1) for sample_id in ids
        }

    plan = datasetops.split(ids, args.fraction, args.seed, stratify_by=stratify_by)
    datasetops.write_split_manifests(plan, args.train_out, args.test_out)
    if args.format == "json":
        _print_json(
            {
                "seed": plan.seed,
                "train_fraction": plan.train_fraction,
                "train_count": len(plan.train_ids),
                "test_count": len(plan.test_ids),
                "train_manifest": str(args.train_out),
                "test_manifest": str(args.test_out),
            }
        )
    else:
        print(f"train: {len(plan.train_ids)} ids -> {args.train_out}")
        print(f"test: {len(plan.test_ids)} ids -> {args.test_out}")
    return 0


# ---------------------------------------------------------------- stats


def _cmd_stats(args) -> int:
    table = _class_table(args)
    labels = _parse_directory(_directory_stems(args.labels, (".txt",)), parse_label_file, args.jobs)
    stats = datasetops.dataset_stats(labels, len(table))
    names = table.names
    if args.format == "json":
        _print_json(
            {
                "images": len(labels),
                "class_counts": {names[i]: count for i, count in enumerate(stats.class_counts)},
                "boxes_per_image": {str(k): v for k, v in stats.boxes_per_image.items()},
                "sizes": {
                    "count": stats.sizes.count,
                    "w_mean": stats.sizes.w_mean,
                    "w_min": stats.sizes.w_min,
                    "w_max": stats.sizes.w_max,
                    "h_mean": stats.sizes.h_mean,
                    "h_min": stats.sizes.h_min,
                    "h_max": stats.sizes.h_max,
                    "area_mean": stats.sizes.area_mean,
                    "area_min": stats.sizes.area_min,
                    "area_max": stats.sizes.area_max,
                },
            }
        )
    elif args.format == "csv":
        rows = [["class_id", "name", "count"]]
        rows += [[i, names[i], count] for i, count in enumerate(stats.class_counts)]
        _print_csv(rows)
    else:
        print(f"images: {len(labels)}")
        print(f"boxes: {stats.sizes.count}")
        print("class counts:")
        for i, count in enumerate(stats.class_counts):
            print(f"  {i:2d} {names[i]}: {count}")
        print("boxes per image:")
        for k, v in stats.boxes_per_image.items():
            print(f"  {k}: {v}")
        if stats.sizes.count:
            s = stats.sizes
            print(f"width  mean {s.w_mean:.4f} min {s.w_min:.4f} max {s.w_max:.4f}")
            print(f"height mean {s.h_mean:.4f} min {s.h_min:.4f} max {s.h_max:.4f}")
            print(f"area   mean {s.area_mean:.4f} min {s.area_min:.4f} max {s.area_max:.4f}")
    return 0


# ---------------------------------------------------------------- anchors


def _cmd_anchors(args) -> int:
    labels = _parse_directory(_directory_stems(args.labels, (".txt",)), parse_label_file, args.jobs)
    boxes = [annotation.box for stem in sorted(labels) for annotation in labels[stem]]
    anchors = datasetops.kmeans_anchors(
        boxes, k=args.k, seed=args.seed, reference_resolution=(args.resolution, args.resolution)
    )
    if args.format == "json":
        _print_json(
            {
                "mean_best_iou": anchors.mean_best_iou,
                "resolution": list(anchors.reference_resolution),
                "groups": [
                    {"stride": group.stride, "pairs": [[w, h] for w, h in group.pairs]}
                    for group in anchors.groups
                ],
            }
        )
    elif args.format == "csv":
        rows = [["stride", "w", "h"]]
        rows += [[group.stride, f"{w:.2f}", f"{h:.2f}"] for group in anchors.groups for w, h in group.pairs]
        _print_csv(rows)
    else:
        print(f"boxes: {len(boxes)}")
        print(f"mean best IoU: {anchors.mean_best_iou:.4f}")
        for group in anchors.groups:
            pairs = " ".join(f"({w:.1f},{h:.1f})" for w, h in group.pairs)
            print(f"stride {group.stride}: {pairs}")
    return 0


# ---------------------------------------------------------------- eval


def eval_payload(images, iou_threshold: float, interpolation: str) -> dict:
    """The eval report as a plain dict (shared by CLI formats and tests)."""
    per_class = metrics.per_class_ap(images, iou_threshold=iou_threshold, interpolation=interpolation)
    map50 = sum(per_class.values()) / len(per_class) if per_class else None
    tp = fp = fn = 0
    for detections, annotations in images:
        result = metrics.match(detections, annotations, iou_threshold)
        tp, fp, fn = tp + result.tp, fp + result.fp, fn + result.fn
    overall = metrics.rates(tp, fp, fn)
    return {
        "images": len(images),
        "iou_threshold": iou_threshold,
        "interpolation": interpolation,
        "map50": map50,
        "per_class_ap": {str(class_id): ap for class_id, ap in per_class.items()},
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "precision": overall.precision,
        "recall": overall.recall,
        "f1": overall.f1,
    }


def _cmd_eval(args) -> int:
    iou_threshold = _check_unit_interval("iou", args.iou)
    images = _load_eval_images(args)
    if not any(annotations for _, annotations in images):
        raise _fail("no ground-truth boxes found")
    payload = eval_payload(images, iou_threshold, args.interpolation)
    if args.format == "json":
        _print_json(payload)
    elif args.format == "csv":
        rows = [["metric", "class", "value"]]
        for key in ("map50", "precision", "recall", "f1"):
            rows.append([key, "", f"{payload[key]:.6f}"])
        for class_id, ap in sorted(payload["per_class_ap"].items(), key=lambda kv: int(kv[0])):
            rows.append(["ap", class_id, f"{ap:.6f}"])
        _print_csv(rows)
    else:
        print(f"images: {payload['images']}")
        print(f"mAP@{iou_threshold:g}: {payload['map50']:.4f}")
        print(f"precision: {payload['precision']:.4f}  recall: {payload['recall']:.4f}  f1: {payload['f1']:.4f}")
        print(f"matched: tp {payload['tp']}  fp {payload['fp']}  fn {payload['fn']}")
        for class_id, ap in sorted(payload["per_class_ap"].items(), key=lambda kv: int(kv[0])):
            print(f"  class {class_id}: AP {ap:.4f}")
    return 0


# ---------------------------------------------------------------- f1curve


def _cmd_f1curve(args) -> int:
    iou_threshold = _check_unit_interval("iou", args.iou)
    images = _load_eval_images(args)
    curve = metrics.f1_confidence_curve(images, iou_threshold)
    csv_text = "threshold,f1\n" + "".join(
        f"{t:.3f},{v:.6f}\n" for t, v in zip(curve.thresholds, curve.values)
    )
    if args.out:
        atomic_write_text(args.out, csv_text)
    if args.format == "json":
        _print_json(
            {
                "best_threshold": curve.best_threshold,
                "best_f1": curve.best_f1,
                "thresholds": list(curve.thresholds),
                "values": list(curve.values),
            }
        )
    elif args.format == "csv":
        sys.stdout.write(csv_text)
    else:
        print(f"best F1 {curve.best_f1:.4f} at confidence {curve.best_threshold:.3f}")
        if args.out:
            print(f"curve written to {args.out}")
    return 0


# ---------------------------------------------------------------- confusion


def _cmd_confusion(args) -> int:
    confidence = _check_unit_interval("conf", args.conf)
    iou_threshold = _check_unit_interval("iou", args.iou)
    table = _class_table(args)
    images = _load_eval_images(args)
    matrix = metrics.confusion_matrix(
        images, len(table), confidence_threshold=confidence, iou_threshold=iou_threshold
    )
    names = list(table.names) + ["background"]
    if args.format == "json":
        _print_json({"classes": names, "matrix": matrix.tolist()})
    elif args.format == "csv":
        rows = [["gt\\det", *names]]
        rows += [[names[i], *matrix[i].tolist()] for i in range(len(names))]
        _print_csv(rows)
    else:
        width = max(len(name) for name in names)
        print(f"rows = ground truth, columns = detections, background = index {len(table)}")
        header = " ".join(f"{i:>6d}" for i in range(len(names)))
        print(f"{'':>{width}} {header}")
        for i, name in enumerate(names):
            cells = " ".join(f"{int(v):>6d}" for v in matrix[i])
            print(f"{name:>{width}} {cells}")
    return 0


# ---------------------------------------------------------------- loss-check


def _cmd_loss_check(args) -> int:
    config = loss_mod.LossConfig(
        S=args.grid,
        B=args.predictors,
        C=args.classes,
        class_loss_scope=args.scope,
        confidence_target=args.confidence_target,
    )
    rng = np.random.default_rng(args.seed)
    n = config.n_cells
    pred = loss_mod.GridPrediction(
        np.concatenate(
            [rng.uniform(0, 1, (n, config.B, 2)), rng.uniform(0.05, 1, (n, config.B, 2))], axis=2
        ),
        rng.uniform(0, 1, (n, config.B)),
        rng.uniform(0, 1, (n, config.C)),
    )
    mask = rng.uniform(size=n) < 0.4
    responsible = np.where(mask, rng.integers(0, config.B, n), -1)
    boxes = np.concatenate([rng.uniform(0, 1, (n, 2)), rng.uniform(0.05, 1, (n, 2))], axis=1)
    boxes[~mask] = 0.0
    class_probs = np.zeros((n, config.C))
    class_probs[mask, rng.integers(0, config.C, int(mask.sum()))] = 1.0
    target = loss_mod.GridTarget(
        mask, responsible, boxes, np.where(mask, rng.uniform(0, 1, n), 0.0), class_probs
    )

    breakdown = loss_mod.loss(pred, target, config)
    fd = loss_mod.finite_difference_check(pred, target, config, step=args.step)
    if args.format == "json":
        _print_json(
            {
                "config": {
                    "S": config.S,
                    "B": config.B,
                    "C": config.C,
                    "lambda_coord": config.lambda_coord,
                    "lambda_noobj": config.lambda_noobj,
                    "class_loss_scope": config.class_loss_scope,
                    "confidence_target": config.confidence_target,
                },
                "seed": args.seed,
                "breakdown": {
                    "coord_xy": breakdown.coord_xy,
                    "coord_wh": breakdown.coord_wh,
                    "obj_conf": breakdown.obj_conf,
                    "noobj_conf": breakdown.noobj_conf,
                    "class_term": breakdown.class_term,
                    "total": breakdown.total,
                },
                "gradient_check": {
                    "max_relative_error": fd.max_relative_error,
                    "worst_component": fd.worst_component,
                    "n_components": fd.n_components,
                    "step": fd.step,
                    "ok": fd.ok,
                },
            }
        )
    else:
        print(f"grid {config.S}x{config.S}, {config.B} predictors, {config.C} classes, seed {args.seed}")
        print(f"coord_xy    {breakdown.coord_xy:.6f}")
        print(f"coord_wh    {breakdown.coord_wh:.6f}")
        print(f"obj_conf    {breakdown.obj_conf:.6f}")
        print(f"noobj_conf  {breakdown.noobj_conf:.6f}")
        print(f"class_term  {breakdown.class_term:.6f}")
        print(f"total       {breakdown.total:.6f}")
        print(
            f"gradient check: max relative error {fd.max_relative_error:.3e} over "
            f"{fd.n_components} components (step {fd.step:g}) -> {'ok' if fd.ok else 'FAILED'}"
        )
    return 0 if fd.ok else 1


# ---------------------------------------------------------------- model-info


def _cmd_model_info(args) -> int:
    if args.model:
        spec = modelcfg.load_model_spec(args.model)
    else:
        spec = modelcfg.reference_spec()
    variant = modelcfg.VARIANTS[args.variant]
    estimate = modelcfg.estimate_params(spec, variant)
    if args.format == "json":
        _print_json(
            {
                "variant": variant.name,
                "depth_multiple": variant.depth_multiple,
                "width_multiple": variant.width_multiple,
                "nc": spec.nc,
                "total_params": estimate.total,
                "coverage_notes": list(estimate.coverage_notes),
                "layers": [
                    {
                        "index": layer.index,
                        "module": layer.module,
                        "repeats": layer.repeats,
                        "channels_out": layer.channels_out,
                        "params": layer.params,
                    }
                    for layer in estimate.layers
                ],
            }
        )
    elif args.format == "csv":
        rows = [["index", "module", "repeats", "channels_out", "params"]]
        rows += [[l.index, l.module, l.repeats, l.channels_out, l.params] for l in estimate.layers]
        _print_csv(rows)
    else:
        print(f"variant {variant.name} (depth {variant.depth_multiple}, width {variant.width_multiple})")
        for layer in estimate.layers:
            print(
                f"  {layer.index:3d} {layer.module:<15} n={layer.repeats:<2d} "
                f"c_out={layer.channels_out:<5d} params={layer.params:,}"
            )
        print(f"total params: {estimate.total:,}")
        for note in estimate.coverage_notes:
            print(f"note: {note}")
    return 0


# ---------------------------------------------------------------- rank


def _cmd_rank(args) -> int:
    text = Path(args.rows).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    required = {"variant", "epochs", "map50", "params"}
    if reader.fieldnames is None or not required <= {name.strip() for name in reader.fieldnames}:
        raise _fail(f"--rows file must have columns {sorted(required)}")
    rows = []
    for record in reader:
        record = {key.strip(): (value or "").strip() for key, value in record.items() if key}
        rows.append(
            modelcfg.RankRow(
                record["variant"], int(record["epochs"]), float(record["map50"]), int(record["params"])
            )
        )
    ranking = modelcfg.rank_variants(rows, args.policy, param_budget=args.budget)
    if args.format == "json":
        _print_json(
            {
                "policy": args.policy,
                "budget": args.budget,
                "ranking": [
                    {"variant": row.variant, "epochs": row.epochs, "map50": row.map50, "params": row.params}
                    for row in ranking
                ],
            }
        )
    elif args.format == "csv":
        out = [["rank", "variant", "epochs", "map50", "params"]]
        out += [[i + 1, r.variant, r.epochs, f"{r.map50:.6f}", r.params] for i, r in enumerate(ranking)]
        _print_csv(out)
    else:
        for i, row in enumerate(ranking, start=1):
            print(f"{i}. {row.variant}@{row.epochs}: mAP {row.map50:.3f}, params {row.params:,}")
        if not ranking:
            print("no rows within budget")
    return 0


# ---------------------------------------------------------------- report


def _cmd_report(args) -> int:
    if not args.runs and not args.compare:
        raise _fail("nothing to do: pass --runs and/or --compare")
    exit_code = 0
    if args.runs:
        run_logs = []
        for entry in args.runs:
            name, _, path = entry.rpartition("=")
            path = Path(path)
            run_logs.append(report_mod.parse_run_log(path.read_text(encoding="utf-8"), name=name or path.stem))
        bundle = report_mod.render_dashboard(run_logs)
        if not args.out_svg:
            raise _fail("--runs requires --out-svg")
        atomic_write_text(args.out_svg, bundle.svg)
        print(f"dashboard written to {args.out_svg}")
        if args.out_summary:
            atomic_write_text(args.out_summary, bundle.summary_csv)
            print(f"summary written to {args.out_summary}")
    if args.compare:
        rows = _read_comparison_rows(Path(args.compare))
        audit = report_mod.comparison_table(rows, tolerance_points=args.tolerance)
        print(audit.markdown, end="")
        for flag in audit.flags:
            print(
                f"FLAG {flag.model}@{flag.epochs}: printed F1 {flag.printed_f1_points:.2f} but "
                f"P,R imply {flag.implied_f1_points:.2f} (off by {flag.difference_points:.2f} points)"
            )
        if audit.flags:
            exit_code = 1
    return exit_code


def _read_comparison_rows(path: Path) -> list[report_mod.ComparisonRow]:
    reader = csv.DictReader(io.StringIO(path.read_text(encoding="utf-8")))
    required = {"model", "epochs", "precision", "recall", "f1", "map50"}
    if reader.fieldnames is None or not required <= {name.strip() for name in reader.fieldnames}:
        raise _fail(f"--compare file must have columns {sorted(required)}")
    records = []
    for record in reader:
        records.append({key.strip(): (value or "").strip() for key, value in record.items() if key})
    if not records:
        raise _fail("--compare file has no rows")

    def column(name: str) -> list[float]:
        values = [float(record[name]) for record in records]
        if max(values) > report_mod.PERCENT_THRESHOLD:  # percent-valued column
            return [value / 100.0 for value in values]
        return values

    precisions, recalls, f1s, maps = (column(c) for c in ("precision", "recall", "f1", "map50"))
    return [
        report_mod.ComparisonRow(record["model"], int(record["epochs"]), p, r, f, m)
        for record, p, r, f, m in zip(records, precisions, recalls, f1s, maps)
    ]


# ---------------------------------------------------------------- serve


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(args.root, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------- parser


def _add_format(sub, choices=("human", "json", "csv")) -> None:
    sub.add_argument("--format", choices=choices, default="human", help="output format")


def _add_jobs(sub) -> None:
    sub.add_argument("--jobs", type=int, default=1, help="parallel workers for file parsing")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="signdet", description="Dataset, evaluation, and reporting tools for sign-language detection."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    index: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sp = subparsers.add_parser(name, help=help_text)
        sp.set_defaults(handler=handler)
        index[name] = sp
        return sp

    sp = sub("validate", _cmd_validate, "cross-check images, label files, and the dataset descriptor")
    sp.add_argument("--images", required=True, help="image directory")
    sp.add_argument("--labels", required=True, help="label directory")
    sp.add_argument("--descriptor", required=True, help="dataset descriptor YAML")
    sp.add_argument("--lenient", action="store_true", help="clamp sub-tolerance range violations")
    _add_format(sp)

    sp = sub("split", _cmd_split, "deterministic train/test split")
    sp.add_argument("--ids", help="file with one sample id per line")
    sp.add_argument("--images", help="image directory (ids = file stems)")
    sp.add_argument("--fraction", type=float, default=0.8, help="train fraction")
    sp.add_argument("--seed", type=int, required=True, help="shuffle seed")
    sp.add_argument("--train-out", required=True, help="train manifest path")
    sp.add_argument("--test-out", required=True, help="test manifest path")
    sp.add_argument("--stratify-labels", help="label directory for per-class stratification")
    _add_jobs(sp)
    _add_format(sp, ("human", "json"))

    sp = sub("stats", _cmd_stats, "dataset statistics from label files")
    sp.add_argument("--labels", required=True)
    sp.add_argument("--descriptor", help="dataset descriptor YAML (class names)")
    sp.add_argument("--classes", type=int, help="class count when no descriptor is given")
    _add_jobs(sp)
    _add_format(sp)

    sp = sub("anchors", _cmd_anchors, "k-means anchors over annotation shapes")
    sp.add_argument("--labels", required=True)
    sp.add_argument("-k", type=int, default=9, help="number of anchors")
    sp.add_argument("--seed", type=int, required=True, help="clustering seed")
    sp.add_argument("--resolution", type=int, default=640, help="pixel reference resolution")
    _add_jobs(sp)
    _add_format(sp)

    sp = sub("eval", _cmd_eval, "mAP@IoU, precision, recall, and F1 from prediction/label files")
    sp.add_argument("--predictions", required=True, help="prediction directory (class cx cy w h conf)")
    sp.add_argument("--labels", required=True, help="ground-truth directory")
    sp.add_argument("--iou", type=float, default=0.5, help="IoU threshold")
    sp.add_argument(
        "--interpolation", choices=("all_point", "11_point"), default="all_point", help="AP integration rule"
    )
    _add_jobs(sp)
    _add_format(sp)

    sp = sub("f1curve", _cmd_f1curve, "macro F1 versus confidence threshold")
    sp.add_argument("--predictions", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--iou", type=float, default=0.5)
    sp.add_argument("--out", help="write the curve CSV here")
    _add_jobs(sp)
    _add_format(sp)

    sp = sub("confusion", _cmd_confusion, "confusion matrix with a background row/column")
    sp.add_argument("--predictions", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--descriptor", help="dataset descriptor YAML (class names)")
    sp.add_argument("--classes", type=int, help="class count when no descriptor is given")
    sp.add_argument("--conf", type=float, default=0.25, help="confidence threshold")
    sp.add_argument("--iou", type=float, default=0.45, help="IoU threshold")
    _add_jobs(sp)
    _add_format(sp)

    sp = sub("loss-check", _cmd_loss_check, "evaluate the composite loss and verify its gradients")
    sp.add_argument("--grid", type=int, default=4, help="cells per side")
    sp.add_argument("--predictors", type=int, default=2, help="boxes per cell")
    sp.add_argument("--classes", type=int, default=3, help="class count")
    sp.add_argument("--seed", type=int, default=0, help="instance seed")
    sp.add_argument("--step", type=float, default=1e-4, help="finite-difference step")
    sp.add_argument("--scope", choices=loss_mod.CLASS_LOSS_SCOPES, default="object_cells")
    sp.add_argument("--confidence-target", choices=loss_mod.CONFIDENCE_TARGETS, default="iou")
    _add_format(sp, ("human", "json"))

    sp = sub("model-info", _cmd_model_info, "parameter estimate for a model spec")
    sp.add_argument("--model", help="model spec YAML (default: bundled reference)")
    sp.add_argument("--variant", choices=sorted(modelcfg.VARIANTS), default="large")
    _add_format(sp)

    sp = sub("rank", _cmd_rank, "order variant results by mAP or efficiency")
    sp.add_argument("--rows", required=True, help="CSV with variant,epochs,map50,params")
    sp.add_argument("--policy", choices=modelcfg.RANK_POLICIES, default="max_map")
    sp.add_argument("--budget", type=int, help="parameter budget for the efficiency policy")
    _add_format(sp)

    sp = sub("report", _cmd_report, "dashboards from training logs and results-table audits")
    sp.add_argument("--runs", nargs="*", help="training log CSVs (optionally name=path)")
    sp.add_argument("--out-svg", help="dashboard SVG output path")
    sp.add_argument("--out-summary", help="summary CSV output path")
    sp.add_argument("--compare", help="results CSV: model,epochs,precision,recall,f1,map50")
    sp.add_argument("--tolerance", type=float, default=0.05, help="F1 audit tolerance in points")
    _add_format(sp, ("human",))

    sp = sub("serve", _cmd_serve, "serve the annotation HTTP API")
    sp.add_argument("--root", required=True, help="dataset root containing images/ and labels/")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--ui", help="static UI directory to mount at /")

    return parser, index


def _apply_env_defaults(index: dict[str, argparse.ArgumentParser]) -> None:
    path = os.environ.get(ENV_CONFIG)
    if not path:
        return
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise _fail(f"{ENV_CONFIG} file {path}: {err}") from None
    if not isinstance(config, dict):
        raise _fail(f"{ENV_CONFIG} file must hold an object of per-subcommand defaults")
    for command, defaults in config.items():
        if command not in index:
            raise _fail(f"{ENV_CONFIG}: unknown subcommand {command!r}")
        if not isinstance(defaults, dict):
            raise _fail(f"{ENV_CONFIG}: defaults for {command!r} must be an object")
        known = {action.dest for action in index[command]._actions}  # argparse keeps this stable
        unknown = sorted(set(defaults) - known)
        if unknown:
            raise _fail(f"{ENV_CONFIG}: unknown option(s) for {command!r}: {unknown}")
        index[command].set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    parser, index = build_parser()
    try:
        _apply_env_defaults(index)
        args = parser.parse_args(argv)
        return args.handler(args)
    except SystemExit as exc:
        if isinstance(exc.code, int):
            return exc.code
        return 0 if exc.code is None else 2
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
