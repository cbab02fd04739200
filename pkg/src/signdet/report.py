"""Training-run reports: metric-log ingestion, best-epoch selection,
dashboard rendering, and results tables with an F1-consistency audit.

The CSV schema mirrors the de facto detector training log: a header row
naming ``epoch``, ``train/box_loss``, ``train/obj_loss``, ``train/cls_loss``,
``val/box_loss``, ``val/obj_loss``, ``val/cls_loss``, ``metrics/precision``,
``metrics/recall`` and ``metrics/mAP_0.5`` (whitespace around names and
values is ignored; unknown columns too). Rate columns may be fractions or
percentages — a column whose maximum exceeds 1.5 is treated as percent and
divided by 100. The canonical internal unit is the fraction; tables render
in percent.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

from .svgplot import PALETTE, Panel, Series, render_grid

MANDATORY_COLUMNS = (
    "epoch",
    "train/box_loss",
    "train/obj_loss",
    "train/cls_loss",
    "val/box_loss",
    "val/obj_loss",
    "val/cls_loss",
    "metrics/precision",
    "metrics/recall",
    "metrics/mAP_0.5",
)
F1_COLUMN = "metrics/f1"

_LOSS_COLUMNS = MANDATORY_COLUMNS[1:7]
_RATE_COLUMNS = MANDATORY_COLUMNS[7:] + (F1_COLUMN,)

PERCENT_THRESHOLD = 1.5  # a rate column topping this is percent, not fraction


def harmonic_f1(precision: float, recall: float) -> float:
    """2PR/(P+R), with 0 when both rates are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class RunLog:
    name: str
    epochs: tuple[int, ...]
    train_box: tuple[float, ...]
    train_obj: tuple[float, ...]
    train_cls: tuple[float, ...]
    val_box: tuple[float, ...]
    val_obj: tuple[float, ...]
    val_cls: tuple[float, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    map50: tuple[float, ...]
    f1: tuple[float, ...]

    def __post_init__(self):
        n = len(self.epochs)
        for label, series in self._series().items():
            if len(series) != n:
                raise ValueError(f"{label} has {len(series)} rows but epoch has {n}")
        if any(later <= earlier for earlier, later in zip(self.epochs, self.epochs[1:])):
            raise ValueError("epochs must be strictly increasing")
        for label in ("train_box", "train_obj", "train_cls", "val_box", "val_obj", "val_cls"):
            if any(value < 0 for value in getattr(self, label)):
                raise ValueError(f"{label} must be >= 0")
        for label in ("precision", "recall", "map50", "f1"):
            if any(not 0.0 <= value <= 1.0 for value in getattr(self, label)):
                raise ValueError(f"{label} must lie in [0, 1]")

    def _series(self) -> dict[str, tuple[float, ...]]:
        return {
            "train_box": self.train_box,
            "train_obj": self.train_obj,
            "train_cls": self.train_cls,
            "val_box": self.val_box,
            "val_obj": self.val_obj,
            "val_cls": self.val_cls,
            "precision": self.precision,
            "recall": self.recall,
            "map50": self.map50,
            "f1": self.f1,
        }

    @property
    def val_total_loss(self) -> tuple[float, ...]:
        return tuple(b + o + c for b, o, c in zip(self.val_box, self.val_obj, self.val_cls))

    def __len__(self) -> int:
        return len(self.epochs)


def parse_run_log(text: str, name: str = "run") -> RunLog:
    """Read one training log from CSV text. Missing mandatory columns,
    non-numeric cells, and non-monotone epochs are errors; an absent F1
    column is derived per row from precision and recall."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV: no header row") from None
    names = [cell.strip() for cell in header]
    missing = [column for column in MANDATORY_COLUMNS if column not in names]
    if missing:
        raise ValueError(f"missing mandatory columns: {missing}")
    position = {column: names.index(column) for column in names}

    raw: dict[str, list[float]] = {column: [] for column in MANDATORY_COLUMNS + (F1_COLUMN,)}
    has_f1 = F1_COLUMN in position
    for row_number, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue  # ignore blank lines
        for column in MANDATORY_COLUMNS + ((F1_COLUMN,) if has_f1 else ()):
            cell = row[position[column]].strip() if position[column] < len(row) else ""
            try:
                raw[column].append(float(cell))
            except ValueError:
                raise ValueError(f"row {row_number}: column {column!r} is not numeric: {cell!r}") from None

    epochs = []
    for value in raw["epoch"]:
        if value != int(value):
            raise ValueError(f"epoch values must be integers, got {value}")
        epochs.append(int(value))

    def rates(column: str) -> tuple[float, ...]:
        values = raw[column]
        if values and max(values) > PERCENT_THRESHOLD:
            return tuple(value / 100.0 for value in values)
        return tuple(values)

    precision = rates("metrics/precision")
    recall = rates("metrics/recall")
    f1 = rates(F1_COLUMN) if has_f1 else tuple(harmonic_f1(p, r) for p, r in zip(precision, recall))

    return RunLog(
        name=name,
        epochs=tuple(epochs),
        train_box=tuple(raw["train/box_loss"]),
        train_obj=tuple(raw["train/obj_loss"]),
        train_cls=tuple(raw["train/cls_loss"]),
        val_box=tuple(raw["val/box_loss"]),
        val_obj=tuple(raw["val/obj_loss"]),
        val_cls=tuple(raw["val/cls_loss"]),
        precision=precision,
        recall=recall,
        map50=rates("metrics/mAP_0.5"),
        f1=f1,
    )


BEST_EPOCH_CRITERIA = ("map50", "precision", "recall", "f1", "val_loss")


def best_epoch(run: RunLog, criterion: str = "map50") -> int:
    """Epoch with the best value of the criterion: highest rate, or lowest
    summed validation loss for ``val_loss``. Earliest epoch wins ties."""
    if len(run) == 0:
        raise ValueError("run log has no rows")
    if criterion == "val_loss":
        series = run.val_total_loss
        index = min(range(len(series)), key=lambda i: series[i])
    elif criterion in ("map50", "precision", "recall", "f1"):
        series = getattr(run, criterion)
        index = max(range(len(series)), key=lambda i: (series[i], -i))
    else:
        raise ValueError(f"criterion must be one of {BEST_EPOCH_CRITERIA}")
    return run.epochs[index]


_PANELS = (
    ("train box loss", "train_box"),
    ("train obj loss", "train_obj"),
    ("train cls loss", "train_cls"),
    ("val box loss", "val_box"),
    ("val obj loss", "val_obj"),
    ("val cls loss", "val_cls"),
    ("precision", "precision"),
    ("recall", "recall"),
    ("mAP@0.5", "map50"),
    ("F1", "f1"),
)


@dataclass(frozen=True)
class DashboardBundle:
    svg: str
    summary_csv: str


def render_dashboard(runs: RunLog | Sequence[RunLog]) -> DashboardBundle:
    """Render one panel per metric series (ten panels, one polyline per run)
    plus a per-run summary CSV. Output bytes are deterministic for fixed
    input."""
    run_list = [runs] if isinstance(runs, RunLog) else list(runs)
    if not run_list:
        raise ValueError("no runs to render")
    for run in run_list:
        if len(run) == 0:
            raise ValueError(f"run {run.name!r} has no rows")

    colors = {run.name: PALETTE[index % len(PALETTE)] for index, run in enumerate(run_list)}
    panels = []
    for title, attribute in _PANELS:
        series = tuple(
            Series(run.name, tuple(float(e) for e in run.epochs), getattr(run, attribute), colors[run.name])
            for run in run_list
        )
        panels.append(Panel(title, series))
    svg = render_grid(panels, columns=5, legend=[(run.name, colors[run.name]) for run in run_list])

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["run", "epochs", "best_epoch", "best_map50", "final_precision", "final_recall", "final_f1", "final_map50"]
    )
    for run in run_list:
        best = best_epoch(run, "map50")
        writer.writerow(
            [
                run.name,
                len(run),
                best,
                f"{max(run.map50):.6f}",
                f"{run.precision[-1]:.6f}",
                f"{run.recall[-1]:.6f}",
                f"{run.f1[-1]:.6f}",
                f"{run.map50[-1]:.6f}",
            ]
        )
    return DashboardBundle(svg, buffer.getvalue())


@dataclass(frozen=True)
class ComparisonRow:
    """One results-table row; rates are fractions in [0, 1]."""

    model: str
    epochs: int
    precision: float
    recall: float
    f1: float
    map50: float

    def __post_init__(self):
        for label in ("precision", "recall", "f1", "map50"):
            value = getattr(self, label)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{label} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class F1Flag:
    model: str
    epochs: int
    printed_f1_points: float
    implied_f1_points: float
    difference_points: float


@dataclass(frozen=True)
class ComparisonReport:
    markdown: str
    flags: tuple[F1Flag, ...]

    @property
    def ok(self) -> bool:
        return not self.flags


def comparison_table(rows: Sequence[ComparisonRow], *, tolerance_points: float = 0.05) -> ComparisonReport:
    """Render a results table (percent, one decimal) and audit each row's
    printed F1 against 2PR/(P+R); rows off by more than
    ``tolerance_points`` percentage points are flagged."""
    if not rows:
        raise ValueError("no rows to tabulate")
    flags = []
    lines = [
        "| Model | Epochs | Precision (%) | Recall (%) | F1 (%) | mAP@0.5 (%) | F1 consistent |",
        "|---|---|---|---|---|---|---|",
    ]
    for row in rows:
        implied = harmonic_f1(row.precision, row.recall)
        difference = abs(implied - row.f1) * 100.0
        consistent = difference <= tolerance_points
        if not consistent:
            flags.append(
                F1Flag(row.model, row.epochs, row.f1 * 100.0, implied * 100.0, difference)
            )
        lines.append(
            f"| {row.model} | {row.epochs} | {row.precision * 100:.1f} | {row.recall * 100:.1f} "
            f"| {row.f1 * 100:.1f} | {row.map50 * 100:.1f} "
            f"| {'yes' if consistent else f'NO (off by {difference:.2f} points)'} |"
        )
    return ComparisonReport("\n".join(lines) + "\n", tuple(flags))
