"""Dataset and evaluation toolkit for grid-based gesture detection.

The package covers the non-training half of a detection workflow: label
files and dataset descriptors, deterministic splits and validation, anchor
clustering, detection metrics (AP/mAP, F1-confidence curves, confusion
matrices), a reference loss with gradients and a finite-difference checker,
model-variant parameter estimation and ranking, training-log dashboards
with an F1-consistency audit, and an HTTP service for editing labels.
"""

from .datasetops import (
    ANCHOR_STRIDES,
    AnchorGroup,
    AnchorSet,
    BoxSizeStats,
    DatasetStats,
    SplitPlan,
    ValidationIssue,
    ValidationReport,
    dataset_stats,
    group_anchors,
    kmeans_anchors,
    mean_best_iou,
    split,
    validate_dataset,
    write_split_manifests,
)
from .geometry import CornerBox, from_corners, iou, iou_norm, iou_wh, nms, to_corners
from .labels import (
    LENIENT_TOLERANCE,
    Annotation,
    ClassEntry,
    ClassTable,
    DatasetDescriptor,
    Detection,
    LabelClassError,
    LabelError,
    LabelFieldCountError,
    LabelNumericError,
    LabelRangeError,
    LabelWarning,
    NormBox,
    default_class_table,
    emit_label_file,
    emit_prediction_file,
    format_label_line,
    format_prediction_line,
    load_descriptor,
    parse_label_file,
    parse_label_line,
    parse_prediction_file,
    parse_prediction_line,
    read_label_file,
    read_prediction_file,
    save_descriptor,
    write_label_file,
)
# The total-loss function itself is deliberately NOT re-exported here: a
# package attribute named ``loss`` would shadow the ``signdet.loss``
# submodule. Call it as ``signdet.loss.loss(...)`` or import it directly.
from .loss import (
    AssignmentWarning,
    FiniteDifferenceReport,
    GridPrediction,
    GridTarget,
    LossBreakdown,
    LossConfig,
    LossGradient,
    assign_targets,
    cell_index,
    finite_difference_check,
    loss_gradient,
)
from .metrics import (
    ClassRates,
    F1Curve,
    MatchResult,
    PRCurve,
    PRPoint,
    average_precision,
    confusion_matrix,
    f1_confidence_curve,
    map_at_50,
    match,
    per_class_ap,
    pr_curve,
    rates,
)
from .modelcfg import (
    VARIANTS,
    Layer,
    ModelSpec,
    ParamReport,
    RankRow,
    Variant,
    emit_model_spec,
    estimate_params,
    load_model_spec,
    parse_model_spec,
    rank_variants,
    reference_spec,
    scale_depth,
    scale_width,
)
from .report import (
    MANDATORY_COLUMNS,
    ComparisonReport,
    ComparisonRow,
    DashboardBundle,
    F1Flag,
    RunLog,
    best_epoch,
    comparison_table,
    harmonic_f1,
    parse_run_log,
    render_dashboard,
)

__all__ = [
    # labels
    "LENIENT_TOLERANCE", "Annotation", "ClassEntry", "ClassTable", "DatasetDescriptor",
    "Detection", "LabelClassError", "LabelError", "LabelFieldCountError", "LabelNumericError",
    "LabelRangeError", "LabelWarning", "NormBox", "default_class_table", "emit_label_file",
    "emit_prediction_file", "format_label_line", "format_prediction_line", "load_descriptor",
    "parse_label_file", "parse_label_line", "parse_prediction_file", "parse_prediction_line",
    "read_label_file", "read_prediction_file", "save_descriptor", "write_label_file",
    # geometry
    "CornerBox", "from_corners", "iou", "iou_norm", "iou_wh", "nms", "to_corners",
    # dataset operations
    "ANCHOR_STRIDES", "AnchorGroup", "AnchorSet", "BoxSizeStats", "DatasetStats", "SplitPlan",
    "ValidationIssue", "ValidationReport", "dataset_stats", "group_anchors", "kmeans_anchors",
    "mean_best_iou", "split", "validate_dataset", "write_split_manifests",
    # metrics
    "ClassRates", "F1Curve", "MatchResult", "PRCurve", "PRPoint", "average_precision",
    "confusion_matrix", "f1_confidence_curve", "map_at_50", "match", "per_class_ap",
    "pr_curve", "rates",
    # loss (the total-loss function lives at signdet.loss.loss)
    "AssignmentWarning", "FiniteDifferenceReport", "GridPrediction", "GridTarget",
    "LossBreakdown", "LossConfig", "LossGradient", "assign_targets", "cell_index",
    "finite_difference_check", "loss_gradient",
    # model configuration
    "VARIANTS", "Layer", "ModelSpec", "ParamReport", "RankRow", "Variant", "emit_model_spec",
    "estimate_params", "load_model_spec", "parse_model_spec", "rank_variants",
    "reference_spec", "scale_depth", "scale_width",
    # reporting
    "MANDATORY_COLUMNS", "ComparisonReport", "ComparisonRow", "DashboardBundle", "F1Flag",
    "RunLog", "best_epoch", "comparison_table", "harmonic_f1", "parse_run_log",
    "render_dashboard",
]
