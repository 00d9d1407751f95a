"""Tooling for a skin-lesion classification pipeline: preprocessing,
seeded augmentation, class-imbalance machinery, prediction aggregation
and challenge-style scoring."""

__version__ = "0.1.0"

from .aggregate import ensemble_mean, softmax, tta_merge
from .augment import (
    AugmentationPolicy,
    TransformSample,
    apply_cutout,
    apply_transform,
    sample_transform,
    transform_rng,
    tta_variants,
)
from .categories import CATEGORY_NAMES, N_CATEGORIES, Category
from .datamodel import (
    ClassCounts,
    GroundTruthSet,
    Manifest,
    ManifestRecord,
    PredictionSet,
    align,
    normalize_rows,
)
from .exceptions import (
    AlignmentError,
    BackendProtocolError,
    FormatError,
    LesionKitError,
)
from .imbalance import (
    PriorRescaler,
    effective_weights,
    inverse_frequency_weights,
    oversample_manifest,
    prior_rescale,
    split_manifest,
    weighted_cross_entropy,
)
from .metrics import (
    BinaryMetrics,
    ConfusionCounts,
    MetricsReport,
    RocCurve,
    auc,
    auc_above_sensitivity,
    average_precision,
    balanced_accuracy,
    binarize,
    binary_metrics,
    category_mean,
    format_report_keyvalues,
    format_report_table,
    full_report,
    roc_curve,
)
from .preprocess import (
    BorderTrimmer,
    ContentBox,
    detect_content_box,
    preprocess_batch,
    resize_aspect,
    trim_borders,
)

__all__ = [
    "__version__",
    "AlignmentError",
    "AugmentationPolicy",
    "BackendProtocolError",
    "BinaryMetrics",
    "BorderTrimmer",
    "CATEGORY_NAMES",
    "Category",
    "ClassCounts",
    "ConfusionCounts",
    "ContentBox",
    "FormatError",
    "GroundTruthSet",
    "LesionKitError",
    "Manifest",
    "ManifestRecord",
    "MetricsReport",
    "N_CATEGORIES",
    "PredictionSet",
    "PriorRescaler",
    "RocCurve",
    "TransformSample",
    "align",
    "apply_cutout",
    "apply_transform",
    "auc",
    "auc_above_sensitivity",
    "average_precision",
    "balanced_accuracy",
    "binarize",
    "binary_metrics",
    "category_mean",
    "detect_content_box",
    "effective_weights",
    "ensemble_mean",
    "format_report_keyvalues",
    "format_report_table",
    "full_report",
    "inverse_frequency_weights",
    "normalize_rows",
    "oversample_manifest",
    "preprocess_batch",
    "prior_rescale",
    "resize_aspect",
    "roc_curve",
    "sample_transform",
    "softmax",
    "split_manifest",
    "transform_rng",
    "trim_borders",
    "tta_merge",
    "tta_variants",
    "weighted_cross_entropy",
]
