"""2D knee-bone morphometry, segmentation scoring, and pain-status classification.

The pipeline starts from label masks (0 background, 1 femur, 2 tibia):
contours are traced with marching squares, per-bone circularity and
eccentricity are derived from the largest outer contour and the moment
ellipse, predicted masks are scored against ground truth, and a KNN
classifier maps shape features to 12-month pain change categories.
"""

from .contours import (
    Contour,
    extract_contours,
    largest_contour,
    polygon_area,
    polygon_perimeter,
    write_contours_csv,
)
from .errors import (
    DegenerateShapeError,
    ManifestError,
    MaskError,
    MissingClassError,
    OsteomorphError,
    ProbMapError,
)
from .knn import (
    FEATURE_NAMES,
    ClassificationReport,
    FeatureVector,
    KnnModel,
    build_features,
    evaluate,
    fit_knn,
    predict,
)
from .masks import (
    BONE_CLASSES,
    CATEGORIES,
    CLASS_NAMES,
    FEMUR,
    TIBIA,
    DatasetManifest,
    LabelMask,
    ManifestEntry,
    PainCategory,
    PainRecord,
    ProbabilityMap,
    categorize_pain,
    load_manifest,
    load_mask,
    load_prob_map,
    resize_nearest,
    write_mask,
    write_prob_map,
)
from .metrics import (
    ConfusionCounts,
    SegMetrics,
    aggregate_metrics,
    confusion_counts,
    metrics_from_counts,
    sparse_ce_loss,
)
from .report import RunConfig, cmd_classify, cmd_eval, cmd_morph, cmd_synth
from .shape import (
    GroupStats,
    ShapeFeatures,
    circularity,
    compute_shape_features,
    eccentricity,
    fit_ellipse_moments,
    group_stats,
)
from .synth import SyntheticSpec, make_demo_dataset, paint, rasterize

__version__ = "0.1.0"

__all__ = [
    "BONE_CLASSES",
    "CATEGORIES",
    "CLASS_NAMES",
    "FEATURE_NAMES",
    "FEMUR",
    "TIBIA",
    "ClassificationReport",
    "ConfusionCounts",
    "Contour",
    "DatasetManifest",
    "DegenerateShapeError",
    "FeatureVector",
    "GroupStats",
    "KnnModel",
    "LabelMask",
    "ManifestEntry",
    "ManifestError",
    "MaskError",
    "MissingClassError",
    "OsteomorphError",
    "PainCategory",
    "PainRecord",
    "ProbMapError",
    "ProbabilityMap",
    "RunConfig",
    "SegMetrics",
    "ShapeFeatures",
    "SyntheticSpec",
    "aggregate_metrics",
    "build_features",
    "categorize_pain",
    "circularity",
    "cmd_classify",
    "cmd_eval",
    "cmd_morph",
    "cmd_synth",
    "compute_shape_features",
    "confusion_counts",
    "eccentricity",
    "evaluate",
    "extract_contours",
    "fit_ellipse_moments",
    "fit_knn",
    "group_stats",
    "largest_contour",
    "load_manifest",
    "load_mask",
    "load_prob_map",
    "make_demo_dataset",
    "metrics_from_counts",
    "paint",
    "polygon_area",
    "polygon_perimeter",
    "predict",
    "rasterize",
    "resize_nearest",
    "sparse_ce_loss",
    "write_contours_csv",
    "write_mask",
    "write_prob_map",
]
