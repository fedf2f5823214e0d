"""
Evaluation Module

Oracle detector, metrics and synthetic benchmarks:
- detection: palette detector, P/R and 11-point mAP
- segmentation: mIoU, mACC and aACC
- fidelity: KID over block-mean image features
- composition: missing object / wrong color / correct categories
- diagnostics: attention mass inside region masks
- benchmark: seeded scene generators and batch scoring
- report: ground-truth files and the metrics report
"""

from .benchmark import (
    STREET_CLASSES,
    box_benchmark,
    composition_benchmark,
    composition_pairs,
    ground_truth_boxes,
    ground_truth_labels,
    labelmap_benchmark,
    label_palette,
    render_reference,
    scene_palette,
    score_boxes,
    score_composition,
    score_fidelity,
    score_labelmaps,
    street_labelmap,
)
from .composition import (
    CATEGORIES,
    COMPOSITION_MATCH_THRESHOLD,
    CORRECT,
    MISSING_OBJECT,
    SCORE_THRESHOLDS,
    WRONG_COLOR,
    category_counts,
    composition_categorize,
    composition_palette,
    composition_rates,
)
from .detection import (
    DEFAULT_MATCH_THRESHOLD,
    DEFAULT_MIN_BLOB,
    IOU_THRESHOLDS,
    Detection,
    average_precision_11pt,
    classify_pixels,
    detect_concepts,
    detection_metrics,
    iou,
    segment_concepts,
)
from .diagnostics import attention_mass_in_mask
from .fidelity import FEATURE_GRID, image_features, kid
from .report import BenchmarkKind, BoxEntry, GroundTruthFile, MetricsReport, SceneTruth, load_ground_truth
from .segmentation import segmentation_metrics

__all__ = [
    "DEFAULT_MATCH_THRESHOLD",
    "DEFAULT_MIN_BLOB",
    "IOU_THRESHOLDS",
    "Detection",
    "average_precision_11pt",
    "classify_pixels",
    "detect_concepts",
    "detection_metrics",
    "iou",
    "segment_concepts",
    "segmentation_metrics",
    "FEATURE_GRID",
    "image_features",
    "kid",
    "CATEGORIES",
    "COMPOSITION_MATCH_THRESHOLD",
    "CORRECT",
    "MISSING_OBJECT",
    "SCORE_THRESHOLDS",
    "WRONG_COLOR",
    "category_counts",
    "composition_categorize",
    "composition_palette",
    "composition_rates",
    "attention_mass_in_mask",
    "STREET_CLASSES",
    "box_benchmark",
    "composition_benchmark",
    "composition_pairs",
    "ground_truth_boxes",
    "ground_truth_labels",
    "labelmap_benchmark",
    "render_reference",
    "label_palette",
    "scene_palette",
    "score_boxes",
    "score_composition",
    "score_fidelity",
    "score_labelmaps",
    "street_labelmap",
    "BenchmarkKind",
    "BoxEntry",
    "GroundTruthFile",
    "MetricsReport",
    "SceneTruth",
    "load_ground_truth",
]
