"""
Oracle concept detector and detection metrics.

At toy scale a concept *is* its palette color, so the detector classifies
every pixel by its nearest palette color, groups 4-connected pixels of one
class and reports their tight boxes. Metrics follow the usual detection
protocol: greedy score-ordered matching per class and image, P and R at IoU
0.5, and 11-point interpolated AP at 0.5 and averaged over 0.5:0.05:0.95.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from ..errors import require

logger = logging.getLogger(__name__)

DEFAULT_MATCH_THRESHOLD = 0.18
DEFAULT_MIN_BLOB = 16
IOU_THRESHOLDS = tuple(float(t) for t in np.round(np.linspace(0.5, 0.95, 10), 2))

Palette = Mapping[str, Tuple[float, float, float]]
BoxCoords = Tuple[float, float, float, float]


@dataclass(frozen=True)
class Detection:
    """A pixel box ``[x0, y0, x1)`` x ``[y0, y1)`` with its concept and score."""

    box: BoxCoords
    concept: str
    score: float = 1.0
    image: int = 0

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        require(x0 < x1 and y0 < y1, f"detection box must satisfy x0<x1, y0<y1, got {self.box}")
        require(0.0 <= self.score <= 1.0, f"detection score must be in [0, 1], got {self.score}")


def _palette_arrays(palette: Palette) -> Tuple[List[str], NDArray[np.float64]]:
    require(len(palette) > 0, "palette must not be empty")
    names = list(palette)
    colors = np.asarray([palette[n] for n in names], dtype=np.float64)
    require(colors.shape[1] == 3, "palette colors must be RGB triples")
    return names, colors


def classify_pixels(
    image: NDArray, palette: Palette, threshold: float = DEFAULT_MATCH_THRESHOLD
) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Nearest palette index per pixel (-1 beyond ``threshold``) and its distance."""
    image = np.asarray(image, dtype=np.float64)
    require(image.ndim == 3 and image.shape[2] == 3, f"image must be H x W x 3, got {image.shape}")
    _, colors = _palette_arrays(palette)
    dist = np.linalg.norm(image[:, :, None, :] - colors[None, None], axis=-1)
    nearest = np.argmin(dist, axis=-1)
    best = np.take_along_axis(dist, nearest[..., None], axis=-1)[..., 0]
    labels = np.where(best <= threshold, nearest, -1)
    return labels.astype(np.int64), best


def detect_concepts(
    image: NDArray,
    palette: Palette,
    min_blob: int = DEFAULT_MIN_BLOB,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    image_id: int = 0,
) -> List[Detection]:
    """Detect palette-colored blobs.

    Each 4-connected component of at least ``min_blob`` pixels becomes one
    detection with its tight box; the score is the mean of
    ``1 - (distance / threshold)^2`` over the component.
    """
    require(min_blob >= 1, f"min_blob must be >= 1, got {min_blob}")
    names, _ = _palette_arrays(palette)
    labels, dist = classify_pixels(image, palette, threshold)
    confidence = 1.0 - (dist / threshold) ** 2
    detections = []
    for index, name in enumerate(names):
        components, count = ndimage.label(labels == index)
        if count == 0:
            continue
        for slc, comp in zip(ndimage.find_objects(components), range(1, count + 1)):
            member = components[slc] == comp
            size = int(member.sum())
            if size < min_blob:
                continue
            rows, cols = slc
            score = float(np.clip(confidence[slc][member].mean(), 0.0, 1.0))
            box = (float(cols.start), float(rows.start), float(cols.stop), float(rows.stop))
            detections.append(Detection(box=box, concept=name, score=score, image=image_id))
    logger.debug(f"Detected {len(detections)} blobs in image {image_id}")
    return detections


def segment_concepts(
    image: NDArray, palette: Palette, threshold: float = DEFAULT_MATCH_THRESHOLD
) -> NDArray[np.int64]:
    """Per-pixel class index in palette order; unmatched pixels get ``len(palette)``."""
    labels, _ = classify_pixels(image, palette, threshold)
    return np.where(labels < 0, len(palette), labels)


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    """Intersection over union of two ``[x0, y0, x1, y1]`` boxes by area."""
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return float(inter / union) if union > 0 else 0.0


def average_precision_11pt(recall: NDArray, precision: NDArray) -> float:
    """11-point interpolated AP over recall levels 0, 0.1, ..., 1."""
    ap = 0.0
    for level in np.linspace(0.0, 1.0, 11):
        reached = precision[recall >= level - 1e-12]
        ap += float(reached.max()) if reached.size else 0.0
    return ap / 11.0


def _sort_key(d: Detection):
    return (-d.score, d.image, d.concept, d.box)


def _match(preds: Sequence[Detection], gts: Sequence[Detection], threshold: float) -> NDArray[np.bool_]:
    """True-positive flag per prediction (in the given order)."""
    taken: Dict[Tuple[int, str], NDArray[np.bool_]] = {}
    by_key: Dict[Tuple[int, str], List[Detection]] = {}
    for gt in gts:
        by_key.setdefault((gt.image, gt.concept), []).append(gt)
    for key, items in by_key.items():
        taken[key] = np.zeros(len(items), dtype=bool)

    hits = np.zeros(len(preds), dtype=bool)
    for i, pred in enumerate(preds):
        key = (pred.image, pred.concept)
        candidates = by_key.get(key, [])
        best, best_iou = -1, -1.0
        for j, gt in enumerate(candidates):
            if taken[key][j]:
                continue
            overlap = iou(pred.box, gt.box)
            if overlap >= threshold and overlap > best_iou:
                best, best_iou = j, overlap
        if best >= 0:
            taken[key][best] = True
            hits[i] = True
    return hits


def _class_ap(preds: Sequence[Detection], gts: Sequence[Detection], concept: str, threshold: float) -> float:
    cls_preds = [p for p in preds if p.concept == concept]
    cls_gts = [g for g in gts if g.concept == concept]
    if not cls_preds:
        return 0.0
    hits = _match(cls_preds, cls_gts, threshold)
    tp = np.cumsum(hits)
    fp = np.cumsum(~hits)
    recall = tp / len(cls_gts)
    precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)
    return average_precision_11pt(recall, precision)


def detection_metrics(
    preds: Sequence[Detection],
    gts: Sequence[Detection],
    iou_thresholds: Optional[Sequence[float]] = None,
) -> Tuple[float, float, float, float]:
    """``(P, R, mAP50, mAP50-95)`` of ``preds`` against ``gts``.

    A prediction matches the unmatched ground truth of its image and class
    with the highest IoU, if that IoU reaches the threshold. Without
    predictions every value is 0.
    """
    thresholds = tuple(iou_thresholds) if iou_thresholds is not None else IOU_THRESHOLDS
    require(all(0.0 < t <= 1.0 for t in thresholds), f"IoU thresholds must lie in (0, 1], got {thresholds}")
    if not preds or not gts:
        return 0.0, 0.0, 0.0, 0.0

    ordered = sorted(preds, key=_sort_key)
    hits = _match(ordered, gts, 0.5)
    precision = float(hits.sum() / len(ordered))
    recall = float(hits.sum() / len(gts))

    concepts = sorted({g.concept for g in gts})
    ap_at = {
        t: float(np.mean([_class_ap(ordered, gts, c, t) for c in concepts])) for t in sorted(set(thresholds) | {0.5})
    }
    map50 = ap_at[0.5]
    map50_95 = float(np.mean([ap_at[t] for t in thresholds]))
    return precision, recall, map50, map50_95
