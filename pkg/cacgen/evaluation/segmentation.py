"""
Semantic segmentation scores: mIoU, mACC and all-pixel accuracy.
"""

import logging
from typing import Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import require

logger = logging.getLogger(__name__)


def segmentation_metrics(pred: NDArray, gt: NDArray) -> Tuple[float, float, float]:
    """``(mIoU, mACC, aACC)`` of a predicted label map.

    Per-class IoU and accuracy are averaged over the classes present in
    ``gt``; aACC is the fraction of correctly labeled pixels.

    Raises:
        ContractViolation: if the maps differ in shape or are empty.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    require(pred.shape == gt.shape, f"label maps differ in shape: {pred.shape} vs {gt.shape}")
    require(gt.size > 0, "label maps must not be empty")

    ious, accs = [], []
    for cls in np.unique(gt):
        in_gt = gt == cls
        in_pred = pred == cls
        inter = np.count_nonzero(in_gt & in_pred)
        union = np.count_nonzero(in_gt | in_pred)
        ious.append(inter / union)
        accs.append(inter / np.count_nonzero(in_gt))
    aacc = np.count_nonzero(pred == gt) / gt.size
    return float(np.mean(ious)), float(np.mean(accs)), float(aacc)
