"""
Attention diagnostics.
"""

import logging
from typing import Sequence

import numpy as np

from ..attention import AttentionRecord
from ..errors import EvaluationError, require
from ..layout import MaskPyramid
from ..text import ConcatenatedPrompt

logger = logging.getLogger(__name__)


def attention_mass_in_mask(
    records: Sequence[AttentionRecord],
    prompt: ConcatenatedPrompt,
    pyramids: Sequence[MaskPyramid],
) -> float:
    """Share of region-token attention that lands inside the region's mask.

    Per record, the mass on every region content column inside ``mask > 0``
    is divided by that columns' total mass; the ratios are averaged over the
    records. Records without any region mass are skipped.

    Raises:
        EvaluationError: if no record carries region attention.
    """
    if not records:
        raise EvaluationError("attention_mass_in_mask needs at least one record")
    require(len(pyramids) == prompt.region_count, "need one pyramid per region")

    ratios = []
    for record in records:
        require(
            record.tokens == prompt.padded_length,
            f"record {record.layer}@{record.step} has {record.tokens} columns, prompt has {prompt.padded_length}",
        )
        inside_weight = np.zeros(record.maps.shape[1:], dtype=np.float64)
        column_weight = np.zeros(record.maps.shape[1:], dtype=np.float64)
        for i, pyramid in enumerate(pyramids, start=1):
            inside = (pyramid.level(record.layer).reshape(-1) > 0).astype(np.float64)
            for k in prompt.region_content_columns(i):
                inside_weight[:, k] = inside
                column_weight[:, k] = 1.0
        total = float((record.maps * column_weight).sum())
        if total <= 0:
            continue
        ratios.append(float((record.maps * inside_weight).sum()) / total)

    if not ratios:
        raise EvaluationError("no record carries attention on region tokens")
    return float(np.mean(ratios))
