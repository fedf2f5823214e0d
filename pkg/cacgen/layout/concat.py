"""
Attention masks B^(l): the concatenated mask over y0 + y1 + ... + ym and the
substring form that masks spans of the caption's own columns.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import LayoutError, require
from ..numerics import Matrix
from ..text import ConcatenatedPrompt
from .masks import MaskPyramid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConcatMask:
    """``(H*W) x N`` mask for one layer; identical for every head."""

    layer: str
    height: int
    width: int
    matrix: Matrix
    # set for substring masks: the caption columns the region mask covers
    span: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        require(
            self.matrix.shape[0] == self.height * self.width,
            f"mask rows {self.matrix.shape[0]} != {self.height}x{self.width}",
        )

    @property
    def columns(self) -> int:
        return self.matrix.shape[1]


def assemble_concat_mask(
    pyramids: Sequence[MaskPyramid],
    prompt: ConcatenatedPrompt,
    layer: str,
    dims: Optional[Tuple[int, int]] = None,
) -> ConcatMask:
    """Build B^(l) for the concatenated prompt.

    Caption columns and every BOS/EOS column are all ones, region content
    columns carry the flattened region mask, PAD columns are zero. With no
    regions the layer dims come from ``dims``.

    Raises:
        ContractViolation: if the pyramid count differs from the region count.
        LayoutError: if a pyramid lacks ``layer`` or no dims are known.
    """
    require(
        len(pyramids) == prompt.region_count,
        f"need one pyramid per region: {len(pyramids)} vs {prompt.region_count}",
    )
    if pyramids:
        height, width = pyramids[0].level(layer).shape
    elif dims is not None:
        height, width = dims
    else:
        raise LayoutError(f"no pyramid or dims given for layer '{layer}'")

    matrix = np.zeros((height * width, prompt.padded_length), dtype=np.float64)
    matrix[:, : prompt.unpadded_length] = 1.0
    for i, pyramid in enumerate(pyramids, start=1):
        level = pyramid.level(layer)
        require(level.shape == (height, width), f"pyramid {i} level '{layer}' has shape {level.shape}")
        flat = level.reshape(-1)
        for k in prompt.region_content_columns(i):
            matrix[:, k] = flat
    return ConcatMask(layer=layer, height=height, width=width, matrix=matrix)


def assemble_substring_mask(
    pyramid: MaskPyramid, span: Tuple[int, int], caption_len: int, layer: str
) -> ConcatMask:
    """Mask over the caption's ``n_0`` columns with the region mask on the span.

    Raises:
        ContractViolation: if the span leaves the caption.
    """
    j, n = span
    require(n >= 1 and j >= 0 and j + n <= caption_len, f"span {span} outside caption of length {caption_len}")
    level = pyramid.level(layer)
    height, width = level.shape
    matrix = np.zeros((height * width, caption_len), dtype=np.float64)
    matrix[:, j : j + n] = level.reshape(-1, 1)
    return ConcatMask(layer=layer, height=height, width=width, matrix=matrix, span=(j, n))
