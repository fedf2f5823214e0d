"""
Box rasterization, the two-object heuristic layout and per-layer mask pyramids.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np

from ..errors import LayoutError, require
from ..numerics import Grid, ResizeMode, resize_mask

logger = logging.getLogger(__name__)

Box = Tuple[float, float, float, float]
LayerDims = Tuple[str, int, int]


def rasterize_box(box: Sequence[float], h: int, w: int) -> Grid:
    """Binary ``h x w`` mask of the pixels whose centers lie inside ``box``.

    ``box`` is normalized ``[x0, y0, x1, y1]``; bounds are inclusive.

    Raises:
        ContractViolation: on inverted or out-of-range coordinates.
        LayoutError: if no pixel center falls inside the box.
    """
    require(len(box) == 4, f"box needs 4 coordinates, got {box}")
    x0, y0, x1, y1 = (float(v) for v in box)
    require(x0 < x1 and y0 < y1, f"box must satisfy x0<x1 and y0<y1, got {box}")
    require(all(0.0 <= v <= 1.0 for v in (x0, y0, x1, y1)), f"box coords must be in [0,1], got {box}")
    require(h >= 1 and w >= 1, f"mask dims must be positive, got {h}x{w}")

    cy = (np.arange(h, dtype=np.float64) + 0.5) / h
    cx = (np.arange(w, dtype=np.float64) + 0.5) / w
    rows = (cy >= y0) & (cy <= y1)
    cols = (cx >= x0) & (cx <= x1)
    mask = np.outer(rows, cols).astype(np.float64)
    if not mask.any():
        raise LayoutError(f"box {list(box)} covers no pixel center at {h}x{w}")
    return mask


def box_to_pixels(box: Sequence[float], h: int, w: int) -> Tuple[int, int, int, int]:
    """Tight pixel bounds ``[x0, y0, x1, y1)`` of a rasterized box."""
    mask = rasterize_box(box, h, w)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1


def two_object_layout(h: int, w: int, margin: int = 40) -> Tuple[Box, Box]:
    """Left/right boxes for "a <c1> <o1> and a <c2> <o2>" prompts.

    Both boxes keep ``margin`` pixels to each border and to the vertical
    middle line. Returned boxes are normalized.

    Raises:
        LayoutError: if ``w / 2 - 2 * margin`` is not positive.
    """
    if not (w / 2 - 2 * margin > 0 and h - 2 * margin > 0):
        raise LayoutError(f"margin {margin} leaves no room in a {h}x{w} image")
    left = (margin, margin, w / 2 - margin, h - margin)
    right = (w / 2 + margin, margin, w - margin, h - margin)

    def normalize(b):
        return (b[0] / w, b[1] / h, b[2] / w, b[3] / h)

    return normalize(left), normalize(right)


@dataclass(frozen=True)
class MaskPyramid:
    """One region mask resampled to every attention layer's perceptive dims."""

    levels: Mapping[str, Grid]

    def level(self, layer: str) -> Grid:
        try:
            return self.levels[layer]
        except KeyError:
            raise LayoutError(f"mask pyramid has no level for layer '{layer}'") from None

    def positive_fraction(self, layer: str) -> float:
        return float(np.mean(self.level(layer) > 0))


def build_mask_pyramid(
    mask: Grid, layer_dims: Sequence[LayerDims], mode: ResizeMode = "nearest"
) -> MaskPyramid:
    """Resize ``mask`` to each ``(layer, H, W)`` in ``layer_dims``."""
    levels = {}
    for layer, height, width in layer_dims:
        require(height >= 1 and width >= 1, f"layer '{layer}' dims must be positive")
        levels[layer] = resize_mask(mask, height, width, mode)
    return MaskPyramid(levels=levels)
