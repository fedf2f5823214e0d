"""
Mask and grid resampling.

Pixel centers are used for both modes: output index ``i`` samples the input
at ``(i + 0.5) * in / out - 0.5``. Nearest mode rounds that position to the
containing input pixel, so binary masks stay binary and a same-size resize
is the identity.

Masks shrunk in nearest mode are max-pooled instead: input pixel ``j`` falls
into output cell ``j * out // in`` and every cell keeps the largest value it
receives, so a region of any size stays visible at every coarser level.
"""

import logging
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from ..errors import require

logger = logging.getLogger(__name__)

Grid = NDArray[np.float64]
ResizeMode = Literal["nearest", "bilinear"]


def _nearest_indices(size_in: int, size_out: int) -> NDArray[np.intp]:
    # floor((i + 0.5) * in / out) in exact integer arithmetic
    idx = ((2 * np.arange(size_out) + 1) * size_in) // (2 * size_out)
    return np.minimum(idx, size_in - 1)


def _max_pool_axis(grid: Grid, size_out: int, axis: int) -> Grid:
    size_in = grid.shape[axis]
    # first input index of each output cell, ceil(i * in / out)
    starts = (np.arange(size_out) * size_in + size_out - 1) // size_out
    return np.maximum.reduceat(grid, starts, axis=axis)


def _shrink_or_pick(grid: Grid, size_out: int, axis: int) -> Grid:
    size_in = grid.shape[axis]
    if size_out < size_in:
        return _max_pool_axis(grid, size_out, axis)
    return np.take(grid, _nearest_indices(size_in, size_out), axis=axis)


def _linear_weights(size_in: int, size_out: int):
    pos = (np.arange(size_out, dtype=np.float64) + 0.5) * (size_in / size_out) - 0.5
    pos = np.clip(pos, 0.0, size_in - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, size_in - 1)
    return lo, hi, pos - lo


def resize_grid(
    grid: NDArray[np.float64], target_h: int, target_w: int, mode: ResizeMode = "nearest"
) -> NDArray[np.float64]:
    """Resize the two leading axes of ``grid`` (extra trailing axes ride along)."""
    require(target_h >= 1 and target_w >= 1, f"target dims must be >= 1, got {target_h}x{target_w}")
    grid = np.asarray(grid, dtype=np.float64)
    require(grid.ndim >= 2, f"expected a grid, got shape {grid.shape}")
    h, w = grid.shape[:2]

    if mode == "nearest":
        rows = _nearest_indices(h, target_h)
        cols = _nearest_indices(w, target_w)
        return grid[rows][:, cols]

    require(mode == "bilinear", f"unknown resize mode: {mode}")
    r0, r1, fr = _linear_weights(h, target_h)
    c0, c1, fc = _linear_weights(w, target_w)
    extra = (1,) * (grid.ndim - 2)
    fr = fr.reshape((-1, 1) + extra)
    fc = fc.reshape((1, -1) + extra)
    # lerp form keeps constant inputs exactly constant
    top = grid[r0][:, c0] + fc * (grid[r0][:, c1] - grid[r0][:, c0])
    bottom = grid[r1][:, c0] + fc * (grid[r1][:, c1] - grid[r1][:, c0])
    return top + fr * (bottom - top)


def resize_mask(mask: Grid, target_h: int, target_w: int, mode: ResizeMode = "nearest") -> Grid:
    """Resample a [0, 1] mask to ``target_h x target_w``.

    Nearest mode only copies input values: an axis that shrinks is max-pooled,
    an axis that grows or keeps its size picks the nearest input pixel.
    Bilinear output is clipped to [0, 1].

    Raises:
        ContractViolation: on zero target dimensions or a non-2-D mask.
    """
    mask = np.asarray(mask, dtype=np.float64)
    require(mask.ndim == 2, f"mask must be 2-D, got shape {mask.shape}")
    require(target_h >= 1 and target_w >= 1, f"target dims must be >= 1, got {target_h}x{target_w}")
    if mode == "nearest":
        return _shrink_or_pick(_shrink_or_pick(mask, target_h, 0), target_w, 1)
    return np.clip(resize_grid(mask, target_h, target_w, mode), 0.0, 1.0)
