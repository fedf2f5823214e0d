"""
KID analog: unbiased squared MMD under the cubic polynomial kernel
``k(x, y) = (x.y / dim + 1)^3``, over 4 x 4 x 3 area-averaged image features.
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import EvaluationError, require
from ..numerics import resize_grid

logger = logging.getLogger(__name__)

FEATURE_GRID = 4


def image_features(image: NDArray, grid: int = FEATURE_GRID) -> NDArray[np.float64]:
    """Area-average an ``H x W x 3`` image to ``grid x grid x 3`` and flatten."""
    image = np.asarray(image, dtype=np.float64)
    require(image.ndim == 3, f"image must be H x W x C, got {image.shape}")
    h, w, c = image.shape
    if h % grid == 0 and w % grid == 0:
        pooled = image.reshape(grid, h // grid, grid, w // grid, c).mean(axis=(1, 3))
    else:
        pooled = resize_grid(image, grid, grid, "bilinear")
    return pooled.reshape(-1)


def _canonical(feats) -> NDArray[np.float64]:
    x = np.asarray(feats, dtype=np.float64)
    require(x.ndim == 2, f"features must be n x dim, got {x.shape}")
    # lexicographic row order makes the estimate independent of input order
    order = np.lexsort(x.T[::-1])
    return x[order]


def _polynomial_kernel(x: NDArray, y: NDArray) -> NDArray:
    return (x @ y.T / x.shape[1] + 1.0) ** 3


def kid(feats_a: Sequence[Sequence[float]], feats_b: Sequence[Sequence[float]]) -> float:
    """Unbiased squared MMD between two feature sets.

    The result is symmetric in its arguments and may be slightly negative.

    Raises:
        EvaluationError: if either set has fewer than 2 samples.
        ContractViolation: if feature dimensions differ.
    """
    a, b = _canonical(feats_a), _canonical(feats_b)
    if len(a) < 2 or len(b) < 2:
        raise EvaluationError(f"KID needs at least 2 samples per set, got {len(a)} and {len(b)}")
    require(a.shape[1] == b.shape[1], f"feature dims differ: {a.shape[1]} vs {b.shape[1]}")
    a, b = _ordered_pair(a, b)

    m, n = len(a), len(b)
    k_aa = _polynomial_kernel(a, a)
    k_bb = _polynomial_kernel(b, b)
    k_ab = _polynomial_kernel(a, b)
    term_aa = (k_aa.sum() - np.trace(k_aa)) / (m * (m - 1))
    term_bb = (k_bb.sum() - np.trace(k_bb)) / (n * (n - 1))
    term_ab = k_ab.sum() / (m * n)
    return float(term_aa + term_bb - 2.0 * term_ab)


def _ordered_pair(a: NDArray, b: NDArray) -> Tuple[NDArray, NDArray]:
    if (len(a), a.tobytes()) <= (len(b), b.tobytes()):
        return a, b
    return b, a
