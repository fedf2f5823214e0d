"""
Dense float64 kernels: matrix product, row softmax and elementwise product.

Every kernel accepts 2-D matrices and, for the attention code, stacks of
matrices with matching leading (head) dimensions. Inputs are converted to
float64; nothing is computed in lower precision.
"""

import logging
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from ..errors import require

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
ArrayLike = Union[Matrix, Sequence[Sequence[float]]]


def as_matrix(values: ArrayLike) -> Matrix:
    """Build a finite float64 matrix (rows x cols) from nested values."""
    matrix = np.array(values, dtype=np.float64)
    require(matrix.ndim == 2, f"expected a 2-D matrix, got shape {matrix.shape}")
    require(bool(np.all(np.isfinite(matrix))), "matrix values must be finite")
    return matrix


def matmul(a: ArrayLike, b: ArrayLike) -> Matrix:
    """Matrix product ``a @ b``; stacked operands multiply per leading index.

    Raises:
        ContractViolation: if ``a.cols != b.rows`` or the stacks disagree.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require(a.ndim >= 2 and b.ndim >= 2, "matmul needs at least 2-D operands")
    require(
        a.shape[-1] == b.shape[-2],
        f"matmul dimension mismatch: {a.shape} x {b.shape}",
    )
    require(
        a.shape[:-2] == b.shape[:-2] or a.ndim == 2 or b.ndim == 2,
        f"matmul batch mismatch: {a.shape} x {b.shape}",
    )
    return np.matmul(a, b)


def softmax_rows(logits: ArrayLike, scale: float = 1.0) -> Matrix:
    """Row-wise softmax of ``scale * logits`` with max subtraction.

    Rows sum to 1 within 1e-9 and are invariant to adding a constant per row.
    """
    require(scale > 0, f"softmax scale must be positive, got {scale}")
    x = np.asarray(logits, dtype=np.float64) * scale
    x = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(x)
    return e / np.sum(e, axis=-1, keepdims=True)


def hadamard(a: ArrayLike, b: ArrayLike) -> Matrix:
    """Elementwise product of two equally shaped arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require(a.shape == b.shape, f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b
