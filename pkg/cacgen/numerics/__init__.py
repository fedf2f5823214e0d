"""
Numerics Module

Float64 dense kernels that the attention, layout and diffusion code is
built on: matrix product, row softmax, Hadamard product and resampling.
"""

from .kernels import Matrix, as_matrix, hadamard, matmul, softmax_rows
from .resample import Grid, ResizeMode, resize_grid, resize_mask

__all__ = [
    "Matrix",
    "Grid",
    "ResizeMode",
    "as_matrix",
    "matmul",
    "softmax_rows",
    "hadamard",
    "resize_grid",
    "resize_mask",
]
