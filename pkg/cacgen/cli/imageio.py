"""
Deterministic image encoding.

Images are quantized with round-half-even to 8 bits and written without
metadata, so equal arrays always give equal bytes.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import NDArray
from PIL import Image

from ..errors import EvaluationError, require

logger = logging.getLogger(__name__)


def to_uint8(image: NDArray) -> NDArray[np.uint8]:
    image = np.asarray(image, dtype=np.float64)
    require(image.ndim == 3 and image.shape[2] == 3, f"image must be H x W x 3, got {image.shape}")
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(image: NDArray, path: Union[str, Path]) -> Path:
    path = Path(path)
    Image.fromarray(to_uint8(image)).save(path, format="PNG", optimize=False, compress_level=6)
    return path


def write_ppm(image: NDArray, path: Union[str, Path]) -> Path:
    """Binary P6 PPM."""
    path = Path(path)
    Image.fromarray(to_uint8(image)).save(path, format="PPM")
    return path


def read_image(path: Union[str, Path]) -> NDArray[np.float64]:
    """RGB image in ``[0, 1]``.

    Raises:
        EvaluationError: if the file is missing or unreadable.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except FileNotFoundError:
        raise EvaluationError(f"image not found: {path}") from None
    except OSError as e:
        raise EvaluationError(f"cannot read image {path}: {e}") from None


def read_label_png(path: Union[str, Path]) -> NDArray[np.int64]:
    """Single-channel PNG of class ids."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=np.int64)
    except FileNotFoundError:
        raise EvaluationError(f"label map not found: {path}") from None
