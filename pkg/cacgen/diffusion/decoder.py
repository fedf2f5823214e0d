"""
Latent-to-image decoder: a fixed linear channel map, bilinear upsampling and
a clamp to [0, 1].
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from ..errors import require
from ..numerics import Grid, Matrix, resize_grid

logger = logging.getLogger(__name__)

LatentGrid = NDArray[np.float64]  # C' x H' x W'


@dataclass(frozen=True)
class Decoder:
    """``rgb = offset + weights @ z`` per latent pixel.

    The default map reads latent channels 0..2 at gain 0.5 around mid-gray,
    so a channel value of ``2c - 1`` decodes to color ``c``.
    """

    weights: Matrix
    offset: float = 0.5

    @classmethod
    def default(cls, latent_channels: int = 4) -> "Decoder":
        require(latent_channels >= 3, "the decoder needs at least 3 latent channels")
        weights = np.zeros((3, latent_channels), dtype=np.float64)
        weights[:, :3] = 0.5 * np.eye(3)
        return cls(weights=weights)

    @property
    def latent_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def lipschitz(self) -> float:
        """Bound L with ``|decode(a) - decode(b)|_inf <= L |a - b|_inf``."""
        return float(np.abs(self.weights).sum(axis=1).max())


def decode(z0: LatentGrid, h: int, w: int, decoder: Optional[Decoder] = None) -> Grid:
    """Decode ``z0`` to an ``h x w x 3`` image in [0, 1]."""
    z0 = np.asarray(z0, dtype=np.float64)
    decoder = decoder or Decoder.default(z0.shape[0])
    require(z0.ndim == 3, f"latent must be C x H x W, got {z0.shape}")
    require(
        z0.shape[0] == decoder.latent_channels,
        f"latent has {z0.shape[0]} channels, decoder expects {decoder.latent_channels}",
    )
    rgb = np.einsum("oc,chw->hwo", decoder.weights, z0) + decoder.offset
    if rgb.shape[:2] != (h, w):
        rgb = resize_grid(rgb, h, w, "bilinear")
    return np.clip(rgb, 0.0, 1.0)
