"""
The concept-painter denoiser.

A small U-shaped stack of self and cross attention blocks at three
perceptive resolutions. It has no trained weights: its clean-latent
estimate blends the shrunk noisy latent with the palette code that cross
attention deposits on the paint channels. Where region tokens receive
attention the estimate moves to their color, so localization of attention
shows up directly in the image.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..attention import AttentionLayerParams, AttentionRecord, init_attention_params, self_attention
from ..errors import require
from ..numerics import Matrix, resize_grid
from ..text import PAINT_DIMS
from .decoder import LatentGrid
from .schedule import predicted_noise

logger = logging.getLogger(__name__)

# (hidden, params, block index) -> (block output, record or None)
Attend = Callable[[Matrix, AttentionLayerParams, int], Tuple[Matrix, Optional[AttentionRecord]]]

BLOCK_LAYOUT = (("down0", 0), ("down1", 1), ("mid", 2), ("up1", 1), ("up0", 0))


@dataclass(frozen=True)
class DenoiserBlock:
    name: str
    level: int
    self_params: AttentionLayerParams
    cross_params: AttentionLayerParams


def _pool2(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    return x.reshape(h // 2, 2, w // 2, 2, c).mean(axis=(1, 3))


class ToyDenoiser:
    """U-shaped attention stack over a ``C' x H' x W'`` latent.

    Immutable after construction, so concurrent runs may share one instance.
    """

    def __init__(
        self,
        latent_h: int = 32,
        latent_w: int = 32,
        latent_channels: int = 4,
        context_dim: int = 16,
        model_dim: int = 8,
        heads: int = 2,
        query_dim: int = 4,
        value_dim: int = 4,
        seed: int = 0,
        paint_gain: float = 4.0,
        data_std: float = 0.3,
    ):
        require(latent_h % 4 == 0 and latent_w % 4 == 0, f"latent dims must be divisible by 4, got {latent_h}x{latent_w}")
        require(latent_channels >= 3, "latent needs at least 3 channels")
        require(model_dim >= PAINT_DIMS, f"model_dim must be >= {PAINT_DIMS}")
        require(paint_gain > 0 and data_std > 0, "paint_gain and data_std must be positive")
        self.latent_h = latent_h
        self.latent_w = latent_w
        self.latent_channels = latent_channels
        self.context_dim = context_dim
        self.model_dim = model_dim
        self.seed = seed
        self.paint_gain = paint_gain
        self.data_std = data_std

        rng = np.random.default_rng([seed, 0x1A7E])
        self.w_in = rng.standard_normal((latent_channels, model_dim)) / np.sqrt(latent_channels)

        blocks = []
        for name, level in BLOCK_LAYOUT:
            h, w = latent_h >> level, latent_w >> level
            common = dict(heads=heads, query_dim=query_dim, value_dim=value_dim, seed=seed)
            blocks.append(
                DenoiserBlock(
                    name=name,
                    level=level,
                    self_params=init_attention_params(f"{name}_self", h, w, model_dim, **common),
                    cross_params=init_attention_params(name, h, w, model_dim, context_dim=context_dim, **common),
                )
            )
        self.blocks: Tuple[DenoiserBlock, ...] = tuple(blocks)
        logger.info(
            f"Built ToyDenoiser {latent_channels}x{latent_h}x{latent_w}, "
            f"{len(self.blocks)} blocks, d_e={context_dim}"
        )

    @property
    def latent_shape(self) -> Tuple[int, int, int]:
        return (self.latent_channels, self.latent_h, self.latent_w)

    def layer_dims(self) -> List[Tuple[str, int, int]]:
        """``(layer id, H, W)`` of every cross-attention block, in block order."""
        return [b.cross_params.dims for b in self.blocks]

    def cross_params(self) -> List[AttentionLayerParams]:
        return [b.cross_params for b in self.blocks]

    def paint(self, z_t: LatentGrid, attend: Attend) -> Tuple[np.ndarray, List[AttentionRecord]]:
        """Run the block stack; return the mean paint readout at latent size.

        The readout is ``H' x W' x 4``: channel 0 is the attention mass on
        concept tokens, channels 1..3 the mass-weighted color codes.
        """
        z_t = np.asarray(z_t, dtype=np.float64)
        require(z_t.shape == self.latent_shape, f"latent shape {z_t.shape} != {self.latent_shape}")
        x = np.einsum("chw,cm->hwm", z_t, self.w_in)
        skips = {}
        level = 0
        readout = np.zeros((self.latent_h, self.latent_w, PAINT_DIMS), dtype=np.float64)
        records: List[AttentionRecord] = []

        for index, block in enumerate(self.blocks):
            while level < block.level:
                skips[level] = x
                x = _pool2(x)
                level += 1
            while level > block.level:
                level -= 1
                x = resize_grid(x, *skips[level].shape[:2], "nearest") + skips[level]

            h, w = block.cross_params.height, block.cross_params.width
            flat = x.reshape(h * w, self.model_dim)
            flat = flat + self_attention(flat, block.self_params)
            out, record = attend(flat, block.cross_params, index)
            flat = flat + out
            if record is not None:
                records.append(record)
            paint = out[:, :PAINT_DIMS].reshape(h, w, PAINT_DIMS)
            readout += resize_grid(paint, self.latent_h, self.latent_w, "nearest")
            x = flat.reshape(h, w, self.model_dim)

        return readout / len(self.blocks), records

    def predict_x0(self, z_t: LatentGrid, alpha_bar: float, attend: Attend) -> Tuple[LatentGrid, List[AttentionRecord]]:
        """Clean-latent estimate at noise level ``alpha_bar``."""
        readout, records = self.paint(z_t, attend)
        mass = readout[..., 0]
        strength = np.clip(self.paint_gain * mass, 0.0, 1.0)
        safe = np.where(mass > 0, mass, 1.0)
        color = np.where(mass[..., None] > 0, readout[..., 1:] / safe[..., None], 0.0)

        # posterior mean of Gaussian data with std data_std given z_t
        var = self.data_std**2
        shrink = np.sqrt(alpha_bar) * var / (alpha_bar * var + 1.0 - alpha_bar)
        x0 = shrink * np.asarray(z_t, dtype=np.float64)
        painted = (1.0 - strength)[None] * x0[:3] + strength[None] * color.transpose(2, 0, 1)
        x0[:3] = painted
        return x0, records

    def predict_noise(self, z_t: LatentGrid, alpha_bar: float, attend: Attend) -> Tuple[LatentGrid, List[AttentionRecord]]:
        """Noise estimate consistent with :meth:`predict_x0`."""
        x0, records = self.predict_x0(z_t, alpha_bar, attend)
        return predicted_noise(np.asarray(z_t, dtype=np.float64), x0, alpha_bar), records
