"""
Projection weights of one attention block.

Weights are drawn from a seeded generator so every run and every test sees
the same layer. Cross-attention blocks also get the concept-painter coupling:
l_V copies the four paint coordinates of a token embedding into value dims
0..3 of every head, and l_O writes the head mean of those dims into model
channels 0..3. Everything attention deposits on the paint channels is
therefore the attention-weighted palette code of the attended tokens.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import require
from ..numerics import Matrix
from ..text import PAINT_DIMS

logger = logging.getLogger(__name__)

DEFAULT_QK_SCALE = 0.3


@dataclass(frozen=True)
class AttentionLayerParams:
    """l_Q, l_K, l_V, l_O of one block, stored as right-multiplied matrices.

    Shapes: ``w_q`` C x h*d, ``w_k`` d_e x h*d, ``w_v`` d_e x h*d_v,
    ``w_o`` h*d_v x C. Self-attention blocks use ``context_dim == model_dim``.
    """

    layer: str
    heads: int
    query_dim: int
    value_dim: int
    model_dim: int
    context_dim: int
    height: int
    width: int
    w_q: Matrix
    w_k: Matrix
    w_v: Matrix
    w_o: Matrix

    def __post_init__(self):
        require(self.heads >= 1 and self.query_dim >= 1 and self.value_dim >= 1, "head dims must be positive")
        require(self.height >= 1 and self.width >= 1, "perceptive dims must be positive")
        hd, hv = self.heads * self.query_dim, self.heads * self.value_dim
        expected = {
            "w_q": (self.model_dim, hd),
            "w_k": (self.context_dim, hd),
            "w_v": (self.context_dim, hv),
            "w_o": (hv, self.model_dim),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            require(actual == shape, f"{self.layer}.{name} has shape {actual}, expected {shape}")

    @property
    def pixels(self) -> int:
        return self.height * self.width

    @property
    def dims(self):
        return (self.layer, self.height, self.width)


def init_attention_params(
    layer: str,
    height: int,
    width: int,
    model_dim: int,
    context_dim: Optional[int] = None,
    heads: int = 2,
    query_dim: int = 4,
    value_dim: int = 4,
    seed: int = 0,
    qk_scale: float = DEFAULT_QK_SCALE,
) -> AttentionLayerParams:
    """Seeded weights for one block; ``context_dim`` set means cross attention.

    ``qk_scale`` keeps logits small so attention starts close to uniform over
    the tokens.
    """
    cross = context_dim is not None
    context_dim = context_dim if cross else model_dim
    hd, hv = heads * query_dim, heads * value_dim
    rng = np.random.default_rng([seed, *layer.encode()])

    w_q = rng.standard_normal((model_dim, hd)) * (np.sqrt(qk_scale) / np.sqrt(model_dim))
    w_k = rng.standard_normal((context_dim, hd)) * (np.sqrt(qk_scale) / np.sqrt(context_dim))
    w_v = rng.standard_normal((context_dim, hv)) / np.sqrt(context_dim)
    w_o = rng.standard_normal((hv, model_dim)) / np.sqrt(hv)

    if cross:
        require(value_dim >= PAINT_DIMS, f"cross blocks need value_dim >= {PAINT_DIMS}")
        require(model_dim >= PAINT_DIMS, f"cross blocks need model_dim >= {PAINT_DIMS}")
        paint_in = slice(context_dim - PAINT_DIMS, context_dim)
        # paint coords feed value dims 0..3 only, and nothing else reads them
        w_v[paint_in, :] = 0.0
        for r in range(heads):
            base = r * value_dim
            w_v[:, base : base + PAINT_DIMS] = 0.0
            w_v[paint_in, base : base + PAINT_DIMS] = np.eye(PAINT_DIMS)
            w_o[base : base + PAINT_DIMS, :] = 0.0
            w_o[base + PAINT_DIMS : base + value_dim, :PAINT_DIMS] = 0.0
            w_o[base : base + PAINT_DIMS, :PAINT_DIMS] = np.eye(PAINT_DIMS) / heads

    logger.debug(f"Initialized {'cross' if cross else 'self'} block {layer} at {height}x{width}")
    return AttentionLayerParams(
        layer=layer,
        heads=heads,
        query_dim=query_dim,
        value_dim=value_dim,
        model_dim=model_dim,
        context_dim=context_dim,
        height=height,
        width=width,
        w_q=w_q,
        w_k=w_k,
        w_v=w_v,
        w_o=w_o,
    )
