"""
Attention package: seeded block parameters, baseline and CAC cross attention,
self attention and attention records.
"""

from .cross import (
    attention_probs,
    cac_cross_attention,
    compose_average_outputs,
    cross_attention_baseline,
    self_attention,
    substring_cac_attention,
)
from .params import DEFAULT_QK_SCALE, AttentionLayerParams, init_attention_params
from .records import (
    AttentionRecord,
    heatmap_image,
    read_attention_dump,
    write_attention_dump,
    write_heatmaps,
)

__all__ = [
    "AttentionLayerParams",
    "DEFAULT_QK_SCALE",
    "init_attention_params",
    "attention_probs",
    "cross_attention_baseline",
    "cac_cross_attention",
    "substring_cac_attention",
    "compose_average_outputs",
    "self_attention",
    "AttentionRecord",
    "heatmap_image",
    "read_attention_dump",
    "write_attention_dump",
    "write_heatmaps",
]
