"""
Multi-head attention with Cross Attention Control.

Every variant runs the same pipeline: project heads, softmax the scaled
scores, edit the probabilities (lambda weighting, masking, span replacement),
multiply by the values and merge heads through l_O. The edit step is the only
difference between variants, so a transparent edit reproduces the baseline
bit for bit.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import require
from ..layout import ConcatMask
from ..numerics import Matrix, matmul, softmax_rows
from ..text import ConcatenatedPrompt
from .params import AttentionLayerParams
from .records import AttentionRecord

logger = logging.getLogger(__name__)

HeadStack = NDArray[np.float64]  # heads x rows x cols


def _split_heads(x: Matrix, heads: int) -> HeadStack:
    rows, width = x.shape
    return x.reshape(rows, heads, width // heads).transpose(1, 0, 2)


def _merge_heads(x: HeadStack) -> Matrix:
    heads, rows, width = x.shape
    return x.transpose(1, 0, 2).reshape(rows, heads * width)


def _check_input(z: Matrix, params: AttentionLayerParams) -> Matrix:
    z = np.asarray(z, dtype=np.float64)
    require(z.ndim == 2, f"{params.layer}: z must be (H*W) x C, got {z.shape}")
    require(
        z.shape == (params.pixels, params.model_dim),
        f"{params.layer}: z has shape {z.shape}, expected {(params.pixels, params.model_dim)}",
    )
    return z


def _check_context(embeds: Matrix, params: AttentionLayerParams) -> Matrix:
    embeds = np.asarray(embeds, dtype=np.float64)
    require(
        embeds.ndim == 2 and embeds.shape[1] == params.context_dim,
        f"{params.layer}: context must be n x {params.context_dim}, got {embeds.shape}",
    )
    require(embeds.shape[0] >= 1, f"{params.layer}: context has no tokens")
    return embeds


def attention_probs(z: Matrix, context: Matrix, params: AttentionLayerParams) -> Tuple[HeadStack, HeadStack]:
    """Per-head ``softmax(Q K^T / sqrt(d))`` and the per-head values V."""
    q = _split_heads(matmul(z, params.w_q), params.heads)
    k = _split_heads(matmul(context, params.w_k), params.heads)
    v = _split_heads(matmul(context, params.w_v), params.heads)
    scores = matmul(q, k.transpose(0, 2, 1))
    probs = softmax_rows(scores, scale=1.0 / np.sqrt(params.query_dim))
    return probs, v


def _output(maps: HeadStack, values: HeadStack, params: AttentionLayerParams) -> Matrix:
    return matmul(_merge_heads(matmul(maps, values)), params.w_o)


def _record(maps: HeadStack, params: AttentionLayerParams, layer_index: int, step: int) -> AttentionRecord:
    return AttentionRecord(
        layer=params.layer,
        layer_index=layer_index,
        step=step,
        height=params.height,
        width=params.width,
        maps=maps,
    )


def cross_attention_baseline(
    z: Matrix,
    text_embed: Matrix,
    params: AttentionLayerParams,
    layer_index: int = 0,
    step: int = 0,
) -> Tuple[Matrix, AttentionRecord]:
    """Plain cross attention: ``z_out = l_O(concat_heads(M V))``.

    Raises:
        ContractViolation: on any dimension mismatch with ``params``.
    """
    z = _check_input(z, params)
    text_embed = _check_context(text_embed, params)
    maps, values = attention_probs(z, text_embed, params)
    return _output(maps, values, params), _record(maps, params, layer_index, step)


def cac_cross_attention(
    z: Matrix,
    prompt: ConcatenatedPrompt,
    embeds: Matrix,
    mask: ConcatMask,
    params: AttentionLayerParams,
    renormalize: bool = False,
    layer_index: int = 0,
    step: int = 0,
) -> Tuple[Matrix, AttentionRecord]:
    """Cross attention over ``y0 + y1 + ... + ym`` with masks and lambda weights.

    ``M = lambda * softmax(Q K^T / sqrt(d)) * B``, lambda broadcast per column
    and B identical for every head. Rows are not renormalized unless
    ``renormalize`` is set (all-zero rows then stay zero).

    Raises:
        ContractViolation: on any dimension mismatch between ``z``, the
            embeddings, the prompt, the mask and ``params``.
    """
    z = _check_input(z, params)
    embeds = _check_context(embeds, params)
    tokens = prompt.padded_length
    require(embeds.shape[0] == tokens, f"{params.layer}: {embeds.shape[0]} embeddings for {tokens} tokens")
    require(
        (mask.height, mask.width) == (params.height, params.width),
        f"{params.layer}: mask is {mask.height}x{mask.width}, layer is {params.height}x{params.width}",
    )
    require(mask.columns == tokens, f"{params.layer}: mask has {mask.columns} columns for {tokens} tokens")

    probs, values = attention_probs(z, embeds, params)
    maps = probs * prompt.token_weights()
    maps = maps * mask.matrix
    if renormalize:
        totals = maps.sum(axis=-1, keepdims=True)
        maps = maps / np.where(totals > 0, totals, 1.0)
    return _output(maps, values, params), _record(maps, params, layer_index, step)


def _span_of(mask: ConcatMask) -> Tuple[int, int]:
    if mask.span is not None:
        return mask.span
    cols = np.flatnonzero(mask.matrix.any(axis=0))
    require(cols.size > 0, "substring mask without span information")
    return int(cols[0]), int(cols[-1] - cols[0] + 1)


def substring_cac_attention(
    z: Matrix,
    caption_embed: Matrix,
    span_masks: Sequence[ConcatMask],
    params: AttentionLayerParams,
    literal_sum: bool = False,
    layer_index: int = 0,
    step: int = 0,
) -> Tuple[Matrix, AttentionRecord]:
    """Mask the caption's own columns where region prompts occur verbatim.

    Span columns of M_0 are replaced by ``M_0 * B_i``; columns outside every
    span keep baseline attention. With ``literal_sum`` the combination is
    ``M_0 + sum_i M_0 * B_i`` instead.

    Raises:
        ContractViolation: on overlapping spans or dimension mismatches.
    """
    z = _check_input(z, params)
    caption_embed = _check_context(caption_embed, params)
    n0 = caption_embed.shape[0]
    covered = np.zeros(n0, dtype=bool)
    for mask in span_masks:
        require(mask.columns == n0, f"{params.layer}: span mask has {mask.columns} columns, caption has {n0}")
        require(
            (mask.height, mask.width) == (params.height, params.width),
            f"{params.layer}: span mask is {mask.height}x{mask.width}",
        )
        j, n = _span_of(mask)
        require(not covered[j : j + n].any(), f"{params.layer}: span {(j, n)} overlaps another span")
        covered[j : j + n] = True

    probs, values = attention_probs(z, caption_embed, params)
    if literal_sum:
        maps = probs.copy()
        for mask in span_masks:
            maps = maps + probs * mask.matrix
    else:
        maps = probs.copy()
        for mask in span_masks:
            j, n = _span_of(mask)
            maps[:, :, j : j + n] = probs[:, :, j : j + n] * mask.matrix[:, j : j + n]
    return _output(maps, values, params), _record(maps, params, layer_index, step)


def compose_average_outputs(
    z: Matrix,
    caption_embed: Matrix,
    region_embeds: Sequence[Matrix],
    params: AttentionLayerParams,
    masks: Optional[Sequence[Optional[Matrix]]] = None,
) -> Matrix:
    """Mean of independently attended outputs, one per prompt.

    ``masks`` optionally holds one ``(H*W) x n_i`` matrix per prompt
    (caption first); a None entry leaves that prompt unmasked.
    """
    z = _check_input(z, params)
    contexts: List[Matrix] = [caption_embed, *region_embeds]
    if masks is not None:
        require(len(masks) == len(contexts), f"need {len(contexts)} masks, got {len(masks)}")
    total = np.zeros((params.pixels, params.model_dim), dtype=np.float64)
    for i, context in enumerate(contexts):
        context = _check_context(context, params)
        maps, values = attention_probs(z, context, params)
        if masks is not None and masks[i] is not None:
            matrix = np.asarray(masks[i], dtype=np.float64)
            require(matrix.shape == maps.shape[1:], f"mask {i} has shape {matrix.shape}, expected {maps.shape[1:]}")
            maps = maps * matrix
        total = total + _output(maps, values, params)
    return total / len(contexts)


def self_attention(z: Matrix, params: AttentionLayerParams) -> Matrix:
    """Multi-head self attention with Q, K and V all projected from ``z``."""
    z = _check_input(z, params)
    require(params.context_dim == params.model_dim, f"{params.layer} is not a self-attention block")
    maps, values = attention_probs(z, z, params)
    return _output(maps, values, params)
