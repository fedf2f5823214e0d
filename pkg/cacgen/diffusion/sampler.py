"""
T-step sampler with Cross Attention Control and MD-ratio region blending.

The highest-noise ``ceil(rho * T)`` steps denoise every region (and the
uncovered rest of the image, under the caption) in a separate branch and
blend the branch latents by their masks. The remaining steps run a single
denoiser pass whose cross-attention blocks use the configured mode.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..attention import (
    AttentionLayerParams,
    AttentionRecord,
    cac_cross_attention,
    compose_average_outputs,
    cross_attention_baseline,
    substring_cac_attention,
)
from ..callbacks import (
    AttentionStore,
    SamplingContext,
    after_sample_callback,
    after_step_callback,
    before_sample_callback,
    before_step_callback,
)
from ..errors import require
from ..layout import (
    ConcatMask,
    MaskPyramid,
    SceneSpec,
    assemble_concat_mask,
    assemble_substring_mask,
    build_mask_pyramid,
)
from ..numerics import Grid, Matrix, resize_mask
from ..text import ConcatenatedPrompt, Vocabulary, concat_prompts, embed, embed_tokens, find_substring_span
from .config import AttentionMode, SamplerConfig
from .decoder import Decoder, LatentGrid, decode
from .denoiser import Attend, ToyDenoiser
from .schedule import NoiseSchedule, StepMode, ddim_update, schedule_control

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegionBranch:
    """Conditioning of one region's MD branch."""

    embed: Matrix
    weight: Grid  # latent-size blend weight
    prompt: Optional[ConcatenatedPrompt] = None  # y0 + yi, for CAC inside the branch
    embeds: Optional[Matrix] = None
    masks: Dict[str, ConcatMask] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenePlan:
    """Everything a run precomputes from (scene, config, denoiser)."""

    scene: SceneSpec
    cfg: SamplerConfig
    mode: AttentionMode
    schedule: NoiseSchedule
    caption_embed: Matrix
    prompt: ConcatenatedPrompt
    embeds: Matrix
    masks: Dict[str, ConcatMask]
    pyramids: Tuple[MaskPyramid, ...]
    plain_prompt: ConcatenatedPrompt
    plain_masks: Dict[str, ConcatMask]
    region_embeds: Tuple[Matrix, ...]
    substring_masks: Dict[str, List[ConcatMask]]
    average_masks: Dict[str, List[Optional[Matrix]]]
    branches: Tuple[RegionBranch, ...]
    caption_weight: Optional[Grid]


def _token_mask(prompt: ConcatenatedPrompt, layer: str, height: int, width: int) -> ConcatMask:
    # ones on real tokens, zeros on PAD
    row = (prompt.token_weights() > 0).astype(np.float64)
    return ConcatMask(layer=layer, height=height, width=width, matrix=np.tile(row, (height * width, 1)))


def _substring_plan(scene: SceneSpec, pyramids, layer_dims) -> Optional[Dict[str, List[ConcatMask]]]:
    spans = []
    covered = set()
    for region in scene.regions:
        span = find_substring_span(scene.caption, region.prompt)
        if span is None:
            logger.warning(f"Region '{region.text}' is not a substring of the caption; using cac mode")
            return None
        columns = set(range(span[0], span[0] + span[1]))
        if columns & covered:
            logger.warning(f"Region '{region.text}' overlaps another span in the caption; using cac mode")
            return None
        covered |= columns
        spans.append(span)
    return {
        layer: [
            assemble_substring_mask(pyr, span, scene.caption.length, layer)
            for pyr, span in zip(pyramids, spans)
        ]
        for layer, _, _ in layer_dims
    }


def _average_masks(scene: SceneSpec, pyramids, layer_dims) -> Dict[str, List[Optional[Matrix]]]:
    out = {}
    for layer, h, w in layer_dims:
        masks: List[Optional[Matrix]] = [None]
        for region, pyramid in zip(scene.regions, pyramids):
            matrix = np.ones((h * w, region.prompt.length), dtype=np.float64)
            matrix[:, 1:-1] = pyramid.level(layer).reshape(-1, 1)
            masks.append(matrix)
        out[layer] = masks
    return out


def plan_scene(
    scene: SceneSpec, cfg: SamplerConfig, denoiser: ToyDenoiser, vocab: Vocabulary
) -> ScenePlan:
    """Build prompts, embeddings, mask pyramids and per-layer masks for a run."""
    require(
        denoiser.context_dim == vocab.embed_dim,
        f"denoiser context dim {denoiser.context_dim} != vocabulary embed dim {vocab.embed_dim}",
    )
    layer_dims = denoiser.layer_dims()
    region_prompts = [r.prompt for r in scene.regions]
    prompt = concat_prompts(
        scene.caption,
        region_prompts,
        pad_to=cfg.pad_to,
        lambda_caption=cfg.lambda_caption,
        lambda_region=cfg.lambda_region,
        vocab=vocab,
        lambda_region_specials=cfg.lambda_region_specials,
    )
    plain = concat_prompts(scene.caption, region_prompts, pad_to=cfg.pad_to, vocab=vocab,
                           lambda_caption=1.0, lambda_region=1.0)
    pyramids = tuple(build_mask_pyramid(r.mask, layer_dims, cfg.mask_mode) for r in scene.regions)
    masks = {
        layer: assemble_concat_mask(pyramids, prompt, layer, dims=(h, w)) for layer, h, w in layer_dims
    }
    plain_masks = {layer: _token_mask(plain, layer, h, w) for layer, h, w in layer_dims}

    mode: AttentionMode = cfg.mode
    substring_masks: Dict[str, List[ConcatMask]] = {}
    if mode == "substring":
        planned = _substring_plan(scene, pyramids, layer_dims)
        if planned is None:
            mode = "cac"
        else:
            substring_masks = planned

    region_embeds = tuple(embed(p, vocab) for p in region_prompts)
    average_masks = _average_masks(scene, pyramids, layer_dims) if cfg.masked_average else {}

    lh, lw = denoiser.latent_h, denoiser.latent_w
    branches = []
    for i, region in enumerate(scene.regions):
        weight = resize_mask(region.mask, lh, lw, cfg.mask_mode)
        branch = RegionBranch(embed=region_embeds[i], weight=weight)
        if cfg.md_branch_cac:
            bp = concat_prompts(
                scene.caption, [region.prompt],
                lambda_caption=cfg.lambda_caption, lambda_region=cfg.lambda_region,
                vocab=vocab, lambda_region_specials=cfg.lambda_region_specials,
            )
            branch = RegionBranch(
                embed=region_embeds[i],
                weight=weight,
                prompt=bp,
                embeds=embed_tokens(bp.tokens, vocab),
                masks={layer: assemble_concat_mask([pyramids[i]], bp, layer) for layer, _, _ in layer_dims},
            )
        branches.append(branch)

    caption_weight = None
    if branches:
        rest = 1.0 - np.max(np.stack([b.weight for b in branches]), axis=0)
        caption_weight = rest if np.any(rest > 0) else None

    return ScenePlan(
        scene=scene,
        cfg=cfg,
        mode=mode,
        schedule=NoiseSchedule(cfg.train_steps, cfg.beta_start, cfg.beta_end),
        caption_embed=embed(scene.caption, vocab),
        prompt=prompt,
        embeds=embed_tokens(prompt.tokens, vocab),
        masks=masks,
        pyramids=pyramids,
        plain_prompt=plain,
        plain_masks=plain_masks,
        region_embeds=region_embeds,
        substring_masks=substring_masks,
        average_masks=average_masks,
        branches=tuple(branches),
        caption_weight=caption_weight,
    )


def attention_hook(plan: ScenePlan, mode: str, step: int, branch: Optional[int] = None) -> Attend:
    """Cross-attention callable for one denoiser pass.

    ``mode`` is a sampling mode, or ``region``/``region_cac`` for the MD
    branch of region ``branch``.
    """
    cfg = plan.cfg

    def attend(h: Matrix, params: AttentionLayerParams, index: int) -> Tuple[Matrix, Optional[AttentionRecord]]:
        layer = params.layer
        if mode == "baseline":
            return cross_attention_baseline(h, plan.caption_embed, params, index, step)
        if mode == "cac":
            return cac_cross_attention(
                h, plan.prompt, plan.embeds, plan.masks[layer], params, cfg.renormalize, index, step
            )
        if mode == "concat":
            return cac_cross_attention(
                h, plan.plain_prompt, plan.embeds, plan.plain_masks[layer], params, False, index, step
            )
        if mode == "substring":
            return substring_cac_attention(
                h, plan.caption_embed, plan.substring_masks[layer], params,
                cfg.substring_literal_sum, index, step,
            )
        if mode == "avg_outputs":
            masks = plan.average_masks.get(layer)
            return compose_average_outputs(h, plan.caption_embed, plan.region_embeds, params, masks), None
        if mode == "region":
            return cross_attention_baseline(h, plan.branches[branch].embed, params, index, step)
        if mode == "region_cac":
            b = plan.branches[branch]
            return cac_cross_attention(h, b.prompt, b.embeds, b.masks[layer], params, cfg.renormalize, index, step)
        raise ValueError(f"unknown attention mode: {mode}")

    return attend


def _advance(
    z_t: LatentGrid, t: int, plan: ScenePlan, denoiser: ToyDenoiser, attend: Attend
) -> Tuple[LatentGrid, List[AttentionRecord]]:
    cfg = plan.cfg
    alpha = plan.schedule.alpha_bar(t, cfg.steps)
    alpha_prev = plan.schedule.alpha_bar(t - 1, cfg.steps)
    eps, records = denoiser.predict_noise(z_t, alpha, attend)
    noise = None
    if cfg.eta > 0:
        noise = np.random.default_rng([cfg.seed, t]).standard_normal(z_t.shape)
    return ddim_update(z_t, eps, alpha, alpha_prev, cfg.eta, noise), records


def _resolve(scene: SceneSpec, cfg: SamplerConfig, plan, denoiser, vocab):
    if plan is not None:
        return plan, denoiser or _default_denoiser(cfg, plan.embeds.shape[1])
    from ..services import get_vocabulary

    vocab = vocab or get_vocabulary()
    denoiser = denoiser or _default_denoiser(cfg, vocab.embed_dim)
    return plan_scene(scene, cfg, denoiser, vocab), denoiser


def _default_denoiser(cfg: SamplerConfig, context_dim: int) -> ToyDenoiser:
    from ..services import get_denoiser

    return get_denoiser(cfg.latent_size, cfg.latent_channels, cfg.model_seed, context_dim)


def denoise_step(
    z_t: LatentGrid,
    t: int,
    scene: SceneSpec,
    cfg: SamplerConfig,
    mode: Optional[str] = None,
    plan: Optional[ScenePlan] = None,
    denoiser: Optional[ToyDenoiser] = None,
    vocab: Optional[Vocabulary] = None,
    store: Optional[AttentionStore] = None,
) -> LatentGrid:
    """One denoiser pass and DDIM update from step ``t`` to ``t - 1``."""
    require(1 <= t <= cfg.steps, f"step {t} outside [1, {cfg.steps}]")
    plan, denoiser = _resolve(scene, cfg, plan, denoiser, vocab)
    mode = mode or plan.mode
    if mode == "substring" and plan.mode != "substring":
        mode = plan.mode
    z_prev, records = _advance(np.asarray(z_t, dtype=np.float64), t, plan, denoiser, attention_hook(plan, mode, t))
    if store is not None:
        for record in records:
            store(record)
    return z_prev


def blend_latents(latents: Sequence[LatentGrid], weights: Sequence[Grid]) -> LatentGrid:
    """``sum_i w_i * z_i / sum_i w_i`` per pixel, reduced in the given order.

    Raises:
        ContractViolation: if the total weight is zero at some pixel.
    """
    require(len(latents) == len(weights) and latents, "blend needs one weight per latent")
    total = np.zeros_like(weights[0], dtype=np.float64)
    acc = np.zeros_like(latents[0], dtype=np.float64)
    for z, w in zip(latents, weights):
        acc = acc + w[None] * z
        total = total + w
    require(bool(np.all(total > 0)), "MD blend has pixels without any branch weight")
    return acc / total[None]


def md_region_step(
    z_t: LatentGrid,
    t: int,
    scene: SceneSpec,
    cfg: SamplerConfig,
    plan: Optional[ScenePlan] = None,
    denoiser: Optional[ToyDenoiser] = None,
    vocab: Optional[Vocabulary] = None,
) -> LatentGrid:
    """Region-wise denoising with mask-weighted latent blending.

    Each region branch attends to its own prompt (or to ``y0 + yi`` under
    CAC when ``md_branch_cac`` is set); a caption branch covers the pixels no
    region fully claims and is skipped when that weight is all zero. Without
    regions this is a plain :func:`denoise_step`.
    """
    plan, denoiser = _resolve(scene, cfg, plan, denoiser, vocab)
    if not plan.branches:
        return denoise_step(z_t, t, scene, cfg, plan=plan, denoiser=denoiser)
    z_t = np.asarray(z_t, dtype=np.float64)
    kind = "region_cac" if cfg.md_branch_cac else "region"
    latents, weights = [], []
    for i, branch in enumerate(plan.branches):
        z_i, _ = _advance(z_t, t, plan, denoiser, attention_hook(plan, kind, t, branch=i))
        latents.append(z_i)
        weights.append(branch.weight)
    if plan.caption_weight is not None:
        z_c, _ = _advance(z_t, t, plan, denoiser, attention_hook(plan, "baseline", t))
        latents.append(z_c)
        weights.append(plan.caption_weight)
    return blend_latents(latents, weights)


def initial_latent(cfg: SamplerConfig, shape: Tuple[int, int, int]) -> LatentGrid:
    return np.random.default_rng(cfg.seed).standard_normal(shape)


def sample(
    scene: SceneSpec,
    cfg: SamplerConfig,
    denoiser: Optional[ToyDenoiser] = None,
    vocab: Optional[Vocabulary] = None,
    context: Optional[SamplingContext] = None,
    decoder: Optional[Decoder] = None,
) -> Tuple[Grid, List[AttentionRecord]]:
    """Generate one image for ``scene``.

    Returns the ``H x W x 3`` image and the attention records of every
    non-MD step (subject to the context store's stride).
    """
    plan, denoiser = _resolve(scene, cfg, None, denoiser, vocab)
    store = context.store if context is not None and context.store is not None else AttentionStore()
    before_sample_callback(context)

    z = initial_latent(cfg, denoiser.latent_shape)
    for t in range(cfg.steps, 0, -1):
        phase = schedule_control(t, cfg.steps, cfg.md_ratio)
        md = phase is StepMode.MD and bool(plan.branches)
        label = "md" if md else plan.mode
        before_step_callback(context, t, label)
        if md:
            z = md_region_step(z, t, scene, cfg, plan=plan, denoiser=denoiser)
        else:
            z = denoise_step(z, t, scene, cfg, plan=plan, denoiser=denoiser, store=store)
        after_step_callback(context, t, label)

    image = decode(z, scene.image_h, scene.image_w, decoder)
    after_sample_callback(context)
    return image, list(store.records)
