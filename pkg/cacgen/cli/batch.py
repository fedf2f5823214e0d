"""
Batch generation and per-arm scoring shared by the commands.

Jobs run concurrently in worker threads, at most ``threads`` at a time.
Results come back in job order, so callers write files deterministically.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..attention import AttentionRecord
from ..callbacks import AttentionStore, SamplingContext
from ..diffusion import SamplerConfig, sample
from ..errors import EvaluationError
from ..evaluation import (
    STREET_CLASSES,
    BenchmarkKind,
    MetricsReport,
    composition_pairs,
    ground_truth_boxes,
    ground_truth_labels,
    render_reference,
    scene_palette,
    score_boxes,
    score_composition,
    score_fidelity,
    score_labelmaps,
)
from ..layout import SceneSpec
from ..numerics import Grid
from ..services import get_denoiser
from ..text import Vocabulary

logger = logging.getLogger(__name__)


@dataclass
class Generation:
    scene: SceneSpec
    cfg: SamplerConfig
    image: Grid
    seconds: float
    records: List[AttentionRecord] = field(default_factory=list)


@dataclass(frozen=True)
class AblationRow:
    ratio: float
    arm: str
    map50: float
    kid: Optional[float]


def _generate(scene: SceneSpec, cfg: SamplerConfig, vocab: Vocabulary, keep_records: bool) -> Generation:
    denoiser = get_denoiser(cfg.latent_size, cfg.latent_channels, cfg.model_seed, vocab.embed_dim)
    # a zero-capacity store drops records as they arrive
    store = AttentionStore() if keep_records else AttentionStore(max_records=0)
    context = SamplingContext(run_id=f"{scene.name}/{cfg.mode}", seed=cfg.seed, store=store)
    image, records = sample(scene, cfg, denoiser=denoiser, vocab=vocab, context=context)
    return Generation(
        scene=scene,
        cfg=cfg,
        image=image,
        seconds=float(context.state.get("last_sample_duration", 0.0)),
        records=records,
    )


async def generate_batch(
    jobs: Sequence[Tuple[SceneSpec, SamplerConfig]],
    vocab: Vocabulary,
    threads: int = 1,
    keep_records: bool = False,
) -> List[Generation]:
    """Sample every ``(scene, config)`` job; results keep the job order."""
    semaphore = asyncio.Semaphore(max(1, threads))

    async def run(scene: SceneSpec, cfg: SamplerConfig) -> Generation:
        async with semaphore:
            return await asyncio.to_thread(_generate, scene, cfg, vocab, keep_records)

    return list(await asyncio.gather(*(run(scene, cfg) for scene, cfg in jobs)))


def run_batch(
    jobs: Sequence[Tuple[SceneSpec, SamplerConfig]],
    vocab: Vocabulary,
    threads: int = 1,
    keep_records: bool = False,
) -> List[Generation]:
    logger.info(f"Generating {len(jobs)} images on {threads} thread(s)")
    return asyncio.run(generate_batch(jobs, vocab, threads, keep_records))


def score_generations(kind: BenchmarkKind, generations: Sequence[Generation], vocab: Vocabulary) -> MetricsReport:
    """MetricsReport of generated benchmark scenes against their own layouts."""
    if not generations:
        raise EvaluationError("cannot score an empty batch")
    images = [g.image for g in generations]
    scenes = [g.scene for g in generations]
    fields = {
        "images": len(images),
        "seconds_per_image": float(np.mean([g.seconds for g in generations])),
        "kid": score_fidelity(images, [render_reference(s, vocab) for s in scenes]),
    }
    if kind == "boxes":
        palette = {}
        for scene in scenes:
            palette.update(scene_palette(scene, vocab))
        truths = [ground_truth_boxes(s) for s in scenes]
        p, r, m50, m5095 = score_boxes(images, truths, palette)
        fields.update(precision=p, recall=r, map50=m50, map50_95=m5095)
    elif kind == "composition":
        counts, rates = score_composition(images, [composition_pairs(s) for s in scenes], vocab)
        fields.update(composition_counts=counts, composition_rates=rates)
    elif kind == "labelmap":
        truths = [ground_truth_labels(s, STREET_CLASSES) for s in scenes]
        miou, macc, aacc = score_labelmaps(images, truths, STREET_CLASSES, vocab)
        fields.update(miou=miou, macc=macc, aacc=aacc)
    else:
        raise EvaluationError(f"unknown benchmark kind: {kind}")
    return MetricsReport(**fields)


def ablation_rows(
    scenes: Sequence[SceneSpec],
    ratios: Sequence[float],
    base: SamplerConfig,
    seeds: Sequence[int],
    vocab: Vocabulary,
    threads: int = 1,
) -> List[AblationRow]:
    """mAP50 and KID per (MD ratio, arm); the arms are ``cac`` and ``concat``.

    Duplicate ratios are dropped and the rest sorted ascending.

    Raises:
        EvaluationError: if a ratio lies outside [0, 1].
    """
    unique = sorted({float(r) for r in ratios})
    if not unique:
        raise EvaluationError("ablation needs at least one MD ratio")
    if any(r < 0.0 or r > 1.0 for r in unique):
        raise EvaluationError(f"MD ratios must lie in [0, 1], got {unique}")
    rows = []
    for ratio in unique:
        for arm in ("cac", "concat"):
            jobs = [
                (scene, base.model_copy(update={"md_ratio": ratio, "mode": arm, "seed": seed}))
                for scene in scenes
                for seed in seeds
            ]
            report = score_generations("boxes", run_batch(jobs, vocab, threads), vocab)
            rows.append(AblationRow(ratio=ratio, arm=arm, map50=report.map50, kid=report.kid))
            logger.info(f"Ablation rho={ratio:.2f} {arm}: mAP50={report.map50:.4f} KID={report.kid}")
    return rows


def ablation_direction(rows: Sequence[AblationRow]) -> List[str]:
    """Violations of the expected sweep direction, as messages.

    Without CAC, localization at the largest ratio should reach that of the
    smallest; at every ratio CAC should localize at least as well as concat.
    """
    problems = []
    concat = sorted((r for r in rows if r.arm == "concat"), key=lambda r: r.ratio)
    if len(concat) >= 2 and concat[-1].map50 < concat[0].map50:
        problems.append(
            f"concat mAP50 drops from {concat[0].map50:.4f} at rho={concat[0].ratio} "
            f"to {concat[-1].map50:.4f} at rho={concat[-1].ratio}"
        )
    by_ratio = {}
    for row in rows:
        by_ratio.setdefault(row.ratio, {})[row.arm] = row.map50
    for ratio, arms in sorted(by_ratio.items()):
        if "cac" in arms and "concat" in arms and arms["cac"] < arms["concat"]:
            problems.append(f"cac mAP50 {arms['cac']:.4f} below concat {arms['concat']:.4f} at rho={ratio}")
    return problems
