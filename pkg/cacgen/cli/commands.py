"""
Command implementations.

Every command returns a process exit code. Library errors, invalid reports,
I/O failures and broken run checks are logged, reported on one ``❌`` line
and turned into exit code 1.
"""

import csv
import json
import logging
from argparse import Namespace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from ..attention import write_attention_dump, write_heatmaps
from ..config import CacgenSettings, get_settings
from ..diffusion import SamplerConfig, plan_scene
from ..errors import CacgenError, ContractViolation, EvaluationError, InvariantViolation
from ..evaluation import (
    Detection,
    GroundTruthFile,
    MetricsReport,
    attention_mass_in_mask,
    box_benchmark,
    composition_benchmark,
    composition_categorize,
    composition_palette,
    label_palette,
    labelmap_benchmark,
    load_ground_truth,
    score_boxes,
    score_composition,
    score_fidelity,
    score_labelmaps,
    segment_concepts,
    segmentation_metrics,
)
from ..layout import SceneSpec, parse_scene
from ..services import get_denoiser, get_vocabulary, get_vocabulary_config
from ..text import Vocabulary
from .batch import Generation, ablation_direction, ablation_rows, run_batch, score_generations
from .imageio import read_image, read_label_png, write_png, write_ppm
from .manifest import ImageEntry, RunManifest, load_manifest
from .plots import plot_ablation

logger = logging.getLogger(__name__)

BENCHMARKS: Dict[str, Callable[..., List[SceneSpec]]] = {
    "boxes": box_benchmark,
    "composition": composition_benchmark,
    "labelmap": labelmap_benchmark,
}


def _validated(body: Callable[[Namespace], int], args: Namespace) -> int:
    try:
        return body(args)
    except ValidationError as e:
        fields = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise EvaluationError(f"invalid {e.title}: {fields}") from None


def _guarded(name: str, body: Callable[[Namespace], int], args: Namespace) -> int:
    try:
        return _validated(body, args)
    except (CacgenError, OSError) as e:
        logger.error(f"{name} failed: {e}")
        print(f"❌ {name} failed: {e}")
        return 1


def parse_ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ContractViolation(f"expected comma-separated integers, got '{text}'") from None


def parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ContractViolation(f"expected comma-separated numbers, got '{text}'") from None


def _pick(value, *fallbacks):
    for candidate in (value, *fallbacks):
        if candidate is not None:
            return candidate
    return None


def sampler_config(args: Namespace, scene: Optional[SceneSpec], settings: CacgenSettings) -> SamplerConfig:
    """SamplerConfig from flags; unset flags fall back to the scene, then the settings."""
    try:
        return SamplerConfig(
            steps=_pick(getattr(args, "steps", None), settings.steps),
            md_ratio=_pick(getattr(args, "md_ratio", None), settings.md_ratio),
            seed=_pick(getattr(args, "seed", None), settings.seed),
            mode=_pick(getattr(args, "mode", None), "cac"),
            eta=_pick(getattr(args, "eta", None), 0.0),
            lambda_caption=_pick(
                getattr(args, "lambda_caption", None), scene.lambda_caption if scene else None, settings.lambda_caption
            ),
            lambda_region=_pick(
                getattr(args, "lambda_region", None), scene.lambda_region if scene else None, settings.lambda_region
            ),
            lambda_region_specials=bool(getattr(args, "lambda_region_specials", False)),
            pad_to=getattr(args, "pad_to", None),
            mask_mode=_pick(getattr(args, "mask_mode", None), "nearest"),
            renormalize=bool(getattr(args, "renormalize", False)),
            substring_literal_sum=bool(getattr(args, "substring_literal_sum", False)),
            md_branch_cac=bool(getattr(args, "md_branch_cac", False)),
            masked_average=bool(getattr(args, "masked_average", False)),
            latent_size=settings.latent_size,
            latent_channels=settings.latent_channels,
            model_seed=settings.model_seed,
        )
    except ValidationError as e:
        fields = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ContractViolation(f"invalid sampler settings: {fields}") from None


def _threads(args: Namespace, settings: CacgenSettings) -> int:
    return max(1, _pick(getattr(args, "threads", None), settings.threads))


# ---------------------------------------------------------------- generate


def _heatmap_columns(scene: SceneSpec, cfg: SamplerConfig, plan) -> List[int]:
    if cfg.mode in ("cac", "concat") and scene.regions:
        return [k for i in range(1, plan.prompt.region_count + 1) for k in plan.prompt.region_content_columns(i)]
    return list(range(1, scene.caption.length - 1))


def _mass_in_mask(generation: Generation, plan) -> Optional[float]:
    if generation.cfg.mode != "cac" or not generation.scene.regions or not generation.records:
        return None
    try:
        return attention_mass_in_mask(generation.records, plan.prompt, plan.pyramids)
    except EvaluationError as e:
        logger.info(f"No attention mass diagnostic: {e}")
        return None


def _write_generation(
    generation: Generation, plan, run_dir: Path, manifest: RunManifest
) -> ImageEntry:
    seed = generation.cfg.seed
    stem = f"seed_{seed:04d}"
    entry = ImageEntry(
        seed=seed,
        png=write_png(generation.image, run_dir / f"{stem}.png").name,
        seconds=generation.seconds,
        attn_mass_in=_mass_in_mask(generation, plan),
    )
    if manifest.write_ppm:
        entry.ppm = write_ppm(generation.image, run_dir / f"{stem}.ppm").name
    if manifest.dump_attention:
        write_attention_dump(generation.records, run_dir / f"{stem}_attention.bin")
        entry.attention = f"{stem}_attention.bin"
    if manifest.heatmap_stride is not None:
        columns = _heatmap_columns(generation.scene, generation.cfg, plan)
        scene = generation.scene
        paths = write_heatmaps(
            generation.records, columns, run_dir / f"{stem}_heatmaps", (scene.image_h, scene.image_w),
            manifest.heatmap_stride,
        )
        entry.heatmaps = [str(p.relative_to(run_dir)) for p in paths]
    return entry


def _generate(args: Namespace) -> int:
    settings = get_settings()
    vocab = get_vocabulary()
    if args.replay:
        previous = load_manifest(args.replay)
        scene = parse_scene(previous.scene, vocab)
        cfg = previous.sampler_config()
        manifest = previous.model_copy(
            update={"images": [], "output_dir": str(args.out or previous.output_dir)}
        )
        print(f"🔁 Replaying {args.replay}: {len(manifest.seeds)} seed(s)")
    else:
        if not args.scene:
            raise ContractViolation("generate needs a scene file or --replay")
        scene = parse_scene(args.scene, vocab)
        cfg = sampler_config(args, scene, settings)
        seeds = parse_ints(args.seeds) if args.seeds else [cfg.seed]
        manifest = RunManifest(
            scene=str(Path(args.scene).resolve()),
            scene_name=scene.name,
            config=cfg.model_dump(mode="json"),
            seeds=seeds,
            output_dir=str(args.out or settings.output_dir / scene.name),
            write_ppm=args.ppm,
            dump_attention=args.dump_attention,
            heatmap_stride=args.heatmap_stride,
            vocabulary=get_vocabulary_config(),
        )

    if not manifest.seeds:
        raise ContractViolation("no seeds to generate")
    run_dir = Path(manifest.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    print(f"🎨 Generating '{scene.name}' ({cfg.mode}, T={cfg.steps}, rho={cfg.md_ratio}) into {run_dir}")

    keep = manifest.dump_attention or manifest.heatmap_stride is not None or (cfg.mode == "cac" and scene.regions)
    jobs = [(scene, cfg.model_copy(update={"seed": seed})) for seed in manifest.seeds]
    generations = run_batch(jobs, vocab, _threads(args, settings), keep_records=bool(keep))

    denoiser = get_denoiser(cfg.latent_size, cfg.latent_channels, cfg.model_seed, vocab.embed_dim)
    plan = plan_scene(scene, cfg, denoiser, vocab)
    for generation in generations:
        entry = _write_generation(generation, plan, run_dir, manifest)
        manifest.images.append(entry)
        print(f"   ✅ seed {entry.seed}: {entry.png} ({entry.seconds:.2f}s)")
    manifest.save(run_dir)
    print(f"✅ Wrote {len(manifest.files)} file(s) to {run_dir}")
    leaks = [e.seed for e in manifest.images if e.attn_mass_in is not None and e.attn_mass_in != 1.0]
    if leaks:
        raise InvariantViolation(f"region attention leaked outside its mask for seed(s) {leaks}")
    return 0


def cmd_generate(args: Namespace) -> int:
    """Generate one image per seed from a scene file (or replay a manifest)."""
    return _guarded("generate", _generate, args)


# ---------------------------------------------------------------- eval


def _truth_for(truth: GroundTruthFile, key: str, scene_name: str):
    if key in truth.scenes:
        return truth.scenes[key]
    if scene_name in truth.scenes:
        return truth.scenes[scene_name]
    raise EvaluationError(f"ground truth has no entry for image '{key}' or scene '{scene_name}'")


def _per_image_rows(kind: str, keys, images, entries, truths, vocab: Vocabulary, extra) -> List[Dict]:
    rows = []
    for i, (key, image, entry) in enumerate(zip(keys, images, entries)):
        row = {"image": key, "seed": entry.seed, "seconds": f"{entry.seconds:.4f}"}
        if kind == "boxes":
            p, r, m50, _ = score_boxes([image], [truths[i]], extra)
            row.update(precision=f"{p:.6f}", recall=f"{r:.6f}", map50=f"{m50:.6f}")
        elif kind == "composition":
            row["category"] = composition_categorize(image, truths[i], composition_palette(truths[i], vocab))
        else:
            palette = {c: tuple(vocab.concept_palette[c]) for c in extra}
            miou, _, aacc = segmentation_metrics(segment_concepts(image, palette), truths[i])
            row.update(miou=f"{miou:.6f}", aacc=f"{aacc:.6f}")
        rows.append(row)
    return rows


def evaluate_run(run_dir: Path, gt_path: Path, vocab: Vocabulary) -> MetricsReport:
    """Score a generated run against a ground-truth file; writes per-image rows."""
    manifest = load_manifest(run_dir)
    if not manifest.images:
        raise EvaluationError(f"run {run_dir} has no images")
    truth = load_ground_truth(gt_path)
    entries = manifest.images
    images = [read_image(run_dir / e.png) for e in entries]
    keys = [e.key for e in entries]
    scene_truths = [_truth_for(truth, key, manifest.scene_name) for key in keys]

    references = [read_image(gt_path.parent / p) for p in truth.reference_images]
    masses = [e.attn_mass_in for e in entries if e.attn_mass_in is not None]
    fields = {
        "images": len(images),
        "seconds_per_image": float(np.mean([e.seconds for e in entries])),
        "kid": score_fidelity(images, references),
        "attn_mass_in": float(np.mean(masses)) if masses else None,
    }

    if truth.kind == "boxes":
        truths = [
            [Detection(box=tuple(b.box), concept=b.concept, image=i) for b in t.boxes]
            for i, t in enumerate(scene_truths)
        ]
        extra = label_palette(sorted({d.concept for ts in truths for d in ts}), vocab)
        p, r, m50, m5095 = score_boxes(images, truths, extra)
        fields.update(precision=p, recall=r, map50=m50, map50_95=m5095)
    elif truth.kind == "composition":
        truths = [[tuple(pair) for pair in t.pairs] for t in scene_truths]
        extra = None
        counts, rates = score_composition(images, truths, vocab)
        fields.update(composition_counts=counts, composition_rates=rates)
    else:
        if not truth.classes:
            raise EvaluationError(f"{gt_path}: label-map ground truth needs 'classes'")
        truths = []
        for t, image in zip(scene_truths, images):
            if t.labelmap is None:
                raise EvaluationError(f"{gt_path}: scene without 'labelmap'")
            labels = read_label_png(gt_path.parent / t.labelmap)
            if labels.shape != image.shape[:2]:
                raise EvaluationError(f"label map {t.labelmap} is {labels.shape}, image is {image.shape[:2]}")
            truths.append(labels)
        extra = list(truth.classes)
        fields.update(zip(("miou", "macc", "aacc"), score_labelmaps(images, truths, extra, vocab)))

    rows = _per_image_rows(truth.kind, keys, images, entries, truths, vocab, extra)
    with open(run_dir / "per_image.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return MetricsReport(**fields)


def _eval(args: Namespace) -> int:
    run_dir = Path(args.run_dir)
    report = evaluate_run(run_dir, Path(args.gt), get_vocabulary())
    path = report.save(Path(args.out) if args.out else run_dir / "metrics.json")
    print(f"📊 {report.images} image(s): P={report.precision:.4f} R={report.recall:.4f} "
          f"mAP50={report.map50:.4f} mAP50-95={report.map50_95:.4f}")
    if report.miou is not None:
        print(f"   mIoU={report.miou:.4f} mACC={report.macc:.4f} aACC={report.aacc:.4f}")
    if report.composition_rates is not None:
        print(f"   composition rates: {report.composition_rates}")
    if report.kid is not None:
        print(f"   KID={report.kid:.6f}")
    print(f"✅ Metrics written to {path}")
    return 0


def cmd_eval(args: Namespace) -> int:
    """Score a run directory against a ground-truth file."""
    return _guarded("eval", _eval, args)


# ---------------------------------------------------------------- ablate


def _ablate(args: Namespace) -> int:
    settings = get_settings()
    vocab = get_vocabulary()
    size = (settings.image_size, settings.image_size)
    if args.scene:
        scenes = [parse_scene(args.scene, vocab)]
    else:
        scenes = box_benchmark(args.count, vocab, _pick(args.seed, settings.seed), size)
    cfg = sampler_config(args, scenes[0] if args.scene else None, settings)
    seeds = parse_ints(args.seeds) if args.seeds else [cfg.seed]
    ratios = parse_floats(args.ratios)

    print(f"🧪 Ablating {len(scenes)} scene(s) x {len(seeds)} seed(s) over MD ratios {sorted(set(ratios))}")
    rows = ablation_rows(scenes, ratios, cfg, seeds, vocab, _threads(args, settings))

    out_dir = Path(args.out or settings.output_dir / "ablation")
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "ablation.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["ratio", "arm", "map50", "kid"])
        for row in rows:
            writer.writerow([f"{row.ratio:.4f}", row.arm, f"{row.map50:.6f}", "" if row.kid is None else f"{row.kid:.6f}"])
    print(f"✅ Wrote {len(rows)} rows to {csv_path}")
    if not args.no_plot:
        plot_ablation(rows, out_dir / "ablation.svg")

    problems = ablation_direction(rows)
    for problem in problems:
        logger.warning(f"Ablation direction: {problem}")
        print(f"⚠️  {problem}")
    if problems:
        raise InvariantViolation(f"ablation direction violated in {len(problems)} place(s)")
    return 0


def cmd_ablate(args: Namespace) -> int:
    """MD-ratio sweep with and without CAC."""
    return _guarded("ablate", _ablate, args)


# ---------------------------------------------------------------- benchmark


def _headline(kind: str, report: MetricsReport) -> str:
    kid = "n/a" if report.kid is None else f"{report.kid:.6f}"
    if kind == "boxes":
        return f"mAP50={report.map50:.4f} mAP50-95={report.map50_95:.4f} KID={kid}"
    if kind == "composition":
        return f"correct={report.composition_rates['correct']:.3f} KID={kid}"
    return f"mIoU={report.miou:.4f} aACC={report.aacc:.4f} KID={kid}"


def run_benchmark(
    kind: str, count: int, cfg: SamplerConfig, vocab: Vocabulary, size, seed: int = 0, threads: int = 1
) -> Dict[str, Dict[str, Generation]]:
    """Generate both arms of a synthetic benchmark; scene ``i`` uses seed ``cfg.seed + i``."""
    if kind not in BENCHMARKS:
        raise EvaluationError(f"unknown benchmark kind: {kind}")
    scenes = BENCHMARKS[kind](count, vocab, seed, size)
    arms = {}
    for arm in ("cac", "concat"):
        jobs = [(s, cfg.model_copy(update={"mode": arm, "seed": cfg.seed + i})) for i, s in enumerate(scenes)]
        arms[arm] = run_batch(jobs, vocab, threads)
    return arms


def _benchmark(args: Namespace) -> int:
    settings = get_settings()
    vocab = get_vocabulary()
    cfg = sampler_config(args, None, settings)
    size = (settings.image_size, settings.image_size)
    seed = _pick(args.seed, settings.seed)
    print(f"🏁 Benchmark '{args.kind}': {args.count} scene(s), T={cfg.steps}, rho={cfg.md_ratio}")
    arms = run_benchmark(args.kind, args.count, cfg, vocab, size, seed, _threads(args, settings))

    out_dir = Path(args.out or settings.output_dir / f"benchmark_{args.kind}")
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = {}
    for arm, generations in arms.items():
        reports[arm] = score_generations(args.kind, generations, vocab)
        if args.save_images:
            (out_dir / arm).mkdir(exist_ok=True)
            for g in generations:
                write_png(g.image, out_dir / arm / f"{g.scene.name}.png")
        print(f"   {arm:>6}: {_headline(args.kind, reports[arm])}")

    path = out_dir / f"benchmark_{args.kind}.json"
    payload = {
        "kind": args.kind,
        "count": args.count,
        "seed": seed,
        "config": cfg.model_dump(mode="json"),
        "arms": {arm: r.model_dump(mode="json") for arm, r in reports.items()},
    }
    path.write_text(json.dumps(payload, indent=2))
    print(f"✅ Benchmark report written to {path}")
    return 0


def cmd_benchmark(args: Namespace) -> int:
    """Run a synthetic benchmark with and without CAC."""
    return _guarded("benchmark", _benchmark, args)
