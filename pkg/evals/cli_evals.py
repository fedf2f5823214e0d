"""
Command-Line Evaluations

Tests the cacgen commands end to end on small scenes:
- generate writes byte-identical outputs for identical inputs
- replaying a manifest regenerates the same images
- errors become exit code 1
- eval scores ideal batches perfectly
- ablate writes its table and plot
- benchmark scores eight scenes including KID
- leaked attention, a wrong ablation direction and invalid reports exit with code 1
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from contextlib import redirect_stdout
from pathlib import Path
from unittest import mock

import pytest
from pydantic import ValidationError

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.cli import (
    AblationRow,
    ImageEntry,
    RunManifest,
    evaluate_run,
    load_manifest,
    main,
    read_image,
    run_benchmark,
    sampler_config,
    score_generations,
    write_png,
)
from cacgen.cli.batch import ablation_direction
from cacgen.cli.commands import parse_floats, parse_ints
from cacgen.config import get_settings, get_settings_summary
from cacgen.diffusion import SamplerConfig
from cacgen.errors import ContractViolation
from cacgen.evaluation import (
    MetricsReport,
    box_benchmark,
    composition_benchmark,
    composition_pairs,
    ground_truth_boxes,
    render_reference,
)
from cacgen.services import get_vocabulary

SCENE = {
    "caption": "a photo of a room",
    "size": [32, 32],
    "regions": [
        {"prompt": "red cat", "box": [0.0, 0.0, 0.5, 1.0]},
        {"prompt": "blue car", "box": [0.5, 0.0, 1.0, 1.0]},
    ],
    "lambda_region": 8,
}


def _write_scene(directory: Path) -> Path:
    path = directory / "two_boxes.json"
    path.write_text(json.dumps(SCENE))
    return path


def _generate(scene: Path, out: Path, *extra: str) -> int:
    return main(["generate", str(scene), "--out", str(out), "--steps", "3", "--seeds", "1,2", *extra])


def test_generate_is_byte_identical():
    """Two identical runs write identical files"""
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        scene = _write_scene(tmp)
        flags = ("--ppm", "--dump-attention", "--heatmap-stride", "1")
        assert _generate(scene, tmp / "a", *flags) == 0, "generate should succeed"
        assert _generate(scene, tmp / "b", *flags) == 0

        manifest = load_manifest(tmp / "a")
        assert [e.seed for e in manifest.images] == [1, 2]
        assert manifest.config["lambda_region"] == 8.0, "the scene's lambda should be used"
        assert manifest.files, "the run should list its files"
        for name in manifest.files:
            assert (tmp / "a" / name).read_bytes() == (tmp / "b" / name).read_bytes(), f"{name} differs"
        assert abs(manifest.images[0].attn_mass_in - 1.0) < 1e-9, "CAC keeps region attention inside the masks"
        assert read_image(tmp / "a" / "seed_0001.png").shape == (32, 32, 3)
        assert (tmp / "a" / "seed_0001.png").read_bytes() != (tmp / "a" / "seed_0002.png").read_bytes()

    print("✅ generate is byte-identical")


def test_replay_regenerates_images():
    """A manifest replay writes the same images"""
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        scene = _write_scene(tmp)
        assert _generate(scene, tmp / "first") == 0
        assert main(["generate", "--replay", str(tmp / "first"), "--out", str(tmp / "again")]) == 0
        for name in ("seed_0001.png", "seed_0002.png"):
            assert (tmp / "first" / name).read_bytes() == (tmp / "again" / name).read_bytes(), f"{name} differs"

    print("✅ replay regenerates identical images")


def test_errors_become_exit_codes():
    """Missing files and bad flags exit with code 1"""
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        out = io.StringIO()
        with redirect_stdout(out):
            code = main(["generate", str(tmp / "missing.json"), "--steps", "2"])
        assert code == 1, "a missing scene should fail"
        assert "❌" in out.getvalue(), "failure should be reported on a ❌ line"
        assert main(["eval", str(tmp), str(tmp / "gt.json")]) == 1, "eval without a manifest should fail"
        scene = _write_scene(tmp)
        assert main(["generate", str(scene), "--steps", "2", "--md-ratio", "1.5", "--out", str(tmp / "x")]) == 1

    print("✅ errors become exit code 1")


def test_sampler_config_fallbacks():
    """Flags win over the scene, the scene over the settings"""
    settings = get_settings()
    vocab = get_vocabulary()
    scene = box_benchmark(1, vocab)[0]
    empty = argparse.Namespace()
    cfg = sampler_config(empty, scene, settings)
    assert cfg.lambda_region == scene.lambda_region and cfg.steps == settings.steps
    assert cfg.mode == "cac" and cfg.latent_size == settings.latent_size

    flags = argparse.Namespace(steps=7, lambda_region=3.0, mode="concat", renormalize=True)
    cfg = sampler_config(flags, scene, settings)
    assert (cfg.steps, cfg.lambda_region, cfg.mode, cfg.renormalize) == (7, 3.0, "concat", True)

    with pytest.raises(ContractViolation):
        sampler_config(argparse.Namespace(md_ratio=2.0), scene, settings)
    assert parse_ints("1, 2,3") == [1, 2, 3] and parse_floats("0,0.5") == [0.0, 0.5]
    with pytest.raises(ContractViolation):
        parse_ints("1,x")

    summary = get_settings_summary()
    assert summary["steps"] == settings.steps and summary["threads"] == settings.threads
    assert summary["vocabulary_source"] == (str(settings.vocabulary_path) if settings.vocabulary_path else "bundled")

    print("✅ sampler config fallbacks hold")


def _ideal_run(run_dir: Path, scenes) -> RunManifest:
    vocab = get_vocabulary()
    run_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, scene in enumerate(scenes):
        png = write_png(render_reference(scene, vocab), run_dir / f"{scene.name}.png")
        entries.append(ImageEntry(seed=i, png=png.name, seconds=0.5))
    manifest = RunManifest(
        scene="synthetic",
        scene_name="synthetic",
        config=SamplerConfig().model_dump(mode="json"),
        seeds=list(range(len(scenes))),
        output_dir=str(run_dir),
        images=entries,
    )
    manifest.save(run_dir)
    return manifest


def test_eval_scores_ideal_runs():
    """Reference renderings score perfectly through eval"""
    vocab = get_vocabulary()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        boxes = box_benchmark(3, vocab, seed=8)
        _ideal_run(tmp / "boxes", boxes)
        truth = {
            "kind": "boxes",
            "scenes": {
                s.name: {"boxes": [{"concept": d.concept, "box": list(d.box)} for d in ground_truth_boxes(s)]}
                for s in boxes
            },
        }
        gt = tmp / "boxes_gt.json"
        gt.write_text(json.dumps(truth))
        report = evaluate_run(tmp / "boxes", gt, vocab)
        assert (report.precision, report.recall, report.map50, report.map50_95) == (1.0, 1.0, 1.0, 1.0)
        assert report.kid is None and report.seconds_per_image == 0.5
        with open(tmp / "boxes" / "per_image.csv") as f:
            rows = list(csv.DictReader(f))
        assert [r["image"] for r in rows] == [s.name for s in boxes]

        assert main(["eval", str(tmp / "boxes"), str(gt)]) == 0
        assert json.loads((tmp / "boxes" / "metrics.json").read_text())["map50"] == 1.0

        pairs = composition_benchmark(2, vocab, seed=8)
        _ideal_run(tmp / "comp", pairs)
        gt = tmp / "comp_gt.json"
        gt.write_text(
            json.dumps({"kind": "composition", "scenes": {s.name: {"pairs": composition_pairs(s)} for s in pairs}})
        )
        report = evaluate_run(tmp / "comp", gt, vocab)
        assert report.composition_counts == {"missing_object": 0, "wrong_color": 0, "correct": 2}

    print("✅ eval scores ideal runs perfectly")


def test_ablate_writes_table_and_plot():
    """Ablation rows per ratio and arm with KID, the SVG, and an exit code that follows the direction check"""
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "ablation"
        code = main(["ablate", "--count", "8", "--ratios", "1,0,0", "--steps", "2", "--out", str(out)])
        with open(out / "ablation.csv") as f:
            rows = list(csv.DictReader(f))
        assert [(r["ratio"], r["arm"]) for r in rows] == [
            ("0.0000", "cac"), ("0.0000", "concat"), ("1.0000", "cac"), ("1.0000", "concat")
        ], f"unexpected rows {rows}"
        assert all(0.0 <= float(r["map50"]) <= 1.0 for r in rows)
        assert all(r["kid"] and math.isfinite(float(r["kid"])) for r in rows), "8 scenes should report KID"
        svg = (out / "ablation.svg").read_text()
        assert svg.lstrip().startswith("<?xml") and "<svg" in svg, "plot should be an SVG"

        written = [AblationRow(float(r["ratio"]), r["arm"], float(r["map50"]), float(r["kid"])) for r in rows]
        expected = 1 if ablation_direction(written) else 0
        assert code == expected, f"ablate exited {code}, direction problems say {expected}"

    rows = [
        AblationRow(0.0, "cac", 0.9, None),
        AblationRow(0.0, "concat", 0.2, None),
        AblationRow(1.0, "cac", 0.5, None),
        AblationRow(1.0, "concat", 0.6, None),
    ]
    problems = ablation_direction(rows)
    assert len(problems) == 1 and "below concat" in problems[0], f"unexpected problems {problems}"

    print("✅ ablate writes its outputs")


def test_benchmark_scores_eight_scenes():
    """Negative KID estimates are valid reports; the benchmark command finishes"""
    vocab = get_vocabulary()
    cfg = SamplerConfig(steps=4, latent_size=16, md_ratio=0.4, seed=2)
    arms = run_benchmark("boxes", 8, cfg, vocab, (32, 32), seed=3, threads=2)
    for arm, generations in arms.items():
        assert len(generations) == 8
        report = score_generations("boxes", generations, vocab)
        assert report.kid is not None and math.isfinite(report.kid), f"{arm} should report a finite KID"

    assert MetricsReport(images=8, kid=-0.0873).kid == -0.0873, "unbiased KID may be negative"
    with pytest.raises(ValidationError):
        MetricsReport(images=8, kid=float("nan"))

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "bench"
        code = main(["benchmark", "--kind", "boxes", "--count", "8", "--steps", "2", "--out", str(out)])
        assert code == 0, "benchmark should succeed"
        payload = json.loads((out / "benchmark_boxes.json").read_text())
        assert set(payload["arms"]) == {"cac", "concat"} and payload["count"] == 8

    print("✅ benchmark scores eight scenes")


def test_invariant_breaks_exit_nonzero():
    """Leaked attention, a wrong ablation direction and invalid reports exit with code 1"""
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        scene = _write_scene(tmp)

        out = io.StringIO()
        with mock.patch("cacgen.cli.commands.attention_mass_in_mask", return_value=0.97), redirect_stdout(out):
            code = _generate(scene, tmp / "leak")
        assert code == 1 and "leaked" in out.getvalue(), "a mass below 1 should fail generate"
        assert (tmp / "leak" / "manifest.json").exists(), "outputs are still written"

        problem = ["cac mAP50 0.1000 below concat 0.2000 at rho=0.0"]
        out = io.StringIO()
        with mock.patch("cacgen.cli.commands.ablation_direction", return_value=problem), redirect_stdout(out):
            code = main(["ablate", "--count", "1", "--ratios", "0", "--steps", "2", "--no-plot",
                         "--out", str(tmp / "ablation")])
        assert code == 1 and "below concat" in out.getvalue(), "direction problems should fail ablate"
        assert (tmp / "ablation" / "ablation.csv").exists()

        def invalid_report(*_):
            return MetricsReport(images=-1)

        out = io.StringIO()
        with mock.patch("cacgen.cli.commands.score_generations", side_effect=invalid_report), redirect_stdout(out):
            code = main(["benchmark", "--count", "1", "--steps", "2", "--out", str(tmp / "bench")])
        assert code == 1 and "❌ benchmark failed" in out.getvalue(), "schema errors should become a ❌ line"

    print("✅ invariant breaks exit with code 1")


def run_all_cli_tests():
    """Run all command-line tests"""
    print("Running Command-Line Evaluations...")
    print("=" * 50)

    test_generate_is_byte_identical()
    test_replay_regenerates_images()
    test_errors_become_exit_codes()
    test_sampler_config_fallbacks()
    test_eval_scores_ideal_runs()
    test_ablate_writes_table_and_plot()
    test_benchmark_scores_eight_scenes()
    test_invariant_breaks_exit_nonzero()

    print("=" * 50)
    print("✅ All command-line evaluations passed!")


if __name__ == "__main__":
    run_all_cli_tests()
