#!/usr/bin/env python3
"""
Acceptance Evaluations
End-to-end properties and trend checks on a small CPU configuration:
no-op reduction, zero attention outside masks, oracle equivalence,
lambda linearity, region order invariance, benchmark trends, the MD-ratio
ablation direction, metric self-tests and determinism.
"""

import asyncio
import logging
import sys
import tempfile
import time
from pathlib import Path
from typing import Any, Callable, Dict, List

import numpy as np

# Configure logging
logging.basicConfig(level=logging.WARNING)
logger = logging.getLogger(__name__)

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from cacgen.cli import ablation_direction, ablation_rows, main, run_benchmark, score_generations
from cacgen.diffusion import SamplerConfig, plan_scene, sample
from cacgen.evaluation import attention_mass_in_mask, box_benchmark
from cacgen.services import get_denoiser, get_vocabulary
from evals import attention_evals, metrics_evals

IMAGE_SIZE = (32, 32)
DESK_STEPS = 10
TREND_SCENES = 50
TREND_SECONDS = 180.0


def _desk_config(**overrides) -> SamplerConfig:
    values = {"steps": DESK_STEPS, "latent_size": 16, "md_ratio": 0.4, "seed": 11}
    values.update(overrides)
    return SamplerConfig(**values)


class AcceptanceEvals:
    """Evaluation suite for the end-to-end acceptance criteria."""

    def __init__(self):
        self.vocab = get_vocabulary()
        self.scenes = box_benchmark(20, self.vocab, seed=21, size=IMAGE_SIZE)

    def _new_result(self, name: str) -> Dict[str, Any]:
        return {"test_name": name, "passed": False, "details": {}, "metrics": {}, "errors": []}

    def _checks(self, name: str, checks: List[Callable[[], None]]) -> Dict[str, Any]:
        """Run plain eval functions; the result passes when none raises."""
        results = self._new_result(name)
        start = time.time()
        for check in checks:
            try:
                check()
            except Exception as e:
                results["errors"].append(f"{check.__name__}: {e}")
        results["passed"] = not results["errors"]
        results["metrics"] = {"checks": len(checks), "duration_seconds": time.time() - start}
        return results

    async def eval_no_op_reduction(self) -> Dict[str, Any]:
        """Without regions and with unit lambdas, CAC sampling is baseline sampling."""
        print("\n🟰 Evaluating: No-op Reduction")
        results = self._new_result("no_op_reduction")
        start = time.time()
        try:
            mismatches = 0
            for i, scene in enumerate(self.scenes):
                bare = scene.without_regions()
                cfg = _desk_config(seed=i, steps=5)
                cac, _ = await asyncio.to_thread(sample, bare, cfg, vocab=self.vocab)
                base, _ = await asyncio.to_thread(sample, bare, cfg.model_copy(update={"mode": "baseline"}), vocab=self.vocab)
                mismatches += int(not np.array_equal(cac, base))
            duration = time.time() - start
            results["passed"] = mismatches == 0 and duration < 10.0
            results["metrics"] = {"scenes": len(self.scenes), "mismatches": mismatches, "duration_seconds": duration}
        except Exception as e:
            results["errors"].append(str(e))
        return results

    async def eval_zero_outside_mask(self) -> Dict[str, Any]:
        """Region tokens get exactly zero attention outside their masks over a full run."""
        print("\n🎯 Evaluating: Zero Attention Outside Masks")
        results = self._new_result("zero_outside_mask")
        try:
            scene = self.scenes[0]
            cfg = _desk_config(md_ratio=0.0)
            denoiser = get_denoiser(cfg.latent_size, cfg.latent_channels, cfg.model_seed, self.vocab.embed_dim)
            plan = plan_scene(scene, cfg, denoiser, self.vocab)
            _, records = await asyncio.to_thread(sample, scene, cfg, denoiser=denoiser, vocab=self.vocab)

            leaked = 0
            for record in records:
                for i, pyramid in enumerate(plan.pyramids, start=1):
                    outside = pyramid.level(record.layer).reshape(-1) == 0
                    for k in plan.prompt.region_content_columns(i):
                        leaked += int(np.count_nonzero(record.maps[:, outside, k]))
            mass = attention_mass_in_mask(records, plan.prompt, plan.pyramids)
            results["passed"] = leaked == 0 and mass == 1.0
            results["metrics"] = {"records": len(records), "nonzero_outside": leaked, "attn_mass_in": mass}
        except Exception as e:
            results["errors"].append(str(e))
        return results

    async def eval_oracle_equivalence(self) -> Dict[str, Any]:
        """Vectorized attention against the loop reference, plus lambda linearity."""
        print("\n🧮 Evaluating: Attention Oracle Equivalence")
        return self._checks(
            "oracle_equivalence",
            [
                attention_evals.test_cac_matches_reference,
                attention_evals.test_transparent_edit_is_baseline,
                attention_evals.test_lambda_linearity_and_annihilation,
            ],
        )

    async def eval_region_order_invariance(self) -> Dict[str, Any]:
        """Reversing the region order leaves the image unchanged."""
        print("\n🔀 Evaluating: Region Order Invariance")
        results = self._new_result("region_order_invariance")
        try:
            worst = 0.0
            for i, scene in enumerate(self.scenes[:10]):
                cfg = _desk_config(seed=i)
                image, _ = await asyncio.to_thread(sample, scene, cfg, vocab=self.vocab)
                order = list(reversed(range(scene.region_count)))
                shuffled, _ = await asyncio.to_thread(sample, scene.permuted(order), cfg, vocab=self.vocab)
                worst = max(worst, float(np.abs(image - shuffled).max()))
            results["passed"] = worst < 1e-9
            results["metrics"] = {"max_pixel_difference": worst}
        except Exception as e:
            results["errors"].append(str(e))
        return results

    async def eval_box_trend(self) -> Dict[str, Any]:
        """mAP50 with CAC at least doubles mAP50 of the concatenated prompt."""
        print("\n📦 Evaluating: Box Benchmark Trend")
        results = self._new_result("box_trend")
        start = time.time()
        try:
            arms = await asyncio.to_thread(
                run_benchmark, "boxes", TREND_SCENES, _desk_config(), self.vocab, IMAGE_SIZE, 5, 4
            )
            reports = {arm: score_generations("boxes", gens, self.vocab) for arm, gens in arms.items()}
            cac, concat = reports["cac"].map50, reports["concat"].map50
            duration = time.time() - start
            results["passed"] = cac > 0 and cac >= 2 * concat and duration < TREND_SECONDS
            results["metrics"] = {
                "map50_cac": cac,
                "map50_concat": concat,
                "kid_cac": reports["cac"].kid,
                "kid_concat": reports["concat"].kid,
                "duration_seconds": duration,
            }
        except Exception as e:
            results["errors"].append(str(e))
        return results

    async def eval_composition_trend(self) -> Dict[str, Any]:
        """CAC raises the correct-objects-and-colors rate by 15 points or more."""
        print("\n🎨 Evaluating: Composition Trend")
        results = self._new_result("composition_trend")
        try:
            arms = await asyncio.to_thread(
                run_benchmark, "composition", TREND_SCENES, _desk_config(), self.vocab, IMAGE_SIZE, 5, 4
            )
            rates = {
                arm: score_generations("composition", gens, self.vocab).composition_rates["correct"]
                for arm, gens in arms.items()
            }
            results["passed"] = rates["cac"] - rates["concat"] >= 0.15
            results["metrics"] = {"correct_cac": rates["cac"], "correct_concat": rates["concat"]}
        except Exception as e:
            results["errors"].append(str(e))
        return results

    async def eval_ablation_direction(self) -> Dict[str, Any]:
        """MD-ratio sweep: concat localization does not drop, CAC never trails concat."""
        print("\n📈 Evaluating: Ablation Direction")
        results = self._new_result("ablation_direction")
        try:
            rows = await asyncio.to_thread(
                ablation_rows, self.scenes[:8], [0.0, 0.5, 1.0], _desk_config(), [0], self.vocab, 4
            )
            problems = ablation_direction(rows)
            results["passed"] = not problems
            results["details"] = {"problems": problems}
            results["metrics"] = {f"map50_{r.arm}_{r.ratio:.1f}": r.map50 for r in rows}
        except Exception as e:
            results["errors"].append(str(e))
        return results

    async def eval_metric_self_tests(self) -> Dict[str, Any]:
        """Detection, segmentation, IoU and KID example tables."""
        print("\n📏 Evaluating: Metric Self-Tests")
        return self._checks(
            "metric_self_tests",
            [
                metrics_evals.test_iou_examples,
                metrics_evals.test_detection_metrics_examples,
                metrics_evals.test_detection_metrics_properties,
                metrics_evals.test_segmentation_metrics_examples,
                metrics_evals.test_kid_examples,
            ],
        )

    async def eval_determinism(self) -> Dict[str, Any]:
        """Two identical generate runs write identical artifacts."""
        print("\n🔁 Evaluating: Determinism")
        results = self._new_result("determinism")
        try:
            with tempfile.TemporaryDirectory() as tmp:
                tmp = Path(tmp)
                scene_path = tmp / "scene.json"
                scene_path.write_text(
                    '{"caption": "a photo of a room", "size": [32, 32], "regions": '
                    '[{"prompt": "red cat", "box": [0, 0, 0.5, 1]}, {"prompt": "blue car", "box": [0.5, 0, 1, 1]}]}'
                )
                for run in ("a", "b"):
                    argv = ["generate", str(scene_path), "--out", str(tmp / run), "--steps", "4",
                            "--seeds", "1,2,3", "--ppm", "--dump-attention", "--heatmap-stride", "2"]
                    code = await asyncio.to_thread(main, argv)
                    if code != 0:
                        raise RuntimeError(f"generate run {run} exited with {code}")
                names = sorted(p.relative_to(tmp / "a") for p in (tmp / "a").rglob("*") if p.is_file())
                names = [n for n in names if n.name != "manifest.json"]
                differing = [str(n) for n in names if (tmp / "a" / n).read_bytes() != (tmp / "b" / n).read_bytes()]
            results["passed"] = bool(names) and not differing
            results["details"] = {"differing_files": differing}
            results["metrics"] = {"files_compared": len(names)}
        except Exception as e:
            results["errors"].append(str(e))
        return results


def _assert_passes(method_name: str) -> None:
    result = asyncio.run(getattr(AcceptanceEvals(), method_name)())
    assert result["passed"], f"{result['test_name']} failed: {result['errors'] or result['metrics']}"


def test_no_op_reduction():
    _assert_passes("eval_no_op_reduction")


def test_zero_outside_mask():
    _assert_passes("eval_zero_outside_mask")


def test_oracle_equivalence():
    _assert_passes("eval_oracle_equivalence")


def test_region_order_invariance():
    _assert_passes("eval_region_order_invariance")


def test_box_trend():
    _assert_passes("eval_box_trend")


def test_composition_trend():
    _assert_passes("eval_composition_trend")


def test_ablation_direction():
    _assert_passes("eval_ablation_direction")


def test_metric_self_tests():
    _assert_passes("eval_metric_self_tests")


def test_determinism():
    _assert_passes("eval_determinism")


async def run_acceptance_evals():
    """Run all acceptance evaluations."""
    print("🏁 Starting Acceptance Evaluations")
    print("=" * 60)

    evaluator = AcceptanceEvals()
    eval_methods = [
        evaluator.eval_no_op_reduction,
        evaluator.eval_zero_outside_mask,
        evaluator.eval_oracle_equivalence,
        evaluator.eval_region_order_invariance,
        evaluator.eval_box_trend,
        evaluator.eval_composition_trend,
        evaluator.eval_ablation_direction,
        evaluator.eval_metric_self_tests,
        evaluator.eval_determinism,
    ]

    results = []
    for eval_method in eval_methods:
        try:
            results.append(await eval_method())
        except Exception as e:
            results.append({"test_name": eval_method.__name__, "passed": False, "errors": [str(e)]})

    print("\n" + "=" * 60)
    print("📊 Acceptance Evaluation Summary")
    print("=" * 60)

    passed = sum(1 for r in results if r["passed"])
    total = len(results)

    for result in results:
        status = "✅ PASS" if result["passed"] else "❌ FAIL"
        print(f"  {result['test_name']}: {status}")
        for key, value in result.get("metrics", {}).items():
            if isinstance(value, float):
                print(f"    {key}: {value:.4f}")
            else:
                print(f"    {key}: {value}")
        for error in result.get("errors", []):
            print(f"    Error: {error}")

    print(f"\nResults: {passed}/{total} acceptance tests passed")
    if passed == total:
        print("🎉 All acceptance evaluations passed!")
    else:
        print(f"⚠️  {total - passed} acceptance test(s) failed")

    return results


if __name__ == "__main__":
    asyncio.run(run_acceptance_evals())
