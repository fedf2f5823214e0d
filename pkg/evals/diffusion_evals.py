"""
Diffusion Evaluations

Tests the step schedule, the DDIM update, the decoder, MD blending and
end-to-end sampling on a small latent:
- schedule boundaries and the MD/CAC partition
- closed-form DDIM steps
- decoder colors and Lipschitz bound
- blend partitions, equal weights and equal branches
- determinism, no-op reductions, localization and region-order invariance
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.callbacks import AttentionStore, SamplingContext
from cacgen.diffusion import (
    Decoder,
    NoiseSchedule,
    SamplerConfig,
    StepMode,
    ToyDenoiser,
    blend_latents,
    ddim_update,
    decode,
    denoise_step,
    md_region_step,
    md_step_count,
    plan_scene,
    sample,
    schedule_control,
)
from cacgen.errors import ContractViolation
from cacgen.layout import scene_from_boxes
from cacgen.services import clear_denoisers, get_denoiser, get_vocabulary

LATENT = 16
STEPS = 10


def _denoiser():
    return ToyDenoiser(latent_h=LATENT, latent_w=LATENT, context_dim=get_vocabulary().embed_dim, seed=0)


def _config(**overrides):
    values = dict(steps=STEPS, latent_size=LATENT, md_ratio=0.4, seed=3)
    values.update(overrides)
    return SamplerConfig(**values)


def _two_box_scene():
    return scene_from_boxes(
        "a photo of a room",
        [("red cat", [0.0, 0.0, 0.5, 1.0]), ("blue car", [0.5, 0.0, 1.0, 1.0])],
        (32, 32),
        get_vocabulary(),
    )


def test_schedule_boundaries():
    """MD runs the highest-noise ceil(rho*T) steps"""
    assert md_step_count(50, 0.4) == 20, "0.4 * 50 should give 20 MD steps"
    assert schedule_control(40, 50, 0.4) is StepMode.MD, "t=40 should be MD"
    assert schedule_control(31, 50, 0.4) is StepMode.MD, "t=31 is the last MD step"
    assert schedule_control(30, 50, 0.4) is StepMode.CAC, "t=30 should be CAC"
    assert all(schedule_control(t, 50, 0.0) is StepMode.CAC for t in range(1, 51)), "rho=0 means no MD"
    assert all(schedule_control(t, 50, 1.0) is StepMode.MD for t in range(1, 51)), "rho=1 means all MD"

    for steps in (1, 7, 10, 50):
        for ratio in (0.0, 0.1, 0.25, 0.4, 0.5, 1.0):
            md = sum(schedule_control(t, steps, ratio) is StepMode.MD for t in range(1, steps + 1))
            assert md == math.ceil(round(ratio * steps, 9)), f"wrong MD count for T={steps}, rho={ratio}"

    with pytest.raises(ContractViolation):
        schedule_control(0, 50, 0.4)

    print("✅ schedule boundaries hold")


def test_ddim_closed_form():
    """Zero noise rescales z_t; a 2x2 step matches the scalar rule"""
    schedule = NoiseSchedule()
    a, a_prev = schedule.alpha_bar(10, 50), schedule.alpha_bar(9, 50)
    z = np.array([[0.3, -1.2], [2.0, 0.5]])
    out = ddim_update(z, np.zeros_like(z), a, a_prev)
    assert np.allclose(out, math.sqrt(a_prev / a) * z, atol=1e-12), "eps=0 should only rescale z_t"

    eps = np.array([[0.1, 0.2], [-0.3, 0.4]])
    out = ddim_update(z, eps, a, a_prev)
    for i in range(2):
        for j in range(2):
            x0 = (z[i, j] - math.sqrt(1 - a) * eps[i, j]) / math.sqrt(a)
            expected = math.sqrt(a_prev) * x0 + math.sqrt(1 - a_prev) * eps[i, j]
            assert abs(out[i, j] - expected) <= 1e-9, f"pixel {(i, j)} disagrees with the scalar rule"

    assert schedule.alpha_bar(0, 50) == 1.0, "step 0 is clean data"
    assert schedule.alpha_bar(50, 50) < schedule.alpha_bar(1, 50), "alpha_bar decreases with noise"

    print("✅ DDIM closed forms hold")


def test_decoder_colors():
    """Zero latent is mid-gray; channel 2c-1 decodes to color c"""
    assert np.allclose(decode(np.zeros((4, 4, 4)), 8, 8), 0.5), "zero latent should decode to mid-gray"

    color = np.array([1.0, 0.5, 0.0])
    z = np.zeros((4, 4, 4))
    z[:3] = (2 * color - 1)[:, None, None]
    image = decode(z, 8, 8)
    assert image.shape == (8, 8, 3) and np.allclose(image, color), "color code should decode to its color"

    rng = np.random.default_rng(0)
    decoder = Decoder.default(4)
    for _ in range(20):
        a, b = rng.standard_normal((2, 4, 4, 4))
        gap = np.abs(decode(a, 4, 4, decoder) - decode(b, 4, 4, decoder)).max()
        assert gap <= decoder.lipschitz * np.abs(a - b).max() + 1e-12, "decode must respect its Lipschitz bound"

    print("✅ decoder examples hold")


def test_blend_latents():
    """Partitions pick branches; equal weights average"""
    left = np.zeros((4, 4))
    left[:, :2] = 1.0
    z1 = np.full((2, 4, 4), 1.0)
    z2 = np.full((2, 4, 4), 3.0)
    blended = blend_latents([z1, z2], [left, 1.0 - left])
    assert np.array_equal(blended[:, :, :2], z1[:, :, :2]) and np.array_equal(blended[:, :, 2:], z2[:, :, 2:])

    overlap = blend_latents([z1, z2], [np.ones((4, 4)), np.ones((4, 4))])
    assert np.allclose(overlap, 2.0), "equal weights should give the arithmetic mean"

    with pytest.raises(ContractViolation):
        blend_latents([z1, z2], [left, left])

    print("✅ latent blending examples hold")


def test_sampling_is_deterministic():
    """Same scene, config and seed give bit-identical images"""
    scene, denoiser = _two_box_scene(), _denoiser()
    first, _ = sample(scene, _config(), denoiser=denoiser)
    second, _ = sample(scene, _config(), denoiser=denoiser)
    assert first.shape == (32, 32, 3), f"unexpected image shape {first.shape}"
    assert np.array_equal(first, second), "sampling must be deterministic"
    other, _ = sample(scene, _config(seed=4), denoiser=denoiser)
    assert not np.array_equal(first, other), "a different seed should change the image"

    print("✅ sampling is deterministic")


def test_baseline_equals_cac_without_regions():
    """With m=0 and unit lambdas CAC reduces to the baseline"""
    vocab = get_vocabulary()
    scene = scene_from_boxes("a photo of a garden", [], (32, 32), vocab)
    denoiser = _denoiser()
    z = np.random.default_rng(1).standard_normal(denoiser.latent_shape)
    cfg = _config()
    base = denoise_step(z, 5, scene, cfg, mode="baseline", denoiser=denoiser, vocab=vocab)
    cac = denoise_step(z, 5, scene, cfg, mode="cac", denoiser=denoiser, vocab=vocab)
    assert np.array_equal(base, cac), "baseline and cac must agree without regions"
    assert base.shape == denoiser.latent_shape

    image_base, _ = sample(scene, _config(mode="baseline"), denoiser=denoiser, vocab=vocab)
    image_cac, _ = sample(scene, _config(mode="cac"), denoiser=denoiser, vocab=vocab)
    assert np.array_equal(image_base, image_cac), "whole runs must agree without regions"

    print("✅ cac reduces to the baseline without regions")


def test_md_step_with_equal_branches():
    """Branches sharing the caption prompt reproduce a single step"""
    vocab = get_vocabulary()
    scene = scene_from_boxes("a red cat", [("a red cat", [0.0, 0.0, 0.5, 0.5])], (32, 32), vocab)
    denoiser = _denoiser()
    z = np.random.default_rng(2).standard_normal(denoiser.latent_shape)
    cfg = _config()
    single = denoise_step(z, 8, scene, cfg, mode="baseline", denoiser=denoiser, vocab=vocab)
    blended = md_region_step(z, 8, scene, cfg, denoiser=denoiser, vocab=vocab)
    assert np.allclose(blended, single, atol=1e-12), "equal branches should equal one step"

    bare = scene.without_regions()
    assert np.array_equal(
        md_region_step(z, 8, bare, cfg, denoiser=denoiser, vocab=vocab),
        denoise_step(z, 8, bare, cfg, denoiser=denoiser, vocab=vocab),
    ), "m=0 should fall through to denoise_step"

    print("✅ MD step reduces correctly")


def test_schedule_partition_in_runs():
    """Step phases follow the MD ratio; MD steps leave no records"""
    scene, denoiser = _two_box_scene(), _denoiser()
    context = SamplingContext(run_id="partition", store=AttentionStore())
    _, records = sample(scene, _config(md_ratio=0.4), denoiser=denoiser, context=context)
    phases = [entry["phase"] for entry in context.state["step_history"]]
    assert phases == ["md"] * 4 + ["cac"] * 6, f"unexpected phases {phases}"
    assert context.state["last_sample_duration"] >= 0
    assert {r.step for r in records} == set(range(1, 7)), "records come from the CAC steps only"

    _, records = sample(scene, _config(md_ratio=1.0), denoiser=denoiser)
    assert records == [], "pure MD sampling keeps no records"
    _, records = sample(scene, _config(md_ratio=0.0), denoiser=denoiser)
    assert len(records) == STEPS * len(denoiser.blocks), "pure CAC keeps one record per block and step"

    print("✅ schedule partition holds in runs")


def test_region_tokens_stay_inside_masks():
    """Region token attention outside the region mask is exactly zero"""
    vocab = get_vocabulary()
    scene, denoiser = _two_box_scene(), _denoiser()
    cfg = _config(md_ratio=0.0)
    plan = plan_scene(scene, cfg, denoiser, vocab)
    _, records = sample(scene, cfg, denoiser=denoiser, vocab=vocab)
    assert records, "cac sampling should keep records"
    for record in records:
        outside = plan.masks[record.layer].matrix == 0
        assert not (record.maps * outside[None]).any(), f"leak at {record.layer}, step {record.step}"

    print("✅ region tokens stay inside their masks")


def test_region_order_invariance():
    """Swapping the regions changes images by less than 1e-9"""
    scene, denoiser = _two_box_scene(), _denoiser()
    for mode in ("cac", "avg_outputs"):
        first, _ = sample(scene, _config(mode=mode), denoiser=denoiser)
        swapped, _ = sample(scene.permuted([1, 0]), _config(mode=mode), denoiser=denoiser)
        assert np.abs(first - swapped).max() < 1e-9, f"{mode}: region order changed the image"

    print("✅ images do not depend on region order")


def test_modes_and_variants_run():
    """Every attention mode and variant switch yields a valid image"""
    vocab = get_vocabulary()
    scene = scene_from_boxes(
        "a red cat and a blue car",
        [("red cat", [0.0, 0.0, 0.5, 1.0]), ("blue car", [0.5, 0.0, 1.0, 1.0])],
        (32, 32),
        vocab,
    )
    denoiser = _denoiser()
    variants = [
        dict(mode="baseline"),
        dict(mode="concat"),
        dict(mode="substring"),
        dict(mode="substring", substring_literal_sum=True),
        dict(mode="avg_outputs", masked_average=True),
        dict(mode="cac", renormalize=True, md_branch_cac=True),
        dict(mode="cac", mask_mode="bilinear", pad_to=24, lambda_region_specials=True),
        dict(mode="cac", eta=0.5),
    ]
    for overrides in variants:
        image, _ = sample(scene, _config(**overrides), denoiser=denoiser, vocab=vocab)
        assert image.shape == (32, 32, 3) and np.isfinite(image).all(), f"bad image for {overrides}"
        assert image.min() >= 0.0 and image.max() <= 1.0, f"image out of range for {overrides}"

    missing = scene_from_boxes("a photo of a room", [("red cat", [0, 0, 0.5, 1])], (32, 32), vocab)
    plan = plan_scene(missing, _config(mode="substring"), denoiser, vocab)
    assert plan.mode == "cac", "substring mode falls back to cac when a region is not in the caption"

    print("✅ every mode and variant samples")


def test_denoiser_service_shares_instances():
    """One denoiser per configuration until the cache is cleared"""
    first = get_denoiser(LATENT, 4, 0, get_vocabulary().embed_dim)
    assert get_denoiser(LATENT, 4, 0, get_vocabulary().embed_dim) is first, "same configuration should share"
    assert get_denoiser(LATENT, 4, 1, get_vocabulary().embed_dim) is not first

    clear_denoisers()
    rebuilt = get_denoiser(LATENT, 4, 0, get_vocabulary().embed_dim)
    assert rebuilt is not first, "clearing should drop cached denoisers"

    cfg = _config()
    scene = _two_box_scene()
    image_a, _ = sample(scene, cfg, denoiser=first, vocab=get_vocabulary())
    image_b, _ = sample(scene, cfg, denoiser=rebuilt, vocab=get_vocabulary())
    assert np.array_equal(image_a, image_b), "rebuilt denoiser should be identical"

    print("✅ denoiser service shares instances")


def run_all_diffusion_tests():
    """Run all diffusion tests"""
    print("Running Diffusion Evaluations...")
    print("=" * 50)

    test_schedule_boundaries()
    test_ddim_closed_form()
    test_decoder_colors()
    test_blend_latents()
    test_sampling_is_deterministic()
    test_baseline_equals_cac_without_regions()
    test_md_step_with_equal_branches()
    test_schedule_partition_in_runs()
    test_region_tokens_stay_inside_masks()
    test_region_order_invariance()
    test_modes_and_variants_run()
    test_denoiser_service_shares_instances()

    print("=" * 50)
    print("✅ All diffusion evaluations passed!")


if __name__ == "__main__":
    run_all_diffusion_tests()
