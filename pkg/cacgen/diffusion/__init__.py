"""
Diffusion package: sampler configuration, noise schedule, the concept-painter
denoiser, the decoder and the CAC/MD sampler.
"""

from .config import AttentionMode, MaskMode, SamplerConfig
from .decoder import Decoder, LatentGrid, decode
from .denoiser import BLOCK_LAYOUT, Attend, DenoiserBlock, ToyDenoiser
from .sampler import (
    RegionBranch,
    ScenePlan,
    attention_hook,
    blend_latents,
    denoise_step,
    initial_latent,
    md_region_step,
    plan_scene,
    sample,
)
from .schedule import (
    NoiseSchedule,
    StepMode,
    ddim_update,
    md_step_count,
    predicted_noise,
    predicted_x0,
    schedule_control,
)

__all__ = [
    "AttentionMode",
    "MaskMode",
    "SamplerConfig",
    "Decoder",
    "LatentGrid",
    "decode",
    "BLOCK_LAYOUT",
    "Attend",
    "DenoiserBlock",
    "ToyDenoiser",
    "RegionBranch",
    "ScenePlan",
    "attention_hook",
    "blend_latents",
    "denoise_step",
    "initial_latent",
    "md_region_step",
    "plan_scene",
    "sample",
    "NoiseSchedule",
    "StepMode",
    "ddim_update",
    "md_step_count",
    "predicted_noise",
    "predicted_x0",
    "schedule_control",
]
