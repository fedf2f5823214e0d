"""
Sampler configuration.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

AttentionMode = Literal["baseline", "cac", "substring", "avg_outputs", "concat"]
MaskMode = Literal["nearest", "bilinear"]


class SamplerConfig(BaseModel):
    """Hyperparameters of one sampling run.

    ``mode`` selects the cross-attention variant used outside MD steps:

    - ``baseline``: caption only (Eq. 1)
    - ``cac``: concatenated prompt with masks and lambda weights
    - ``substring``: caption columns masked where regions occur verbatim
    - ``avg_outputs``: mean of per-prompt outputs
    - ``concat``: concatenated prompt without masks or weights
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    steps: int = Field(default=50, ge=1)
    md_ratio: float = Field(default=0.4, ge=0.0, le=1.0)
    seed: int = 0
    mode: AttentionMode = "cac"

    beta_start: float = Field(default=0.00085, gt=0.0, lt=1.0)
    beta_end: float = Field(default=0.012, gt=0.0, lt=1.0)
    train_steps: int = Field(default=1000, ge=1)
    eta: float = Field(default=0.0, ge=0.0, le=1.0)

    lambda_caption: float = Field(default=1.0, gt=0.0)
    lambda_region: float = Field(default=10.0, gt=0.0)
    lambda_region_specials: bool = False
    pad_to: Optional[int] = Field(default=None, ge=1)

    mask_mode: MaskMode = "nearest"
    renormalize: bool = False
    substring_literal_sum: bool = False
    md_branch_cac: bool = False
    masked_average: bool = False

    latent_size: int = Field(default=32, ge=4)
    latent_channels: int = Field(default=4, ge=3)
    model_seed: int = 0

    @model_validator(mode="after")
    def _check_schedule(self):
        if self.beta_end < self.beta_start:
            raise ValueError("beta_end must be >= beta_start")
        if self.steps > self.train_steps:
            raise ValueError(f"steps ({self.steps}) cannot exceed train_steps ({self.train_steps})")
        if self.latent_size % 4:
            raise ValueError(f"latent_size must be divisible by 4, got {self.latent_size}")
        return self
