"""
Noise schedule, MD/CAC step scheduling and the DDIM update.

Sampling step ``t`` runs from ``T`` down to 1 and maps to training timestep
``(t - 1) * stride + 1`` with ``stride = train_steps // T``.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from ..errors import require

logger = logging.getLogger(__name__)


class StepMode(str, Enum):
    MD = "md"
    CAC = "cac"


@dataclass(frozen=True)
class NoiseSchedule:
    """Linear beta schedule and its cumulative alpha products."""

    train_steps: int = 1000
    beta_start: float = 0.00085
    beta_end: float = 0.012

    def __post_init__(self):
        require(self.train_steps >= 1, "train_steps must be >= 1")
        betas = np.linspace(self.beta_start, self.beta_end, self.train_steps, dtype=np.float64)
        object.__setattr__(self, "alpha_bars", np.cumprod(1.0 - betas))

    def timestep(self, t: int, steps: int) -> int:
        require(1 <= steps <= self.train_steps, f"steps must be in [1, {self.train_steps}]")
        require(1 <= t <= steps, f"step {t} outside [1, {steps}]")
        return (t - 1) * (self.train_steps // steps) + 1

    def alpha_bar(self, t: int, steps: int) -> float:
        """Cumulative alpha at sampling step ``t``; step 0 means clean data (1.0)."""
        if t == 0:
            return 1.0
        return float(self.alpha_bars[self.timestep(t, steps) - 1])


def md_step_count(steps: int, md_ratio: float) -> int:
    """``ceil(rho * T)``, rounded first so 0.4 * 50 counts as exactly 20."""
    require(0.0 <= md_ratio <= 1.0, f"md_ratio must be in [0, 1], got {md_ratio}")
    return min(steps, math.ceil(round(md_ratio * steps, 9)))


def schedule_control(t: int, steps: int, md_ratio: float) -> StepMode:
    """MD for the highest-noise ``ceil(rho * T)`` steps, CAC afterwards."""
    require(1 <= t <= steps, f"step {t} outside [1, {steps}]")
    return StepMode.MD if t > steps - md_step_count(steps, md_ratio) else StepMode.CAC


def predicted_x0(z_t: NDArray, eps: NDArray, alpha_bar: float) -> NDArray:
    return (z_t - math.sqrt(1.0 - alpha_bar) * eps) / math.sqrt(alpha_bar)


def predicted_noise(z_t: NDArray, x0: NDArray, alpha_bar: float) -> NDArray:
    return (z_t - math.sqrt(alpha_bar) * x0) / math.sqrt(1.0 - alpha_bar)


def ddim_update(
    z_t: NDArray,
    eps: NDArray,
    alpha_bar: float,
    alpha_bar_prev: float,
    eta: float = 0.0,
    noise: Optional[NDArray] = None,
) -> NDArray:
    """One DDIM step from ``z_t`` to ``z_{t-1}``.

    With ``eta == 0`` the step is deterministic; otherwise ``noise`` (standard
    normal, same shape as ``z_t``) is mixed in with the DDIM sigma.
    """
    x0 = predicted_x0(z_t, eps, alpha_bar)
    sigma = 0.0
    if eta > 0.0:
        require(noise is not None, "stochastic DDIM needs a noise sample")
        sigma = eta * math.sqrt((1.0 - alpha_bar_prev) / (1.0 - alpha_bar) * (1.0 - alpha_bar / alpha_bar_prev))
    direction = math.sqrt(max(1.0 - alpha_bar_prev - sigma**2, 0.0)) * eps
    z_prev = math.sqrt(alpha_bar_prev) * x0 + direction
    if sigma > 0.0:
        z_prev = z_prev + sigma * noise
    return z_prev
