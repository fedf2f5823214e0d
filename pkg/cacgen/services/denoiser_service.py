"""
Denoiser service: one immutable ToyDenoiser per configuration, shared by
every run in the process.
"""

import logging
import threading
from typing import Dict, Tuple

from ..diffusion.denoiser import ToyDenoiser

logger = logging.getLogger(__name__)

_denoisers: Dict[Tuple[int, int, int, int], ToyDenoiser] = {}
_lock = threading.Lock()


def get_denoiser(latent_size: int = 32, latent_channels: int = 4, seed: int = 0, context_dim: int = 16) -> ToyDenoiser:
    """Get (building on first use) the denoiser for a configuration."""
    key = (latent_size, latent_channels, seed, context_dim)
    with _lock:
        if key not in _denoisers:
            _denoisers[key] = ToyDenoiser(
                latent_h=latent_size,
                latent_w=latent_size,
                latent_channels=latent_channels,
                context_dim=context_dim,
                seed=seed,
            )
        return _denoisers[key]


def clear_denoisers() -> None:
    with _lock:
        _denoisers.clear()
