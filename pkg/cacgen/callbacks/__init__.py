"""
Callback hooks for sampling runs.

This package provides:
- Run lifecycle hooks (before/after a sampling run)
- Step hooks (before/after each denoising step)
- AttentionStore, the collector for attention records
"""

from .context import AttentionStore, SamplingContext
from .sampling import after_sample_callback, before_sample_callback
from .step import after_step_callback, before_step_callback

__all__ = [
    "AttentionStore",
    "SamplingContext",
    "before_sample_callback",
    "after_sample_callback",
    "before_step_callback",
    "after_step_callback",
]
