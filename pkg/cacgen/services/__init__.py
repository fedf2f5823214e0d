"""
Services Module for cacgen

Process-wide, lazily created shared objects:

- Vocabulary → cacgen.services.vocabulary_service
- Denoiser cache → cacgen.services.denoiser_service
"""

from .denoiser_service import clear_denoisers, get_denoiser
from .vocabulary_service import BUNDLED_VOCABULARY, get_vocabulary, get_vocabulary_config

__all__ = [
    "BUNDLED_VOCABULARY",
    "get_vocabulary",
    "get_vocabulary_config",
    "get_denoiser",
    "clear_denoisers",
]
