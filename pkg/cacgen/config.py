"""
Runtime configuration for cacgen.

Settings come from the environment (prefix ``CACGEN_``) and an optional
``.env`` file. Sampling hyperparameters default to the values used for the
quantitative experiments: lambda 1 for captions, 10 for localized prompts,
MD ratio 0.4 and a 50-step sampler.
"""

import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load .env explicitly so plain os.getenv readers see the same values
try:
    from dotenv import load_dotenv

    for _candidate in (".env", "../.env", "cacgen/.env"):
        if os.path.exists(_candidate):
            load_dotenv(_candidate)
            break
except ImportError:
    # dotenv not available, environment must be set by the caller
    pass

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(name)s - %(levelname)s - %(message)s"


class CacgenSettings(BaseSettings):
    """Environment-driven settings shared by the CLI and the eval suites."""

    model_config = SettingsConfigDict(
        env_prefix="CACGEN_", env_file=".env", extra="ignore"
    )

    threads: int = Field(default=1, ge=1, description="Cap on concurrent seeds")
    log_level: str = "INFO"
    vocabulary_path: Optional[Path] = None
    output_dir: Path = Path("runs")

    latent_size: int = Field(default=32, ge=4)
    latent_channels: int = Field(default=4, ge=3)
    image_size: int = Field(default=64, ge=4)
    model_seed: int = 0

    steps: int = Field(default=50, ge=1)
    md_ratio: float = Field(default=0.4, ge=0.0, le=1.0)
    lambda_caption: float = Field(default=1.0, gt=0.0)
    lambda_region: float = Field(default=10.0, gt=0.0)
    seed: int = 0


@lru_cache(maxsize=1)
def get_settings() -> CacgenSettings:
    """Get the process-wide settings instance."""
    settings = CacgenSettings()
    logger.debug(f"Loaded settings: threads={settings.threads}, steps={settings.steps}")
    return settings


def get_settings_summary() -> Dict[str, Any]:
    """Get the active configuration as a plain dict (for manifests and logs)."""
    settings = get_settings()
    summary = settings.model_dump(mode="json")
    summary["vocabulary_source"] = (
        str(settings.vocabulary_path) if settings.vocabulary_path else "bundled"
    )
    return summary


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging the same way for every entry point."""
    resolved = (level or get_settings().log_level).upper()
    logging.basicConfig(level=getattr(logging, resolved, logging.INFO), format=LOG_FORMAT)
