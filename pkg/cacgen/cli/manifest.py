"""
Run manifest: what a ``generate`` run read, how it was configured and every
file it wrote. Replaying a manifest regenerates identical images.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from ..diffusion import SamplerConfig
from ..errors import EvaluationError, SceneSchemaError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ImageEntry(BaseModel):
    """One generated image and its side outputs (paths relative to the run dir)."""

    seed: int
    png: str
    ppm: Optional[str] = None
    attention: Optional[str] = None
    heatmaps: List[str] = Field(default_factory=list)
    seconds: float = Field(ge=0.0)
    attn_mass_in: Optional[float] = None

    @property
    def key(self) -> str:
        return Path(self.png).stem


class RunManifest(BaseModel):
    scene: str
    scene_name: str
    config: Dict[str, Any]
    seeds: List[int]
    output_dir: str
    images: List[ImageEntry] = Field(default_factory=list)
    write_ppm: bool = False
    dump_attention: bool = False
    heatmap_stride: Optional[int] = Field(default=None, ge=1)
    vocabulary: Dict[str, Any] = Field(default_factory=dict)
    created_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def sampler_config(self, seed: Optional[int] = None) -> SamplerConfig:
        cfg = SamplerConfig.model_validate(self.config)
        return cfg if seed is None else cfg.model_copy(update={"seed": seed})

    @property
    def files(self) -> List[str]:
        """Every file the run emitted, manifest excluded."""
        out = []
        for entry in self.images:
            out.append(entry.png)
            out.extend(p for p in (entry.ppm, entry.attention) if p)
            out.extend(entry.heatmaps)
        return out

    def save(self, run_dir: Union[str, Path]) -> Path:
        path = Path(run_dir) / MANIFEST_NAME
        path.write_text(self.model_dump_json(indent=2))
        logger.info(f"Wrote manifest with {len(self.images)} images to {path}")
        return path


def load_manifest(path: Union[str, Path]) -> RunManifest:
    """Read a manifest; a directory argument means its ``manifest.json``.

    Raises:
        EvaluationError: if the file is missing.
        SceneSchemaError: if it is not a valid manifest.
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise EvaluationError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as e:
        raise SceneSchemaError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from None
    try:
        return RunManifest.model_validate(raw)
    except ValidationError as e:
        fields = ", ".join(".".join(str(p) for p in err["loc"]) for err in e.errors())
        raise SceneSchemaError(f"invalid manifest {path}: {fields}") from None
