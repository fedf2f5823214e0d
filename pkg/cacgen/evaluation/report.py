"""
Serialized evaluation inputs and outputs: ground-truth files and the
metrics report.

Ground-truth JSON::

    {"kind": "boxes",
     "scenes": {"scene_000": {"boxes": [{"concept": "cat", "box": [4, 4, 20, 20]}]},
                "comp_000": {"pairs": [["blue", "backpack"], ["red", "chair"]]},
                "street_000": {"labelmap": "street_000.png"}},
     "reference_images": ["ref/scene_000.png"]}

Box coordinates are pixels; ``labelmap`` paths resolve against the file.
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from ..errors import EvaluationError, SceneSchemaError

logger = logging.getLogger(__name__)

BenchmarkKind = Literal["boxes", "composition", "labelmap"]


class BoxEntry(BaseModel):
    concept: str
    box: Tuple[float, float, float, float]


class SceneTruth(BaseModel):
    boxes: List[BoxEntry] = Field(default_factory=list)
    pairs: List[Tuple[str, str]] = Field(default_factory=list)
    labelmap: Optional[str] = None


class GroundTruthFile(BaseModel):
    """Schema of a ground-truth JSON file."""

    kind: BenchmarkKind = "boxes"
    scenes: Dict[str, SceneTruth]
    reference_images: List[str] = Field(default_factory=list)
    classes: List[str] = Field(default_factory=list)


class MetricsReport(BaseModel):
    """Scores of a batch of generations."""

    images: int = Field(ge=0)
    precision: float = Field(default=0.0, ge=0.0, le=1.0)
    recall: float = Field(default=0.0, ge=0.0, le=1.0)
    map50: float = Field(default=0.0, ge=0.0, le=1.0)
    map50_95: float = Field(default=0.0, ge=0.0, le=1.0)
    miou: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    macc: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    aacc: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    kid: Optional[float] = None
    composition_counts: Optional[Dict[str, int]] = None
    composition_rates: Optional[Dict[str, float]] = None
    attn_mass_in: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seconds_per_image: Optional[float] = Field(default=None, ge=0.0)

    @field_validator("kid")
    @classmethod
    def _kid_finite(cls, value: Optional[float]):
        # unbiased MMD estimates go negative when the sets are close
        if value is not None and not math.isfinite(value):
            raise ValueError(f"KID must be finite, got {value}")
        return value

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.model_dump_json(indent=2))
        logger.info(f"Saved metrics report to {path}")
        return path


def load_ground_truth(path: Union[str, Path]) -> GroundTruthFile:
    """Read a ground-truth file.

    Raises:
        EvaluationError: if the file is missing.
        SceneSchemaError: if it does not match the schema.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise EvaluationError(f"ground-truth file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise SceneSchemaError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from None
    try:
        return GroundTruthFile.model_validate(raw)
    except ValidationError as e:
        fields = ", ".join(".".join(str(p) for p in err["loc"]) for err in e.errors())
        raise SceneSchemaError(f"invalid ground-truth file {path}: {fields}") from None
