"""
Scene specifications.

A scene is a caption plus localization regions g_i = (y_i, b_i). Regions come
from normalized boxes, grayscale mask PNGs or a label map (8-bit PNG with a
sidecar JSON class table). Everything is reduced to soft masks at image size.

Scene JSON::

    {"caption": "a photo of a room",
     "size": [64, 64],
     "regions": [{"prompt": "cat", "box": [0.1, 0.1, 0.5, 0.5]},
                 {"prompt": "dog", "mask_png": "dog.png"}],
     "labelmap": "street.png",
     "lambda_caption": 1.0,
     "lambda_region": 10.0}
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from PIL import Image
from pydantic import BaseModel, Field, ValidationError, model_validator

from ..errors import LayoutError, SceneSchemaError, require
from ..numerics import Grid, resize_grid, resize_mask
from ..text import TokenizedPrompt, Vocabulary, tokenize
from .masks import rasterize_box

logger = logging.getLogger(__name__)

DEFAULT_MIN_AREA_FRACTION = 0.05


@dataclass(frozen=True)
class Region:
    """One localization region: a prompt and its soft mask at image size."""

    prompt: TokenizedPrompt
    mask: Grid
    source: str = "box"

    def __post_init__(self):
        require(self.mask.ndim == 2, f"region mask must be 2-D, got {self.mask.shape}")
        require(
            bool(np.all((self.mask >= 0.0) & (self.mask <= 1.0))),
            "region mask values must lie in [0, 1]",
        )
        if not np.any(self.mask > 0):
            raise LayoutError(f"region '{self.prompt.text}' has an empty mask")

    @property
    def text(self) -> str:
        return self.prompt.text


@dataclass(frozen=True)
class SceneSpec:
    """Caption y0, regions, output size and the lambda weights of the scene."""

    caption: TokenizedPrompt
    regions: Tuple[Region, ...]
    image_h: int
    image_w: int
    channels: int = 3
    lambda_caption: float = 1.0
    lambda_region: float = 10.0
    name: str = "scene"
    # ground-truth concept per region, when the scene comes from a benchmark
    labels: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        require(self.image_h >= 1 and self.image_w >= 1, "scene dims must be positive")
        require(self.channels >= 1, "scene needs at least one channel")
        for region in self.regions:
            require(
                region.mask.shape == (self.image_h, self.image_w),
                f"region '{region.text}' mask {region.mask.shape} != scene {self.image_h}x{self.image_w}",
            )

    @property
    def region_count(self) -> int:
        return len(self.regions)

    def permuted(self, order: Sequence[int]) -> "SceneSpec":
        """Same scene with regions (and labels) reordered."""
        require(sorted(order) == list(range(self.region_count)), f"not a permutation: {order}")
        labels = tuple(self.labels[i] for i in order) if self.labels else ()
        return replace(self, regions=tuple(self.regions[i] for i in order), labels=labels)

    def without_regions(self) -> "SceneSpec":
        return replace(self, regions=(), labels=())


class RegionEntry(BaseModel):
    prompt: str = Field(min_length=1)
    box: Optional[Tuple[float, float, float, float]] = None
    mask_png: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.box is None) == (self.mask_png is None):
            raise ValueError("a region needs exactly one of 'box' or 'mask_png'")
        return self


class SceneFile(BaseModel):
    """Schema of a scene JSON file."""

    caption: str = Field(min_length=1)
    size: Tuple[int, int]
    regions: List[RegionEntry] = Field(default_factory=list)
    labelmap: Optional[str] = None
    min_area_fraction: float = Field(default=DEFAULT_MIN_AREA_FRACTION, ge=0.0, lt=1.0)
    lambda_caption: float = Field(default=1.0, gt=0.0)
    lambda_region: float = Field(default=10.0, gt=0.0)

    @model_validator(mode="after")
    def _positive_size(self):
        if self.size[0] < 1 or self.size[1] < 1:
            raise ValueError(f"size must be positive, got {list(self.size)}")
        return self


def _schema_message(path: Path, error: ValidationError) -> str:
    problems = []
    for item in error.errors():
        where = ".".join(str(p) for p in item["loc"]) or "<root>"
        problems.append(f"{where}: {item['msg']}")
    return f"invalid scene file {path}: " + "; ".join(problems)


def read_mask_png(path: Union[str, Path], h: int, w: int) -> Grid:
    """Grayscale PNG as a [0, 1] mask, nearest-resized to ``h x w``."""
    with Image.open(path) as img:
        gray = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    if gray.shape != (h, w):
        logger.debug(f"Resizing mask {path} from {gray.shape} to {(h, w)}")
        gray = resize_mask(gray, h, w, "nearest")
    return gray


def read_labelmap(path: Union[str, Path]) -> Tuple[NDArray[np.int64], List[str]]:
    """Read an 8-bit label PNG and its sidecar ``<stem>.json`` class table.

    The sidecar holds ``{"classes": ["road", "sky", ...]}``; list position is
    the class id.
    """
    path = Path(path)
    sidecar = path.with_suffix(".json")
    with Image.open(path) as img:
        require(img.mode in ("L", "P"), f"label map {path} must be single-channel 8-bit, got {img.mode}")
        labels = np.asarray(img, dtype=np.int64)
    try:
        table = json.loads(sidecar.read_text())
    except FileNotFoundError:
        raise SceneSchemaError(f"label map {path} has no class table {sidecar}") from None
    classes = table.get("classes") if isinstance(table, dict) else None
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise SceneSchemaError(f"{sidecar}: 'classes' must be a list of names")
    return labels, classes


def load_labelmap(
    labels: NDArray,
    class_names: Sequence[str],
    vocab: Vocabulary,
    min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION,
) -> List[Region]:
    """One Region per class present in ``labels``, in class-id order.

    Classes covering less than ``min_area_fraction`` of the pixels are dropped.

    Raises:
        LayoutError: if a pixel carries a class id without a name.
        VocabularyError: if a class name does not tokenize.
    """
    labels = np.asarray(labels)
    require(labels.ndim == 2, f"label map must be 2-D, got {labels.shape}")
    present, counts = np.unique(labels, return_counts=True)
    unknown = [int(c) for c in present if c < 0 or c >= len(class_names)]
    if unknown:
        raise LayoutError(f"label map uses class ids without a name: {unknown}")

    regions = []
    total = labels.size
    for class_id, count in zip(present, counts):
        name = class_names[int(class_id)]
        if count / total < min_area_fraction:
            logger.info(f"Dropping class '{name}' covering {count / total:.1%} of the image")
            continue
        mask = (labels == class_id).astype(np.float64)
        regions.append(Region(prompt=tokenize(name, vocab), mask=mask, source="labelmap"))
    return regions


def scene_from_boxes(
    caption: str,
    boxes: Sequence[Tuple[str, Sequence[float]]],
    size: Tuple[int, int],
    vocab: Vocabulary,
    lambda_caption: float = 1.0,
    lambda_region: float = 10.0,
    name: str = "scene",
    labels: Sequence[str] = (),
) -> SceneSpec:
    """Build a scene from ``(prompt, normalized box)`` pairs."""
    h, w = size
    regions = tuple(
        Region(prompt=tokenize(text, vocab), mask=rasterize_box(box, h, w), source="box")
        for text, box in boxes
    )
    return SceneSpec(
        caption=tokenize(caption, vocab),
        regions=regions,
        image_h=h,
        image_w=w,
        lambda_caption=lambda_caption,
        lambda_region=lambda_region,
        name=name,
        labels=tuple(labels),
    )


def parse_scene(path: Union[str, Path], vocab: Vocabulary) -> SceneSpec:
    """Load and rasterize a scene JSON file.

    Relative ``mask_png`` and ``labelmap`` paths resolve against the scene
    file's directory. Overlapping regions are accepted as-is.

    Raises:
        SceneSchemaError: on unreadable JSON or a schema violation (the
            message lists the offending fields).
        LayoutError: on degenerate boxes or label maps.
        VocabularyError: on words outside the vocabulary.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise SceneSchemaError(f"scene file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise SceneSchemaError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from None
    try:
        spec = SceneFile.model_validate(raw)
    except ValidationError as e:
        raise SceneSchemaError(_schema_message(path, e)) from None

    h, w = spec.size
    base = path.parent
    regions: List[Region] = []
    for entry in spec.regions:
        prompt = tokenize(entry.prompt, vocab)
        if entry.box is not None:
            mask, source = rasterize_box(entry.box, h, w), "box"
        else:
            mask, source = read_mask_png(base / entry.mask_png, h, w), "mask"
        regions.append(Region(prompt=prompt, mask=mask, source=source))

    if spec.labelmap:
        labels, classes = read_labelmap(base / spec.labelmap)
        if labels.shape != (h, w):
            labels = resize_mask_ids(labels, h, w)
        regions.extend(load_labelmap(labels, classes, vocab, spec.min_area_fraction))

    scene = SceneSpec(
        caption=tokenize(spec.caption, vocab),
        regions=tuple(regions),
        image_h=h,
        image_w=w,
        lambda_caption=spec.lambda_caption,
        lambda_region=spec.lambda_region,
        name=path.stem,
    )
    logger.info(f"Parsed scene {path.name}: {h}x{w}, {scene.region_count} regions")
    return scene


def resize_mask_ids(labels: NDArray, h: int, w: int) -> NDArray[np.int64]:
    """Nearest resize of an integer label map (ids are never blended)."""
    return resize_grid(labels.astype(np.float64), h, w, "nearest").astype(np.int64)


def scene_labels(scene: SceneSpec) -> Mapping[int, str]:
    """Region index to its label (falls back to the prompt text)."""
    if scene.labels:
        return dict(enumerate(scene.labels))
    return {i: r.text for i, r in enumerate(scene.regions)}
