"""
Layout package: region masks, per-layer mask pyramids, the concatenated
attention mask and scene parsing.
"""

from .concat import ConcatMask, assemble_concat_mask, assemble_substring_mask
from .masks import (
    Box,
    LayerDims,
    MaskPyramid,
    box_to_pixels,
    build_mask_pyramid,
    rasterize_box,
    two_object_layout,
)
from .scene import (
    DEFAULT_MIN_AREA_FRACTION,
    Region,
    SceneFile,
    SceneSpec,
    load_labelmap,
    parse_scene,
    read_labelmap,
    read_mask_png,
    scene_from_boxes,
    scene_labels,
)

__all__ = [
    "Box",
    "LayerDims",
    "MaskPyramid",
    "box_to_pixels",
    "build_mask_pyramid",
    "rasterize_box",
    "two_object_layout",
    "ConcatMask",
    "assemble_concat_mask",
    "assemble_substring_mask",
    "DEFAULT_MIN_AREA_FRACTION",
    "Region",
    "SceneFile",
    "SceneSpec",
    "load_labelmap",
    "parse_scene",
    "read_labelmap",
    "read_mask_png",
    "scene_from_boxes",
    "scene_labels",
]
