"""
Attention records and their export formats.

Binary dump: records back to back, each a little-endian u32 header
``(layer, step, h, HW, N)`` followed by ``h * HW * N`` float64 values in
row-major order. ``layer`` is the block's index in the denoiser's layer
order.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from PIL import Image

from ..errors import require
from ..numerics import Grid, resize_grid

logger = logging.getLogger(__name__)

_HEADER = np.dtype("<u4")
_VALUES = np.dtype("<f8")
_HEADER_FIELDS = 5


@dataclass(frozen=True)
class AttentionRecord:
    """Aggregated map M^(l) of one cross block at one sampling step."""

    layer: str
    layer_index: int
    step: int
    height: int
    width: int
    maps: NDArray[np.float64]  # heads x (H*W) x N

    def __post_init__(self):
        require(self.maps.ndim == 3, f"record maps must be h x HW x N, got {self.maps.shape}")
        require(self.maps.shape[1] == self.height * self.width, "record rows must equal H*W")

    @property
    def heads(self) -> int:
        return self.maps.shape[0]

    @property
    def tokens(self) -> int:
        return self.maps.shape[2]

    def token_map(self, column: int) -> Grid:
        """Head-averaged attention on one token column as an ``H x W`` grid."""
        return self.maps[:, :, column].mean(axis=0).reshape(self.height, self.width)


def write_attention_dump(records: Sequence[AttentionRecord], path: Union[str, Path]) -> int:
    """Write records to ``path``; returns the number of bytes written."""
    path = Path(path)
    written = 0
    with path.open("wb") as fh:
        for record in records:
            h, hw, n = record.maps.shape
            header = np.array([record.layer_index, record.step, h, hw, n], dtype=_HEADER)
            payload = np.ascontiguousarray(record.maps, dtype=_VALUES)
            written += fh.write(header.tobytes())
            written += fh.write(payload.tobytes(order="C"))
    logger.info(f"Wrote {len(records)} attention records ({written} bytes) to {path}")
    return written


def read_attention_dump(path: Union[str, Path]) -> List[Tuple[int, int, NDArray[np.float64]]]:
    """Read a dump back as ``(layer_index, step, maps)`` triples."""
    data = Path(path).read_bytes()
    out = []
    offset = 0
    header_bytes = _HEADER.itemsize * _HEADER_FIELDS
    while offset < len(data):
        require(offset + header_bytes <= len(data), "truncated attention dump header")
        layer, step, h, hw, n = np.frombuffer(data, dtype=_HEADER, count=_HEADER_FIELDS, offset=offset)
        offset += header_bytes
        count = int(h) * int(hw) * int(n)
        require(offset + count * _VALUES.itemsize <= len(data), "truncated attention dump payload")
        maps = np.frombuffer(data, dtype=_VALUES, count=count, offset=offset).reshape(int(h), int(hw), int(n))
        offset += count * _VALUES.itemsize
        out.append((int(layer), int(step), maps.copy()))
    return out


def heatmap_image(record: AttentionRecord, column: int, size: Tuple[int, int]) -> Image.Image:
    """8-bit grayscale heatmap of one token column, nearest-upsampled to ``size``."""
    grid = record.token_map(column)
    peak = float(grid.max())
    scaled = grid / peak if peak > 0 else grid
    scaled = resize_grid(scaled, size[0], size[1], "nearest")
    return Image.fromarray(np.round(scaled * 255.0).astype(np.uint8))


def write_heatmaps(
    records: Sequence[AttentionRecord],
    columns: Sequence[int],
    out_dir: Union[str, Path],
    size: Tuple[int, int],
    stride: int = 1,
) -> List[Path]:
    """Write one PNG per (record, column) for steps divisible by ``stride``."""
    require(stride >= 1, f"heatmap stride must be >= 1, got {stride}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for record in records:
        if record.step % stride:
            continue
        for column in columns:
            path = out_dir / f"attn_s{record.step:03d}_{record.layer}_t{column:02d}.png"
            heatmap_image(record, column, size).save(path, format="PNG", optimize=False)
            paths.append(path)
    logger.debug(f"Wrote {len(paths)} heatmaps to {out_dir}")
    return paths
