"""
Prompt construction: concatenation with span bookkeeping, substring lookup
and the prompt templates used by the synthetic benchmarks.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import require
from .tokenizer import TokenizedPrompt
from .vocabulary import Vocabulary

logger = logging.getLogger(__name__)

# Prompt templates
COMPOSITION_TEMPLATE = "a {color1} {object1} and a {color2} {object2}"
CITY_CAPTION_TEMPLATE = "a street photo in {city}"
PSEUDO_CAPTION_TEMPLATE = "{caption} with {objects}"

Span = Tuple[int, int]


@dataclass(frozen=True)
class ConcatenatedPrompt:
    """``y0 + y1 + ... + ym`` with per-segment spans and per-token weights.

    ``lambdas`` and ``special`` cover the unpadded tokens only; ``tokens`` may
    carry trailing PAD ids.
    """

    tokens: Tuple[int, ...]
    segments: Tuple[Span, ...]
    lambdas: NDArray[np.float64]
    special: Tuple[bool, ...]
    pad_id: int

    def __post_init__(self):
        require(len(self.segments) >= 1, "a concatenated prompt has a caption segment")
        cursor = 0
        for start, end in self.segments:
            require(start == cursor and end > start, f"segments must tile the prompt: {self.segments}")
            cursor = end
        require(len(self.lambdas) == cursor, "lambda length must equal the unpadded token count")
        require(len(self.special) == cursor, "special flags must cover the unpadded tokens")
        require(bool(np.all(self.lambdas > 0)), "lambda weights must be positive")
        require(len(self.tokens) >= cursor, "padded length shorter than the prompt")

    @property
    def unpadded_length(self) -> int:
        return self.segments[-1][1]

    @property
    def padded_length(self) -> int:
        return len(self.tokens)

    @property
    def region_count(self) -> int:
        return len(self.segments) - 1

    def token_weights(self) -> NDArray[np.float64]:
        """Lambda over the padded token range; PAD positions weigh 0."""
        weights = np.zeros(self.padded_length, dtype=np.float64)
        weights[: self.unpadded_length] = self.lambdas
        return weights

    def region_content_columns(self, region: int) -> Tuple[int, ...]:
        """Non-special token columns of region ``region`` (1-based, 0 is the caption)."""
        start, end = self.segments[region]
        return tuple(k for k in range(start, end) if not self.special[k])


def concat_prompts(
    caption: TokenizedPrompt,
    regions: Sequence[TokenizedPrompt],
    pad_to: Optional[int] = None,
    lambda_caption: float = 1.0,
    lambda_region: float = 10.0,
    vocab: Optional[Vocabulary] = None,
    lambda_region_specials: bool = False,
) -> ConcatenatedPrompt:
    """Concatenate caption and region prompts keeping every BOS/EOS.

    Region content tokens get ``lambda_region``; the caption and all special
    tokens get ``lambda_caption`` (unless ``lambda_region_specials``).

    Raises:
        ContractViolation: if ``pad_to`` is smaller than the total length.
    """
    require(lambda_caption > 0 and lambda_region > 0, "lambda weights must be positive")
    tokens = list(caption.tokens)
    segments = [(0, caption.length)]
    lambdas = [lambda_caption] * caption.length
    special = [True] + [False] * (caption.length - 2) + [True]

    for region in regions:
        start = len(tokens)
        tokens.extend(region.tokens)
        segments.append((start, len(tokens)))
        edge = lambda_region if lambda_region_specials else lambda_caption
        lambdas.extend([edge] + [lambda_region] * (region.length - 2) + [edge])
        special.extend([True] + [False] * (region.length - 2) + [True])

    total = len(tokens)
    if pad_to is None:
        pad_to = total
    require(pad_to >= total, f"pad_to={pad_to} is smaller than the prompt length {total}")
    pad_id = vocab.pad_id if vocab is not None else -1
    require(pad_to == total or pad_id >= 0, "padding needs a vocabulary for the PAD id")
    tokens.extend([pad_id] * (pad_to - total))

    return ConcatenatedPrompt(
        tokens=tuple(tokens),
        segments=tuple(segments),
        lambdas=np.asarray(lambdas, dtype=np.float64),
        special=tuple(special),
        pad_id=pad_id,
    )


def find_substring_span(caption: TokenizedPrompt, region: TokenizedPrompt) -> Optional[Span]:
    """First occurrence of the region's content tokens inside the caption.

    Returns ``(j, n)`` with ``j`` indexing the caption's token sequence
    (BOS is index 0), or None when absent.
    """
    needle = region.content
    if not needle:
        return None
    hay = caption.tokens
    n = len(needle)
    for j in range(1, len(hay) - n):
        if hay[j : j + n] == needle:
            return (j, n)
    return None


def pseudo_caption(caption: str, region_texts: Sequence[str]) -> str:
    """Caption for models without location input: ``"<caption> with <a>, <b>"``."""
    if not region_texts:
        return caption
    return PSEUDO_CAPTION_TEMPLATE.format(caption=caption, objects=", ".join(region_texts))
