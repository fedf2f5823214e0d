"""
Whitespace tokenizer and deterministic embedder.

Embeddings are a seeded function of (vocabulary seed, token id) only, so the
same token gets the same row in every prompt, on every platform. Concept
tokens additionally carry ``[1, 2r-1, 2g-1, 2b-1]`` in the trailing paint
coordinates; the PAD token embeds to a zero row.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import ContractViolation, require
from ..numerics import Matrix
from .vocabulary import PAINT_DIMS, Vocabulary

logger = logging.getLogger(__name__)

_STRIP_CHARS = ".,;:"


@dataclass(frozen=True)
class TokenizedPrompt:
    """Token ids of one prompt, wrapped in BOS/EOS."""

    tokens: Tuple[int, ...]
    text: str = ""

    def __post_init__(self):
        require(len(self.tokens) >= 2, "a tokenized prompt holds at least BOS and EOS")

    @property
    def length(self) -> int:
        return len(self.tokens)

    @property
    def content(self) -> Tuple[int, ...]:
        """Token ids without the leading BOS and trailing EOS."""
        return self.tokens[1:-1]


def split_words(text: str) -> List[str]:
    """Lowercase, split on whitespace and drop trailing punctuation."""
    words = []
    for raw in text.lower().split():
        word = raw.strip(_STRIP_CHARS)
        if word:
            words.append(word)
    return words


def tokenize(text: str, vocab: Vocabulary) -> TokenizedPrompt:
    """Tokenize ``text`` into ``[BOS, w1, ..., wn, EOS]``.

    Raises:
        ContractViolation: if the text holds no words.
        VocabularyError: naming the first word missing from ``vocab``.
    """
    words = split_words(text)
    if not words:
        raise ContractViolation("cannot tokenize an empty prompt")
    ids = tuple(vocab.token_id(w) for w in words)
    return TokenizedPrompt(tokens=(vocab.bos_id,) + ids + (vocab.eos_id,), text=" ".join(words))


@lru_cache(maxsize=4096)
def _token_row(seed: int, token_id: int, dim: int, paint: Tuple[float, ...]) -> Tuple[float, ...]:
    rng = np.random.default_rng([seed, token_id])
    row = np.zeros(dim, dtype=np.float64)
    row[: dim - PAINT_DIMS] = rng.standard_normal(dim - PAINT_DIMS)
    if paint:
        row[dim - PAINT_DIMS :] = paint
    return tuple(row)


def embed_tokens(tokens: Sequence[int], vocab: Vocabulary) -> Matrix:
    """Embed a raw token-id sequence into an ``n x d_e`` matrix."""
    rows = np.zeros((len(tokens), vocab.embed_dim), dtype=np.float64)
    for i, token_id in enumerate(tokens):
        if token_id == vocab.pad_id:
            continue
        color = vocab.concept_color(token_id)
        paint = (1.0,) + tuple(2.0 * c - 1.0 for c in color) if color is not None else ()
        rows[i] = _token_row(vocab.seed, token_id, vocab.embed_dim, paint)
    return rows


def embed(prompt: TokenizedPrompt, vocab: Vocabulary) -> Matrix:
    """Embed a tokenized prompt (``n_i x d_e``); identical tokens give identical rows."""
    return embed_tokens(prompt.tokens, vocab)
