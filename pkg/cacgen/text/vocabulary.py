"""
Toy vocabulary standing in for a pretrained text encoder's token table.

A vocabulary file is JSON::

    {"tokens": [...], "concepts": {"dog": [r, g, b], ...},
     "attributes": ["red", ...], "embed_dim": 16, "seed": 7}

Special tokens ``<bos>``, ``<eos>`` and ``<pad>`` are added in front of the
listed tokens when missing, so ids stay dense from 0.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from ..errors import VocabularyError

logger = logging.getLogger(__name__)

BOS = "<bos>"
EOS = "<eos>"
PAD = "<pad>"
SPECIAL_TOKENS = (BOS, EOS, PAD)

# trailing embedding coordinates reserved for the concept painter:
# [presence, 2r-1, 2g-1, 2b-1]
PAINT_DIMS = 4

RGB = Tuple[float, float, float]


class VocabularyFile(BaseModel):
    """Schema of a vocabulary JSON file."""

    tokens: List[str]
    concepts: Dict[str, Tuple[float, float, float]] = Field(default_factory=dict)
    attributes: List[str] = Field(default_factory=list)
    embed_dim: int = Field(default=16, ge=PAINT_DIMS + 4)
    seed: int = Field(default=0, ge=0)

    @field_validator("concepts")
    @classmethod
    def _unit_colors(cls, value: Dict[str, Tuple[float, float, float]]):
        for name, rgb in value.items():
            if not all(0.0 <= c <= 1.0 for c in rgb):
                raise ValueError(f"concept '{name}' color must lie in [0, 1], got {rgb}")
        return value


@dataclass(frozen=True)
class Vocabulary:
    """Token table, embedding dimension and concept palette."""

    entries: Mapping[str, int]
    embed_dim: int
    seed: int
    concept_palette: Mapping[str, RGB]
    attributes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        ids = sorted(self.entries.values())
        if ids != list(range(len(ids))):
            raise VocabularyError("token ids must be dense from 0")
        for special in SPECIAL_TOKENS:
            if special not in self.entries:
                raise VocabularyError(f"missing special token '{special}'")
        for concept in self.concept_palette:
            if concept not in self.entries:
                raise VocabularyError(f"palette concept '{concept}' is not a vocabulary token")
        for attribute in self.attributes:
            if attribute not in self.concept_palette:
                raise VocabularyError(f"attribute '{attribute}' has no palette color")
        if self.embed_dim < PAINT_DIMS + 4:
            raise VocabularyError(f"embed_dim must be >= {PAINT_DIMS + 4}")
        object.__setattr__(self, "_by_id", {i: t for t, i in self.entries.items()})

    @property
    def bos_id(self) -> int:
        return self.entries[BOS]

    @property
    def eos_id(self) -> int:
        return self.entries[EOS]

    @property
    def pad_id(self) -> int:
        return self.entries[PAD]

    @property
    def special_ids(self) -> frozenset:
        return frozenset((self.bos_id, self.eos_id, self.pad_id))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def token_id(self, word: str) -> int:
        try:
            return self.entries[word]
        except KeyError:
            raise VocabularyError(f"unknown word '{word}' (not in vocabulary)") from None

    def token_text(self, token_id: int) -> str:
        return self._by_id[token_id]

    def concept_color(self, token_id: int):
        """Palette color of a token, or None if it is not a concept."""
        return self.concept_palette.get(self._by_id.get(token_id, ""))

    def is_object(self, word: str) -> bool:
        return word in self.concept_palette and word not in self.attributes

    def object_palette(self) -> Dict[str, RGB]:
        """Concept colors of object (non-attribute) concepts."""
        return {k: v for k, v in self.concept_palette.items() if k not in self.attributes}

    def attribute_palette(self) -> Dict[str, RGB]:
        return {k: v for k, v in self.concept_palette.items() if k in self.attributes}

    def compound_palette(self, pairs: Iterable[Tuple[str, str]]) -> Dict[str, RGB]:
        """Rendered color of each ``(attribute, object)`` pair, keyed ``"<attr> <obj>"``.

        A region prompt naming both concepts paints the mean of their colors.
        """
        palette: Dict[str, RGB] = {}
        for attribute, obj in pairs:
            for word in (attribute, obj):
                if word not in self.concept_palette:
                    raise VocabularyError(f"'{word}' has no palette color")
            a = np.asarray(self.concept_palette[attribute])
            o = np.asarray(self.concept_palette[obj])
            palette[f"{attribute} {obj}"] = tuple(float(c) for c in (a + o) / 2.0)
        return palette


def build_vocabulary(
    tokens: Sequence[str],
    concepts: Mapping[str, Sequence[float]],
    embed_dim: int = 16,
    seed: int = 0,
    attributes: Iterable[str] = (),
) -> Vocabulary:
    """Build a vocabulary, adding special tokens and concept words as needed."""
    ordered: List[str] = [t for t in SPECIAL_TOKENS]
    for token in list(tokens) + list(concepts):
        token = token.lower()
        if token not in ordered:
            ordered.append(token)
    return Vocabulary(
        entries={t: i for i, t in enumerate(ordered)},
        embed_dim=embed_dim,
        seed=seed,
        concept_palette={k.lower(): tuple(float(c) for c in v) for k, v in concepts.items()},
        attributes=frozenset(a.lower() for a in attributes),
    )


def load_vocabulary(path: Union[str, Path]) -> Vocabulary:
    """Load a vocabulary JSON file.

    Raises:
        VocabularyError: if the file is missing or violates the schema.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
        spec = VocabularyFile.model_validate(raw)
    except FileNotFoundError:
        raise VocabularyError(f"vocabulary file not found: {path}") from None
    except (json.JSONDecodeError, ValidationError) as e:
        raise VocabularyError(f"invalid vocabulary file {path}: {e}") from None

    missing = [c for c in spec.concepts if c.lower() not in {t.lower() for t in spec.tokens}]
    if missing:
        logger.info(f"Adding {len(missing)} palette concepts missing from the token list")
    vocab = build_vocabulary(
        spec.tokens, spec.concepts, spec.embed_dim, spec.seed, spec.attributes
    )
    logger.info(f"Loaded vocabulary from {path}: {len(vocab)} tokens, d_e={vocab.embed_dim}")
    return vocab
