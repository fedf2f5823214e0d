"""
Text Module

Toy tokenizer, deterministic embedder and prompt concatenation:
- vocabulary: token table, concept palette, JSON loading
- tokenizer: whitespace tokenization and seeded embeddings
- prompts: concatenation with span/lambda bookkeeping, substring spans, templates
"""

from .prompts import (
    CITY_CAPTION_TEMPLATE,
    COMPOSITION_TEMPLATE,
    PSEUDO_CAPTION_TEMPLATE,
    ConcatenatedPrompt,
    concat_prompts,
    find_substring_span,
    pseudo_caption,
)
from .tokenizer import TokenizedPrompt, embed, embed_tokens, split_words, tokenize
from .vocabulary import (
    BOS,
    EOS,
    PAD,
    PAINT_DIMS,
    Vocabulary,
    build_vocabulary,
    load_vocabulary,
)

__all__ = [
    "BOS",
    "EOS",
    "PAD",
    "PAINT_DIMS",
    "Vocabulary",
    "build_vocabulary",
    "load_vocabulary",
    "TokenizedPrompt",
    "tokenize",
    "split_words",
    "embed",
    "embed_tokens",
    "ConcatenatedPrompt",
    "concat_prompts",
    "find_substring_span",
    "pseudo_caption",
    "COMPOSITION_TEMPLATE",
    "CITY_CAPTION_TEMPLATE",
    "PSEUDO_CAPTION_TEMPLATE",
]
