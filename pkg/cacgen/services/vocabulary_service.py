"""
Vocabulary service.

Loads the vocabulary once per process: the file named by
``CACGEN_VOCABULARY_PATH`` when set, the bundled ``data/vocabulary.json``
otherwise.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from ..config import get_settings
from ..errors import VocabularyError
from ..text import Vocabulary, load_vocabulary

logger = logging.getLogger(__name__)

BUNDLED_VOCABULARY = Path(__file__).resolve().parent.parent / "data" / "vocabulary.json"

_vocabulary: Optional[Vocabulary] = None
_vocabulary_source: Optional[Path] = None


def get_vocabulary() -> Vocabulary:
    """Get the process-wide vocabulary instance."""
    global _vocabulary, _vocabulary_source

    if _vocabulary is None:
        override = get_settings().vocabulary_path
        if override is not None:
            try:
                _vocabulary = load_vocabulary(override)
                _vocabulary_source = Path(override)
                logger.info(f"Using vocabulary override {override}")
            except VocabularyError as e:
                logger.warning(f"Failed to load vocabulary override: {e}, falling back to bundled")
        if _vocabulary is None:
            _vocabulary = load_vocabulary(BUNDLED_VOCABULARY)
            _vocabulary_source = BUNDLED_VOCABULARY

    return _vocabulary


def get_vocabulary_config() -> Dict[str, Any]:
    """Get vocabulary details for manifests and logs."""
    vocab = get_vocabulary()
    return {
        "source": str(_vocabulary_source),
        "tokens": len(vocab),
        "embed_dim": vocab.embed_dim,
        "seed": vocab.seed,
        "objects": sorted(vocab.object_palette()),
        "attributes": sorted(vocab.attributes),
    }
