"""
Three-way composition categorization for two-object prompts.

An object counts as present when some detection carries a compound label
``"<color> <object>"`` naming it; it has the right color when the compound
matches the requested pair.
"""

import logging
from collections import Counter
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import EvaluationError
from ..text import Vocabulary
from .detection import DEFAULT_MIN_BLOB, Palette, detect_concepts

logger = logging.getLogger(__name__)

MISSING_OBJECT = "missing_object"
WRONG_COLOR = "wrong_color"
CORRECT = "correct"
CATEGORIES = (MISSING_OBJECT, WRONG_COLOR, CORRECT)

COMPOSITION_MATCH_THRESHOLD = 0.25
SCORE_THRESHOLDS = tuple(float(t) for t in np.round(np.arange(0.60, 0.8001, 0.05), 2))

Pair = Tuple[str, str]


def composition_palette(spec: Sequence[Pair], vocab: Vocabulary) -> Dict[str, Tuple[float, float, float]]:
    """Compound colors of every requested color with every requested object."""
    colors = [c for c, _ in spec]
    objects = [o for _, o in spec]
    pairs = [(c, o) for o in objects for c in colors]
    return vocab.compound_palette(dict.fromkeys(pairs))


def composition_categorize(
    image: NDArray,
    spec: Sequence[Pair],
    palette: Palette,
    min_blob: int = DEFAULT_MIN_BLOB,
    threshold: float = COMPOSITION_MATCH_THRESHOLD,
    min_score: float = 0.0,
) -> str:
    """``missing_object``, ``wrong_color`` or ``correct`` for one generation."""
    detections = [
        d for d in detect_concepts(image, palette, min_blob, threshold) if d.score >= min_score
    ]
    found = {tuple(d.concept.split(" ", 1)) for d in detections}
    found_objects = {obj for _, obj in found}
    if any(obj not in found_objects for _, obj in spec):
        return MISSING_OBJECT
    if any(tuple(pair) not in found for pair in spec):
        return WRONG_COLOR
    return CORRECT


def category_counts(categories: Iterable[str]) -> Dict[str, int]:
    counts = Counter(categories)
    unknown = set(counts) - set(CATEGORIES)
    if unknown:
        raise EvaluationError(f"unknown composition categories: {sorted(unknown)}")
    return {c: counts.get(c, 0) for c in CATEGORIES}


def composition_rates(categories_by_threshold: Mapping[float, List[str]]) -> Dict[str, float]:
    """Category rates averaged over detector score thresholds.

    Raises:
        EvaluationError: if no threshold or an empty batch is given.
    """
    if not categories_by_threshold:
        raise EvaluationError("no score thresholds to average over")
    totals = {c: 0.0 for c in CATEGORIES}
    for threshold, categories in categories_by_threshold.items():
        if not categories:
            raise EvaluationError(f"empty batch at threshold {threshold}")
        counts = category_counts(categories)
        for c in CATEGORIES:
            totals[c] += counts[c] / len(categories)
    return {c: totals[c] / len(categories_by_threshold) for c in CATEGORIES}
