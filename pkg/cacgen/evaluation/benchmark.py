"""
Synthetic benchmarks and batch scoring.

Three scene families stand in for the real evaluation sets:

- ``boxes``: 2 to 4 non-overlapping boxed objects under a generic caption
- ``composition``: "a <c1> <o1> and a <c2> <o2>" with the left/right layout
- ``labelmap``: street-photo label maps (road, sky, building, tree)

Every generator is seeded and returns scenes whose ``labels`` name the
concept painted in each region.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import EvaluationError, require
from ..layout import SceneSpec, load_labelmap, scene_from_boxes, two_object_layout
from ..text import CITY_CAPTION_TEMPLATE, COMPOSITION_TEMPLATE, Vocabulary, tokenize
from .composition import (
    SCORE_THRESHOLDS,
    category_counts,
    composition_categorize,
    composition_palette,
    composition_rates,
)
from .detection import DEFAULT_MIN_BLOB, Detection, detect_concepts, detection_metrics, segment_concepts
from .fidelity import image_features, kid
from .segmentation import segmentation_metrics

logger = logging.getLogger(__name__)

BACKGROUND_GRAY = 0.5
BOX_SNAP = 4
MIN_BOX_FRACTION = 0.05
STREET_CLASSES = ("road", "sky", "building", "tree")
CITIES = ("zurich", "berlin", "munich", "hamburg", "frankfurt")
_SCENE_WORDS = ("photo", "picture", "view")
_PLACES = ("room", "garden", "park", "yard", "kitchen")

# separability of the compound colors in a composition scene
MIN_COMPOUND_GAP = 0.5
MIN_PAIR_GAP = 0.7
MIN_GRAY_GAP = 0.25


def _generic_caption(rng: np.random.Generator) -> str:
    return f"a {rng.choice(_SCENE_WORDS)} of a {rng.choice(_PLACES)}"


def _cell_box(rng, cell: Tuple[int, int], size: Tuple[int, int], snap: int) -> Tuple[float, ...]:
    h, w = size
    ch, cw = h // 2, w // 2
    r, c = cell
    bh = max(snap, int(round(ch * rng.uniform(0.6, 0.9) / snap)) * snap)
    bw = max(snap, int(round(cw * rng.uniform(0.6, 0.9) / snap)) * snap)
    y0 = r * ch + int(rng.integers(0, (ch - bh) // snap + 1)) * snap
    x0 = c * cw + int(rng.integers(0, (cw - bw) // snap + 1)) * snap
    return (x0 / w, y0 / h, (x0 + bw) / w, (y0 + bh) / h)


def box_benchmark(
    n: int, vocab: Vocabulary, seed: int = 0, size: Tuple[int, int] = (64, 64), snap: int = BOX_SNAP
) -> List[SceneSpec]:
    """``n`` scenes with 2-4 boxed objects, one per image quadrant.

    Boxes are aligned to ``snap`` pixels and cover at least 5% of the image.
    """
    require(n >= 1, "benchmark needs at least one scene")
    require(size[0] % (2 * snap) == 0 and size[1] % (2 * snap) == 0, f"size {size} must split into snapped quadrants")
    rng = np.random.default_rng([seed, 1])
    objects = sorted(vocab.object_palette())
    require(len(objects) >= 4, "vocabulary needs at least 4 object concepts")
    cells = [(0, 0), (0, 1), (1, 0), (1, 1)]
    scenes = []
    for i in range(n):
        k = int(rng.integers(2, 5))
        chosen = rng.choice(len(cells), size=k, replace=False)
        concepts = [str(c) for c in rng.choice(objects, size=k, replace=False)]
        boxes = [(concept, _cell_box(rng, cells[j], size, snap)) for concept, j in zip(concepts, sorted(chosen))]
        for _, box in boxes:
            area = (box[2] - box[0]) * (box[3] - box[1])
            require(area >= MIN_BOX_FRACTION, f"box {box} below {MIN_BOX_FRACTION:.0%} of the image")
        scenes.append(
            scene_from_boxes(_generic_caption(rng), boxes, size, vocab, name=f"boxes_{i:03d}", labels=concepts)
        )
    logger.info(f"Generated {n} box scenes")
    return scenes


def _separable(vocab: Vocabulary, c1: str, o1: str, c2: str, o2: str) -> bool:
    palette = vocab.compound_palette([(c1, o1), (c2, o2), (c1, o2), (c2, o1)])
    colors = {k: np.asarray(v) for k, v in palette.items()}
    names = list(colors)
    for a in range(len(names)):
        if np.linalg.norm(colors[names[a]] - BACKGROUND_GRAY) <= MIN_GRAY_GAP:
            return False
        for b in range(a + 1, len(names)):
            if np.linalg.norm(colors[names[a]] - colors[names[b]]) < MIN_COMPOUND_GAP:
                return False
    return np.linalg.norm(colors[f"{c1} {o1}"] - colors[f"{c2} {o2}"]) >= MIN_PAIR_GAP


def composition_benchmark(
    n: int,
    vocab: Vocabulary,
    seed: int = 0,
    size: Tuple[int, int] = (64, 64),
    margin: Optional[int] = None,
    max_tries: int = 10000,
) -> List[SceneSpec]:
    """``n`` two-object scenes: first object left, second right.

    ``margin`` defaults to 40 px scaled from a 512 px image. Pairs are drawn
    so their rendered compound colors stay apart from each other, from their
    mixture and from the gray background.

    Raises:
        EvaluationError: if no separable pair is found within ``max_tries``.
    """
    require(n >= 1, "benchmark needs at least one scene")
    h, w = size
    margin = margin if margin is not None else max(1, round(40 * w / 512))
    left, right = two_object_layout(h, w, margin)
    rng = np.random.default_rng([seed, 2])
    colors = sorted(vocab.attributes)
    objects = sorted(vocab.object_palette())
    scenes = []
    tries = 0
    while len(scenes) < n:
        tries += 1
        if tries > max_tries:
            raise EvaluationError(f"found only {len(scenes)} separable color/object pairs in {max_tries} tries")
        c1, c2 = (str(c) for c in rng.choice(colors, size=2, replace=False))
        o1, o2 = (str(o) for o in rng.choice(objects, size=2, replace=False))
        if not _separable(vocab, c1, o1, c2, o2):
            continue
        caption = COMPOSITION_TEMPLATE.format(color1=c1, object1=o1, color2=c2, object2=o2)
        regions = [(f"{c1} {o1}", left), (f"{c2} {o2}", right)]
        scenes.append(
            scene_from_boxes(
                caption, regions, size, vocab,
                name=f"composition_{len(scenes):03d}",
                labels=[f"{c1} {o1}", f"{c2} {o2}"],
            )
        )
    logger.info(f"Generated {n} composition scenes ({tries} draws)")
    return scenes


def composition_pairs(scene: SceneSpec) -> List[Tuple[str, str]]:
    """The ``(color, object)`` pairs a composition scene asks for."""
    return [tuple(label.split(" ", 1)) for label in scene.labels]


def street_labelmap(rng: np.random.Generator, size: Tuple[int, int]) -> NDArray[np.int64]:
    """Random street layout over STREET_CLASSES ids: sky band, buildings, tree, road."""
    h, w = size
    labels = np.full((h, w), STREET_CLASSES.index("building"), dtype=np.int64)
    sky = int(h * rng.uniform(0.2, 0.4))
    road = int(h * rng.uniform(0.2, 0.35))
    labels[:sky] = STREET_CLASSES.index("sky")
    labels[h - road :] = STREET_CLASSES.index("road")
    tree_w = int(w * rng.uniform(0.2, 0.35))
    tree_x = int(rng.integers(0, w - tree_w + 1))
    labels[sky : h - road, tree_x : tree_x + tree_w] = STREET_CLASSES.index("tree")
    return labels


def labelmap_benchmark(
    n: int, vocab: Vocabulary, seed: int = 0, size: Tuple[int, int] = (64, 64)
) -> List[SceneSpec]:
    """``n`` street scenes whose regions come from random label maps."""
    require(n >= 1, "benchmark needs at least one scene")
    rng = np.random.default_rng([seed, 3])
    scenes = []
    for i in range(n):
        labels = street_labelmap(rng, size)
        regions = load_labelmap(labels, STREET_CLASSES, vocab)
        caption = CITY_CAPTION_TEMPLATE.format(city=rng.choice(CITIES))
        scenes.append(
            SceneSpec(
                caption=tokenize(caption, vocab),
                regions=tuple(regions),
                image_h=size[0],
                image_w=size[1],
                name=f"street_{i:03d}",
                labels=tuple(r.text for r in regions),
            )
        )
    logger.info(f"Generated {n} label-map scenes")
    return scenes


def label_palette(labels: Sequence[str], vocab: Vocabulary) -> Dict[str, Tuple[float, float, float]]:
    """Rendered color of each label: a concept or a ``"<color> <object>"`` compound.

    Raises:
        EvaluationError: if a label has no palette color.
    """
    palette = {}
    for label in labels:
        words = label.split()
        if len(words) == 2 and words[0] in vocab.attributes:
            palette.update(vocab.compound_palette([(words[0], words[1])]))
        elif label in vocab.concept_palette:
            palette[label] = tuple(vocab.concept_palette[label])
        else:
            raise EvaluationError(f"label '{label}' has no palette color")
    return palette


def scene_palette(scene: SceneSpec, vocab: Vocabulary) -> Dict[str, Tuple[float, float, float]]:
    """Rendered color of every label in the scene."""
    return label_palette(scene.labels or tuple(r.text for r in scene.regions), vocab)


def render_reference(scene: SceneSpec, vocab: Vocabulary) -> NDArray[np.float64]:
    """Ideal rendering: each region in its label color on gray; later regions win."""
    palette = scene_palette(scene, vocab)
    labels = scene.labels or tuple(r.text for r in scene.regions)
    image = np.full((scene.image_h, scene.image_w, 3), BACKGROUND_GRAY, dtype=np.float64)
    for label, region in zip(labels, scene.regions):
        inside = region.mask > 0.5
        image[inside] = palette[label]
    return image


def ground_truth_boxes(scene: SceneSpec, image_id: int = 0) -> List[Detection]:
    """Tight pixel boxes of the scene's region masks."""
    labels = scene.labels or tuple(r.text for r in scene.regions)
    out = []
    for label, region in zip(labels, scene.regions):
        rows = np.flatnonzero((region.mask > 0.5).any(axis=1))
        cols = np.flatnonzero((region.mask > 0.5).any(axis=0))
        if rows.size == 0:
            continue
        box = (float(cols[0]), float(rows[0]), float(cols[-1] + 1), float(rows[-1] + 1))
        out.append(Detection(box=box, concept=label, score=1.0, image=image_id))
    return out


def ground_truth_labels(scene: SceneSpec, classes: Sequence[str]) -> NDArray[np.int64]:
    """Class index per pixel from the scene's regions; uncovered pixels get ``len(classes)``."""
    labels = np.full((scene.image_h, scene.image_w), len(classes), dtype=np.int64)
    for text, region in zip(scene.labels or tuple(r.text for r in scene.regions), scene.regions):
        labels[region.mask > 0.5] = classes.index(text)
    return labels


def score_boxes(
    images: Sequence[NDArray],
    truths: Sequence[Sequence[Detection]],
    palette: Mapping[str, Tuple[float, float, float]],
    min_blob: int = DEFAULT_MIN_BLOB,
) -> Tuple[float, float, float, float]:
    """Detection metrics of a batch; ``truths[i]`` are image ``i``'s boxes."""
    if not images:
        raise EvaluationError("cannot score an empty batch")
    preds, gts = [], []
    for i, (image, truth) in enumerate(zip(images, truths)):
        preds.extend(detect_concepts(image, palette, min_blob, image_id=i))
        gts.extend(Detection(box=d.box, concept=d.concept, score=d.score, image=i) for d in truth)
    return detection_metrics(preds, gts)


def score_labelmaps(
    images: Sequence[NDArray], truths: Sequence[NDArray], classes: Sequence[str], vocab: Vocabulary
) -> Tuple[float, float, float]:
    """Segmentation metrics averaged over the batch."""
    if not images:
        raise EvaluationError("cannot score an empty batch")
    palette = {c: tuple(vocab.concept_palette[c]) for c in classes}
    scores = np.asarray(
        [segmentation_metrics(segment_concepts(img, palette), gt) for img, gt in zip(images, truths)]
    )
    miou, macc, aacc = scores.mean(axis=0)
    return float(miou), float(macc), float(aacc)


def score_composition(
    images: Sequence[NDArray],
    pairs: Sequence[Sequence[Tuple[str, str]]],
    vocab: Vocabulary,
    min_blob: int = DEFAULT_MIN_BLOB,
    score_thresholds: Optional[Sequence[float]] = None,
) -> Tuple[Dict[str, int], Dict[str, float]]:
    """Category counts (no score threshold) and rates averaged over thresholds."""
    if not images:
        raise EvaluationError("cannot score an empty batch")
    thresholds = tuple(score_thresholds) if score_thresholds is not None else SCORE_THRESHOLDS
    counts = category_counts(
        composition_categorize(img, spec, composition_palette(spec, vocab), min_blob)
        for img, spec in zip(images, pairs)
    )
    by_threshold = {
        t: [
            composition_categorize(img, spec, composition_palette(spec, vocab), min_blob, min_score=t)
            for img, spec in zip(images, pairs)
        ]
        for t in thresholds
    }
    return counts, composition_rates(by_threshold)


def score_fidelity(images: Sequence[NDArray], references: Sequence[NDArray]) -> Optional[float]:
    """KID between generated and reference images; None for fewer than 2 each."""
    if len(images) < 2 or len(references) < 2:
        logger.info("Skipping KID: fewer than 2 images per set")
        return None
    return kid([image_features(i) for i in images], [image_features(r) for r in references])
