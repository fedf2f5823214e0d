"""
Benchmark Evaluations

Tests the seeded scene generators and the batch scorers. Ideal renderings
of each scene must score perfectly, which pins down the generators, the
ground truth and the detector together.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.errors import EvaluationError
from cacgen.evaluation import (
    CORRECT,
    STREET_CLASSES,
    box_benchmark,
    composition_benchmark,
    composition_pairs,
    ground_truth_boxes,
    ground_truth_labels,
    label_palette,
    labelmap_benchmark,
    render_reference,
    scene_palette,
    score_boxes,
    score_composition,
    score_fidelity,
    score_labelmaps,
)
from cacgen.services import get_vocabulary


def test_box_benchmark_scenes():
    """Seeded, 2-4 disjoint boxes of distinct objects"""
    vocab = get_vocabulary()
    scenes = box_benchmark(12, vocab, seed=5)
    again = box_benchmark(12, vocab, seed=5)
    objects = set(vocab.object_palette())

    for scene, twin in zip(scenes, again):
        assert scene.caption.tokens == twin.caption.tokens, "generator must be seeded"
        assert all(np.array_equal(a.mask, b.mask) for a, b in zip(scene.regions, twin.regions))
        assert 2 <= scene.region_count <= 4, f"{scene.name} has {scene.region_count} regions"
        assert set(scene.labels) <= objects and len(set(scene.labels)) == scene.region_count
        coverage = sum(r.mask for r in scene.regions)
        assert coverage.max() == 1.0, f"{scene.name} has overlapping boxes"
        assert all(r.mask.mean() >= 0.05 for r in scene.regions), "every box covers at least 5%"

    assert [s.name for s in scenes[:2]] == ["boxes_000", "boxes_001"]

    print("✅ box benchmark scenes are valid")


def test_composition_benchmark_scenes():
    """Left/right compound pairs with separable colors"""
    vocab = get_vocabulary()
    for scene in composition_benchmark(10, vocab, seed=2):
        (c1, o1), (c2, o2) = composition_pairs(scene)
        assert c1 in vocab.attributes and o1 in vocab.object_palette(), f"bad pair in {scene.name}"
        assert scene.caption.text == f"a {c1} {o1} and a {c2} {o2}"
        left, right = (r.mask for r in scene.regions)
        half = scene.image_w // 2
        assert not left[:, half:].any() and not right[:, :half].any(), "first object left, second right"

        palette = scene_palette(scene, vocab)
        colors = np.array(list(palette.values()))
        assert np.linalg.norm(colors[0] - colors[1]) >= 0.7, "requested pairs must be far apart"
        assert np.all(np.linalg.norm(colors - 0.5, axis=1) > 0.25), "colors must stay off the background"

    print("✅ composition benchmark scenes are valid")


def test_labelmap_benchmark_scenes():
    """Street scenes are disjoint class regions"""
    vocab = get_vocabulary()
    for scene in labelmap_benchmark(6, vocab, seed=1):
        assert set(scene.labels) <= set(STREET_CLASSES)
        assert "sky" in scene.labels and "road" in scene.labels, "sky and road bands are always present"
        assert sum(r.mask for r in scene.regions).max() == 1.0, "regions must not overlap"
        assert scene.caption.text.startswith("a street photo in ")

    print("✅ label-map benchmark scenes are valid")


def test_ideal_renderings_score_perfectly():
    """Reference renderings reach the top score of every scorer"""
    vocab = get_vocabulary()

    boxes = box_benchmark(4, vocab, seed=3)
    images = [render_reference(s, vocab) for s in boxes]
    palette = {}
    for scene in boxes:
        palette.update(scene_palette(scene, vocab))
    result = score_boxes(images, [ground_truth_boxes(s) for s in boxes], palette)
    assert result == (1.0, 1.0, 1.0, 1.0), f"ideal boxes should score 1, got {result}"

    streets = labelmap_benchmark(3, vocab, seed=3)
    images = [render_reference(s, vocab) for s in streets]
    truths = [ground_truth_labels(s, STREET_CLASSES) for s in streets]
    assert score_labelmaps(images, truths, STREET_CLASSES, vocab) == (1.0, 1.0, 1.0)

    pairs_scenes = composition_benchmark(3, vocab, seed=3)
    images = [render_reference(s, vocab) for s in pairs_scenes]
    counts, rates = score_composition(images, [composition_pairs(s) for s in pairs_scenes], vocab)
    assert counts[CORRECT] == 3 and rates[CORRECT] == 1.0, f"ideal compositions should be correct: {counts}"

    print("✅ ideal renderings score perfectly")


def test_fidelity_and_empty_batches():
    """KID needs two images per set; empty batches raise"""
    vocab = get_vocabulary()
    refs = [render_reference(s, vocab) for s in box_benchmark(3, vocab, seed=4)]
    assert score_fidelity(refs[:1], refs) is None, "one image is too few for KID"
    value = score_fidelity(refs, [r.copy() for r in refs])
    assert value == score_fidelity(refs[::-1], refs), "KID must not depend on image order"

    with pytest.raises(EvaluationError):
        score_boxes([], [], {"cat": (1.0, 0.5, 0.0)})
    with pytest.raises(EvaluationError):
        score_labelmaps([], [], STREET_CLASSES, vocab)
    with pytest.raises(EvaluationError):
        score_composition([], [], vocab)
    with pytest.raises(EvaluationError):
        label_palette(["photo"], vocab)

    print("✅ fidelity and empty batches hold")


def run_all_benchmark_tests():
    """Run all benchmark tests"""
    print("Running Benchmark Evaluations...")
    print("=" * 50)

    test_box_benchmark_scenes()
    test_composition_benchmark_scenes()
    test_labelmap_benchmark_scenes()
    test_ideal_renderings_score_perfectly()
    test_fidelity_and_empty_batches()

    print("=" * 50)
    print("✅ All benchmark evaluations passed!")


if __name__ == "__main__":
    run_all_benchmark_tests()
