"""
Metrics Evaluations

Tests the oracle detector and every score the evaluation module reports:
- detect_concepts, iou and detection_metrics
- segmentation_metrics
- kid
- composition categories and rates
- attention mass inside region masks
- ground-truth files and the metrics report
"""

import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.attention import cac_cross_attention, cross_attention_baseline, init_attention_params
from cacgen.errors import EvaluationError, SceneSchemaError
from cacgen.evaluation import (
    CORRECT,
    MISSING_OBJECT,
    WRONG_COLOR,
    Detection,
    MetricsReport,
    attention_mass_in_mask,
    category_counts,
    composition_categorize,
    composition_palette,
    composition_rates,
    detect_concepts,
    detection_metrics,
    image_features,
    iou,
    kid,
    load_ground_truth,
    segment_concepts,
    segmentation_metrics,
)
from cacgen.layout import assemble_concat_mask, build_mask_pyramid
from cacgen.services import get_vocabulary
from cacgen.text import concat_prompts, embed_tokens, tokenize

PALETTE = {"red": (1.0, 0.0, 0.0), "blue": (0.0, 0.0, 1.0)}


def _paint(image, rows, cols, color):
    image[rows[0] : rows[1], cols[0] : cols[1]] = color
    return image


def test_detect_concepts_examples():
    """Solid frames, gray images and two squares"""
    solid = np.tile(np.array(PALETTE["red"]), (8, 8, 1))
    found = detect_concepts(solid, PALETTE, min_blob=4)
    assert len(found) == 1 and found[0].box == (0.0, 0.0, 8.0, 8.0), f"unexpected detections {found}"
    assert found[0].concept == "red" and found[0].score == 1.0

    gray = np.full((8, 8, 3), 0.5)
    assert detect_concepts(gray, PALETTE, min_blob=1) == [], "gray is too far from every palette color"

    image = np.full((16, 16, 3), 0.5)
    _paint(image, (2, 6), (2, 6), PALETTE["red"])
    _paint(image, (8, 14), (9, 15), PALETTE["blue"])
    boxes = {d.concept: d.box for d in detect_concepts(image, PALETTE, min_blob=16)}
    assert boxes == {"red": (2.0, 2.0, 6.0, 6.0), "blue": (9.0, 8.0, 15.0, 14.0)}, f"unexpected boxes {boxes}"

    small = detect_concepts(image, PALETTE, min_blob=17)
    assert [d.concept for d in small] == ["blue"], "blobs below min_blob should be dropped"

    print("✅ detect_concepts examples hold")


def test_iou_examples():
    """Identity, disjointness and the 1/7 overlap"""
    assert iou([0, 0, 2, 2], [0, 0, 2, 2]) == 1.0
    assert iou([0, 0, 1, 1], [2, 2, 3, 3]) == 0.0
    assert abs(iou([0, 0, 2, 2], [1, 1, 3, 3]) - 1 / 7) < 1e-12, "overlap should be 1/7"
    assert iou([0, 0, 4, 4], [0, 0, 2, 2]) < iou([0, 0, 3, 3], [0, 0, 2, 2]), "shrinking the union raises IoU"

    print("✅ iou examples hold")


def test_detection_metrics_examples():
    """Exact predictions, no predictions and an IoU-0.6 threshold sweep"""
    gts = [Detection((0, 0, 10, 10), "cat"), Detection((20, 20, 30, 30), "dog"), Detection((0, 0, 8, 8), "cat", image=1)]
    assert detection_metrics(gts, gts) == (1.0, 1.0, 1.0, 1.0), "exact predictions should score 1"
    assert detection_metrics([], gts) == (0.0, 0.0, 0.0, 0.0), "no predictions should score 0"

    gt = [Detection((0, 0, 10, 10), "cat")]
    pred = [Detection((0, 0, 10, 6), "cat")]
    p, r, map50, map50_95 = detection_metrics(pred, gt)
    assert (p, r, map50) == (1.0, 1.0, 1.0), "IoU 0.6 counts at 0.5"
    assert abs(map50_95 - 0.3) < 1e-12, f"IoU 0.6 counts at 0.5, 0.55 and 0.6 only, got {map50_95}"

    wrong_class = [Detection((0, 0, 10, 10), "dog")]
    assert detection_metrics(wrong_class, gt)[:2] == (0.0, 0.0), "class must match"

    print("✅ detection_metrics examples hold")


def test_detection_metrics_properties():
    """Prediction order does not matter; duplicates never raise precision"""
    rng = np.random.default_rng(0)
    gts = [Detection((x, x, x + 10, x + 10), "cat") for x in (0, 20, 40)]
    preds = [
        Detection((x + dx, x, x + 10 + dx, x + 10), "cat", score=float(s))
        for x, dx, s in zip((0, 20, 40, 60), (0, 2, 5, 0), (0.9, 0.8, 0.7, 0.6))
    ]
    base = detection_metrics(preds, gts)
    for _ in range(5):
        shuffled = [preds[i] for i in rng.permutation(len(preds))]
        assert detection_metrics(shuffled, gts) == base, "metrics must not depend on prediction order"

    duplicated = preds + [Detection(gts[0].box, "cat", score=0.5)]
    assert detection_metrics(duplicated, gts)[0] <= base[0], "a duplicate must not increase precision"

    print("✅ detection_metrics properties hold")


def test_segmentation_metrics_examples():
    """Perfect, complementary and half-correct label maps"""
    gt = np.array([[0, 0, 1, 1]])
    assert segmentation_metrics(gt, gt) == (1.0, 1.0, 1.0)
    assert segmentation_metrics(1 - gt, gt) == (0.0, 0.0, 0.0)

    miou, macc, aacc = segmentation_metrics(np.array([[1, 0, 0, 1]]), gt)
    assert abs(miou - 1 / 3) < 1e-12 and macc == 0.5 and aacc == 0.5, f"got {(miou, macc, aacc)}"

    balanced = np.array([[0, 0, 1, 1, 2, 2]])
    pred = np.array([[0, 1, 1, 2, 2, 0]])
    _, macc, aacc = segmentation_metrics(pred, balanced)
    assert abs(macc - aacc) < 1e-12, "balanced confusions should give mACC == aACC"

    print("✅ segmentation_metrics examples hold")


def test_segment_concepts_and_features():
    """Palette label maps and area-averaged KID features"""
    image = np.zeros((4, 6, 3))
    _paint(image, (0, 4), (0, 2), PALETTE["red"])
    _paint(image, (0, 4), (2, 4), PALETTE["blue"])
    labels = segment_concepts(image, PALETTE)
    expected = np.tile(np.array([0, 0, 1, 1, 2, 2]), (4, 1))
    assert np.array_equal(labels, expected), "unmatched pixels should take the extra class id"
    assert segmentation_metrics(labels, expected) == (1.0, 1.0, 1.0)

    image = np.zeros((8, 8, 3))
    _paint(image, (0, 4), (0, 8), PALETTE["red"])
    feats = image_features(image).reshape(4, 4, 3)
    assert feats.shape == (4, 4, 3) and image_features(image).shape == (48,)
    assert np.array_equal(feats[:2, :, 0], np.ones((2, 4))) and np.array_equal(feats[2:], np.zeros((2, 4, 3)))

    flat = np.full((6, 10, 3), 0.25)
    assert np.allclose(image_features(flat), 0.25), "constant images should give constant features"

    print("✅ segment_concepts and image_features examples hold")


def _brute_kid(a, b):
    def k(x, y):
        return (np.dot(x, y) / len(x) + 1.0) ** 3

    m, n = len(a), len(b)
    aa = sum(k(a[i], a[j]) for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
    bb = sum(k(b[i], b[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    ab = sum(k(a[i], b[j]) for i in range(m) for j in range(n)) / (m * n)
    return aa + bb - 2 * ab


def test_kid_examples():
    """Constant features, brute force, symmetry and permutation"""
    const = np.full((4, 6), 0.3)
    assert abs(kid(const, const)) < 1e-12, "constant features should give 0"

    a = np.array([[0.1, 0.9, 0.3], [0.7, 0.2, 0.5]])
    b = np.array([[0.4, 0.4, 0.8], [0.0, 1.0, 0.6]])
    assert abs(kid(a, b) - _brute_kid(a, b)) <= 1e-12, "kid should match the double loop"

    rng = np.random.default_rng(1)
    x, y = rng.random((6, 12)), rng.random((5, 12)) * 0.5
    assert kid(x, y) == kid(y, x), "kid must be exactly symmetric"
    assert kid(x[::-1], y[[4, 2, 0, 1, 3]]) == kid(x, y), "kid must not depend on sample order"
    assert kid(x, y) > 0, "shifted sets should be far apart"

    large = rng.random((200, 12))
    assert abs(kid(large, large.copy())) < 1e-2, "equal multisets should score near zero"

    with pytest.raises(EvaluationError):
        kid(x[:1], y)

    print("✅ kid examples hold")


def test_composition_categories():
    """Correct, missing-object and wrong-color generations"""
    vocab = get_vocabulary()
    spec = [("blue", "backpack"), ("red", "chair")]
    palette = composition_palette(spec, vocab)
    assert set(palette) == {"blue backpack", "red backpack", "blue chair", "red chair"}

    def render(left, right):
        image = np.zeros((64, 64, 3))
        if left:
            _paint(image, (8, 56), (6, 26), palette[left])
        if right:
            _paint(image, (8, 56), (38, 58), palette[right])
        return image

    assert composition_categorize(render("blue backpack", "red chair"), spec, palette) == CORRECT
    assert composition_categorize(render("blue backpack", None), spec, palette) == MISSING_OBJECT
    assert composition_categorize(render("red backpack", "blue chair"), spec, palette) == WRONG_COLOR

    rates = composition_rates({0.6: [CORRECT, WRONG_COLOR], 0.7: [CORRECT, CORRECT]})
    assert rates == {MISSING_OBJECT: 0.0, WRONG_COLOR: 0.25, CORRECT: 0.75}, f"unexpected rates {rates}"
    assert category_counts([CORRECT, CORRECT]) == {MISSING_OBJECT: 0, WRONG_COLOR: 0, CORRECT: 2}
    with pytest.raises(EvaluationError):
        category_counts(["unknown"])
    with pytest.raises(EvaluationError):
        composition_rates({})

    print("✅ composition categories hold")


def _pixel_category(image, spec, palette, min_blob=16):
    present = set()
    for label, color in palette.items():
        if np.count_nonzero(np.all(image == np.asarray(color), axis=-1)) >= min_blob:
            present.add(tuple(label.split(" ", 1)))
    if any(obj not in {o for _, o in present} for _, obj in spec):
        return MISSING_OBJECT
    if any(tuple(pair) not in present for pair in spec):
        return WRONG_COLOR
    return CORRECT


def _separable_spec(vocab, rng):
    colors = sorted(vocab.attributes)
    objects = sorted(vocab.object_palette())
    while True:
        c1, c2 = rng.choice(colors, size=2, replace=False)
        o1, o2 = rng.choice(objects, size=2, replace=False)
        spec = [(str(c1), str(o1)), (str(c2), str(o2))]
        palette = composition_palette(spec, vocab)
        colors_arr = np.array(list(palette.values()))
        gaps = np.linalg.norm(colors_arr[:, None] - colors_arr[None], axis=-1)[np.triu_indices(len(palette), 1)]
        if gaps.min() > 0.5 and np.linalg.norm(colors_arr, axis=-1).min() > 0.25:
            return spec, palette


def test_composition_matches_pixel_oracle():
    """Categories agree with exact-color pixel counting on random layouts"""
    vocab = get_vocabulary()
    rng = np.random.default_rng(17)
    seen = set()
    for _ in range(120):
        spec, palette = _separable_spec(vocab, rng)
        labels = list(palette)
        image = np.zeros((48, 48, 3))
        for col0 in (0, 24):
            pick = rng.integers(0, len(labels) + 1)
            if pick == len(labels):
                continue
            h, w = rng.integers(5, 41), rng.integers(5, 21)
            top, left = rng.integers(0, 48 - h + 1), col0 + rng.integers(0, 24 - w + 1)
            image[top : top + h, left : left + w] = palette[labels[pick]]
        for _ in range(5):
            r, c = rng.integers(0, 48, size=2)
            image[r, c] = palette[labels[rng.integers(0, len(labels))]]

        expected = _pixel_category(image, spec, palette)
        got = composition_categorize(image, spec, palette)
        assert got == expected, f"categorizer said {got}, pixel count says {expected} for {spec}"
        seen.add(got)
    assert seen == {CORRECT, WRONG_COLOR, MISSING_OBJECT}, f"random layouts should hit every category, saw {seen}"

    print("✅ composition categories match the pixel oracle")


def _attention_setup(mask):
    vocab = get_vocabulary()
    prompt = concat_prompts(tokenize("a dog", vocab), [tokenize("cat", vocab)], vocab=vocab)
    pyramid = build_mask_pyramid(mask, [("l", 2, 2)])
    params = init_attention_params("l", 2, 2, model_dim=8, context_dim=vocab.embed_dim, seed=4)
    embeds = embed_tokens(prompt.tokens, vocab)
    z = np.random.default_rng(6).standard_normal((4, 8))
    return prompt, pyramid, params, embeds, z


def test_attention_mass_in_mask():
    """CAC keeps all region mass inside; baseline matches a summation oracle"""
    quadrant = np.array([[1.0, 0.0], [0.0, 0.0]])
    prompt, pyramid, params, embeds, z = _attention_setup(quadrant)
    mask = assemble_concat_mask([pyramid], prompt, "l")
    _, cac_record = cac_cross_attention(z, prompt, embeds, mask, params)
    assert attention_mass_in_mask([cac_record], prompt, [pyramid]) == 1.0, "CAC mass should stay inside"

    _, base_record = cross_attention_baseline(z, embeds, params)
    column = base_record.maps[:, :, 5]
    expected = column[:, 0].sum() / column.sum()
    value = attention_mass_in_mask([base_record], prompt, [pyramid])
    assert abs(value - expected) < 1e-12 and value < 0.5, f"baseline mass {value} vs oracle {expected}"

    prompt, pyramid, params, embeds, z = _attention_setup(np.ones((2, 2)))
    _, record = cross_attention_baseline(z, embeds, params)
    assert attention_mass_in_mask([record], prompt, [pyramid]) == 1.0, "all-ones masks hold all mass"

    with pytest.raises(EvaluationError):
        attention_mass_in_mask([], prompt, [pyramid])

    print("✅ attention mass diagnostics hold")


def test_report_and_ground_truth_files():
    """Report bounds and ground-truth file validation"""
    report = MetricsReport(images=2, precision=1.0, recall=0.5, kid=-1e-4)
    assert report.kid == -1e-4, "small negative KID is reported as-is"
    with pytest.raises(ValueError):
        MetricsReport(images=1, kid=-0.5)
    with pytest.raises(ValueError):
        MetricsReport(images=1, precision=1.5)

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "gt.json"
        path.write_text(json.dumps({"kind": "boxes", "scenes": {"s": {"boxes": [{"concept": "cat", "box": [0, 0, 4, 4]}]}}}))
        truth = load_ground_truth(path)
        assert truth.scenes["s"].boxes[0].concept == "cat"

        path.write_text(json.dumps({"kind": "sketch", "scenes": {}}))
        with pytest.raises(SceneSchemaError):
            load_ground_truth(path)
        with pytest.raises(EvaluationError):
            load_ground_truth(Path(tmp) / "missing.json")

        saved = report.save(Path(tmp) / "metrics.json")
        assert json.loads(saved.read_text())["recall"] == 0.5

    print("✅ report and ground-truth files hold")


def run_all_metrics_tests():
    """Run all metrics tests"""
    print("Running Metrics Evaluations...")
    print("=" * 50)

    test_detect_concepts_examples()
    test_iou_examples()
    test_detection_metrics_examples()
    test_detection_metrics_properties()
    test_segmentation_metrics_examples()
    test_segment_concepts_and_features()
    test_kid_examples()
    test_composition_categories()
    test_composition_matches_pixel_oracle()
    test_attention_mass_in_mask()
    test_report_and_ground_truth_files()

    print("=" * 50)
    print("✅ All metrics evaluations passed!")


if __name__ == "__main__":
    run_all_metrics_tests()
