"""
Layout Evaluations

Tests box rasterization, the two-object layout, mask pyramids, the
concatenated and substring attention masks, label maps and scene files.
"""

import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.errors import ContractViolation, LayoutError, SceneSchemaError
from cacgen.layout import (
    assemble_concat_mask,
    assemble_substring_mask,
    box_to_pixels,
    build_mask_pyramid,
    load_labelmap,
    parse_scene,
    rasterize_box,
    scene_from_boxes,
    scene_labels,
    two_object_layout,
)
from cacgen.services import get_vocabulary
from cacgen.text import concat_prompts, tokenize

LEVELS = [("down0", 64, 64), ("down1", 32, 32), ("mid", 16, 16)]


def test_rasterize_box_examples():
    """Full cover, quadrant cover and a box missing every pixel center"""
    assert np.array_equal(rasterize_box([0, 0, 1, 1], 4, 4), np.ones((4, 4))), "full box should cover all"

    quadrant = np.zeros((4, 4))
    quadrant[:2, :2] = 1.0
    assert np.array_equal(rasterize_box([0, 0, 0.5, 0.5], 4, 4), quadrant), "center-in test should give a quadrant"

    with pytest.raises(LayoutError):
        rasterize_box([0.49, 0.49, 0.51, 0.51], 2, 2)
    with pytest.raises(ContractViolation):
        rasterize_box([0.5, 0.0, 0.2, 1.0], 4, 4)

    assert box_to_pixels([0.25, 0.25, 0.75, 0.75], 8, 8) == (2, 2, 6, 6), "pixel bounds should be tight"
    assert box_to_pixels([0, 0, 1, 0.5], 4, 6) == (0, 0, 6, 2)

    print("✅ rasterize_box examples hold")


def test_two_object_layout_examples():
    """Margin arithmetic, exact halves and the infeasible case"""
    left, right = two_object_layout(512, 512, margin=40)
    assert np.allclose(np.array(left) * 512, [40, 40, 216, 472]), f"unexpected left box {left}"
    assert np.allclose(np.array(right) * 512, [296, 40, 472, 472]), f"unexpected right box {right}"

    left, right = two_object_layout(512, 512, margin=0)
    assert left == (0.0, 0.0, 0.5, 1.0) and right == (0.5, 0.0, 1.0, 1.0), "margin 0 should give halves"

    with pytest.raises(LayoutError):
        two_object_layout(128, 128, margin=70)

    print("✅ two_object_layout examples hold")


def test_mask_pyramid_examples():
    """Constant, quadrant and single-pixel masks across levels"""
    ones = build_mask_pyramid(np.ones((64, 64)), LEVELS)
    assert all(np.array_equal(ones.level(name), np.ones((h, w))) for name, h, w in LEVELS)

    quadrant = np.zeros((64, 64))
    quadrant[:32, :32] = 1.0
    pyramid = build_mask_pyramid(quadrant, LEVELS)
    for name, h, w in LEVELS:
        level = pyramid.level(name)
        assert level[: h // 2, : w // 2].all() and level.sum() == h * w / 4, f"quadrant lost at {name}"
        assert pyramid.positive_fraction(name) == 0.25

    with pytest.raises(LayoutError):
        pyramid.level("up0")

    print("✅ mask pyramid examples hold")


def test_single_pixels_survive_every_level():
    """Every single-pixel mask keeps exactly one positive cell at its mapped index"""
    for (h, w), (lh, lw) in [((64, 64), (8, 8)), ((17, 23), (5, 7)), ((32, 32), (16, 16))]:
        missed = []
        for r in range(h):
            for c in range(w):
                dot = np.zeros((h, w))
                dot[r, c] = 1.0
                level = build_mask_pyramid(dot, [("l", lh, lw)]).level("l")
                cell = (r * lh // h, c * lw // w)
                if level.sum() != 1.0 or level[cell] != 1.0:
                    missed.append((r, c))
        assert not missed, f"{len(missed)}/{h * w} pixels lost at {lh}x{lw}, e.g. {missed[:3]}"

    print("✅ single pixels survive every level")


def test_pyramid_fraction_within_edge_band():
    """Each level's positive fraction stays within the band of cells on a region edge"""
    rng = np.random.default_rng(8)
    for _ in range(25):
        x0, y0 = rng.uniform(0.0, 0.7, size=2)
        x1, y1 = x0 + rng.uniform(0.02, 0.3), y0 + rng.uniform(0.02, 0.3)
        mask = rasterize_box([x0, y0, x1, y1], 64, 64)
        original = float(mask.mean())
        pyramid = build_mask_pyramid(mask, LEVELS + [("low", 8, 8)])
        for name, h, w in LEVELS + [("low", 8, 8)]:
            blocks = mask.reshape(h, 64 // h, w, 64 // w)
            band = int(np.count_nonzero(blocks.max(axis=(1, 3)) != blocks.min(axis=(1, 3))))
            fraction = pyramid.positive_fraction(name)
            assert original <= fraction <= original + band / (h * w) + 1e-12, (
                f"fraction {fraction} at {name} outside [{original}, {original} + {band} edge cells]"
            )
            assert set(np.unique(pyramid.level(name))) <= {0.0, 1.0}, "binary masks must stay binary"

    print("✅ pyramid fractions stay within the edge band")


def test_concat_mask_example():
    """4x7 mask for caption len 4 and one three-token region"""
    vocab = get_vocabulary()
    prompt = concat_prompts(tokenize("a dog", vocab), [tokenize("cat", vocab)], vocab=vocab)
    pyramid = build_mask_pyramid(np.array([[1.0, 0.0], [0.0, 0.0]]), [("l", 2, 2)])
    mask = assemble_concat_mask([pyramid], prompt, "l")

    assert mask.matrix.shape == (4, 7), f"unexpected mask shape {mask.matrix.shape}"
    expected = np.ones((4, 7))
    expected[:, 5] = [1, 0, 0, 0]
    assert np.array_equal(mask.matrix, expected), f"unexpected mask\n{mask.matrix}"

    bare = assemble_concat_mask([], concat_prompts(tokenize("a dog", vocab), [], vocab=vocab), "l", dims=(2, 2))
    assert np.array_equal(bare.matrix, np.ones((4, 4))), "m=0 should give all ones over the caption"

    with pytest.raises(LayoutError):
        assemble_concat_mask([], concat_prompts(tokenize("a dog", vocab), [], vocab=vocab), "l")
    with pytest.raises(LayoutError):
        assemble_concat_mask([pyramid], prompt, "missing")

    print("✅ concatenated mask example holds")


def test_concat_mask_identical_regions():
    """Two regions with the same mask give identical column blocks"""
    vocab = get_vocabulary()
    caption = tokenize("a photo of a room", vocab)
    regions = [tokenize("red cat", vocab), tokenize("blue dog", vocab)]
    prompt = concat_prompts(caption, regions, pad_to=16, vocab=vocab)
    pyramid = build_mask_pyramid(rasterize_box([0, 0, 0.5, 1], 8, 8), [("l", 4, 4)])
    matrix = assemble_concat_mask([pyramid, pyramid], prompt, "l").matrix

    first = [k for k in prompt.region_content_columns(1)]
    second = [k for k in prompt.region_content_columns(2)]
    assert np.array_equal(matrix[:, first], matrix[:, second]), "identical masks should give identical blocks"
    assert not matrix[:, prompt.unpadded_length :].any(), "PAD columns must be zero"

    print("✅ identical regions give identical blocks")


def test_concat_mask_follows_region_order():
    """Reordering regions reorders the column blocks and nothing else"""
    vocab = get_vocabulary()
    caption = tokenize("a photo of a room", vocab)
    regions = [tokenize("red cat", vocab), tokenize("blue car", vocab), tokenize("dog", vocab)]
    boxes = [[0, 0, 0.5, 0.5], [0.25, 0.25, 1, 1], [0.6, 0, 1, 0.4]]
    pyramids = [build_mask_pyramid(rasterize_box(b, 16, 16), LEVELS[-1:]) for b in boxes]
    layer = LEVELS[-1][0]

    prompt = concat_prompts(caption, regions, vocab=vocab)
    matrix = assemble_concat_mask(pyramids, prompt, layer).matrix
    order = [2, 0, 1]
    shuffled_prompt = concat_prompts(caption, [regions[i] for i in order], vocab=vocab)
    shuffled = assemble_concat_mask([pyramids[i] for i in order], shuffled_prompt, layer).matrix

    def block(m, p, segment):
        start, end = p.segments[segment]
        return m[:, start:end]

    assert np.array_equal(block(matrix, prompt, 0), block(shuffled, shuffled_prompt, 0)), "caption block moved"
    for new, old in enumerate(order, start=1):
        assert np.array_equal(block(shuffled, shuffled_prompt, new), block(matrix, prompt, old + 1)), (
            f"region {old} block changed after reordering"
        )

    print("✅ concatenated mask follows region order")


def test_substring_mask_examples():
    """Span columns carry the mask, every other column is zero"""
    quadrant = build_mask_pyramid(np.array([[1.0, 0.0], [0.0, 0.0]]), [("l", 2, 2)])
    mask = assemble_substring_mask(quadrant, (2, 1), caption_len=5, layer="l")
    assert mask.span == (2, 1)
    assert np.array_equal(mask.matrix[:, 2], [1, 0, 0, 0]), "span column should be the flattened quadrant"
    assert not np.delete(mask.matrix, 2, axis=1).any(), "columns outside the span must be zero"

    full = build_mask_pyramid(np.ones((2, 2)), [("l", 2, 2)])
    assert np.array_equal(assemble_substring_mask(full, (0, 5), 5, "l").matrix, np.ones((4, 5)))

    with pytest.raises(ContractViolation):
        assemble_substring_mask(full, (4, 2), 5, "l")

    print("✅ substring mask examples hold")


def test_load_labelmap_examples():
    """Uniform, half-half and tiny classes"""
    vocab = get_vocabulary()
    classes = ["road", "sky", "tree"]

    regions = load_labelmap(np.zeros((10, 10), dtype=np.int64), classes, vocab)
    assert len(regions) == 1 and regions[0].text == "road" and regions[0].mask.all()

    halves = np.zeros((10, 10), dtype=np.int64)
    halves[:, 5:] = 1
    road, sky = load_labelmap(halves, classes, vocab)
    assert np.array_equal(road.mask + sky.mask, np.ones((10, 10))), "masks should be complementary"

    speck = np.zeros((10, 10), dtype=np.int64)
    speck[0, 0] = 2
    names = [r.text for r in load_labelmap(speck, classes, vocab, min_area_fraction=0.05)]
    assert names == ["road"], f"1% class should be dropped, got {names}"

    with pytest.raises(LayoutError):
        load_labelmap(np.full((4, 4), 7), classes, vocab)

    print("✅ label map examples hold")


def test_parse_scene_files():
    """Caption-only, box regions and schema violations"""
    vocab = get_vocabulary()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        bare = tmp / "bare.json"
        bare.write_text(json.dumps({"caption": "a photo of a room", "size": [16, 16]}))
        scene = parse_scene(bare, vocab)
        assert scene.region_count == 0 and scene.name == "bare"

        boxes = tmp / "boxes.json"
        boxes.write_text(
            json.dumps(
                {
                    "caption": "a photo of a room",
                    "size": [8, 8],
                    "regions": [{"prompt": "cat", "box": [0, 0, 0.5, 0.5]}],
                    "lambda_region": 5,
                }
            )
        )
        scene = parse_scene(boxes, vocab)
        assert scene.region_count == 1 and scene.lambda_region == 5.0
        assert np.array_equal(scene.regions[0].mask, rasterize_box([0, 0, 0.5, 0.5], 8, 8))

        broken = tmp / "broken.json"
        broken.write_text(json.dumps({"caption": "a room", "size": [8, 8], "regions": [{"prompt": "cat"}]}))
        with pytest.raises(SceneSchemaError) as err:
            parse_scene(broken, vocab)
        assert "regions.0" in str(err.value), "schema error should name the offending field"

        with pytest.raises(SceneSchemaError):
            parse_scene(tmp / "missing.json", vocab)

    boxes = [("cat", [0, 0, 0.5, 1]), ("dog", [0.5, 0, 1, 1])]
    assert scene_labels(scene_from_boxes("a room", boxes, (8, 8), vocab)) == {0: "cat", 1: "dog"}
    labelled = scene_from_boxes("a room", boxes, (8, 8), vocab, labels=("pet", "animal"))
    assert scene_labels(labelled) == {0: "pet", 1: "animal"}
    assert scene_labels(labelled.permuted([1, 0])) == {0: "animal", 1: "pet"}

    print("✅ scene files parse and validate")


def run_all_layout_tests():
    """Run all layout tests"""
    print("Running Layout Evaluations...")
    print("=" * 50)

    test_rasterize_box_examples()
    test_two_object_layout_examples()
    test_mask_pyramid_examples()
    test_single_pixels_survive_every_level()
    test_pyramid_fraction_within_edge_band()
    test_concat_mask_example()
    test_concat_mask_identical_regions()
    test_concat_mask_follows_region_order()
    test_substring_mask_examples()
    test_load_labelmap_examples()
    test_parse_scene_files()

    print("=" * 50)
    print("✅ All layout evaluations passed!")


if __name__ == "__main__":
    run_all_layout_tests()
