"""
Attention Evaluations

Tests baseline and controlled cross attention against hand-computed values
and a loop-based reference, plus the substring and averaged-output variants,
self attention and attention dumps.
"""

import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.attention import (
    AttentionLayerParams,
    cac_cross_attention,
    compose_average_outputs,
    cross_attention_baseline,
    init_attention_params,
    read_attention_dump,
    self_attention,
    substring_cac_attention,
    write_attention_dump,
    write_heatmaps,
)
from cacgen.errors import ContractViolation
from cacgen.layout import ConcatMask
from cacgen.text import ConcatenatedPrompt


def _scalar_params():
    """h=1, d=1 block over a two-token context, l_O the identity"""
    return AttentionLayerParams(
        layer="toy",
        heads=1,
        query_dim=1,
        value_dim=1,
        model_dim=1,
        context_dim=2,
        height=1,
        width=1,
        w_q=np.array([[1.0]]),
        w_k=np.array([[1.0], [0.0]]),
        w_v=np.array([[2.0], [4.0]]),
        w_o=np.array([[1.0]]),
    )


def _flat_prompt(lambdas):
    n = len(lambdas)
    return ConcatenatedPrompt(
        tokens=tuple(range(n)),
        segments=((0, n),),
        lambdas=np.asarray(lambdas, dtype=np.float64),
        special=(False,) * n,
        pad_id=-1,
    )


def _random_params(rng, heads, query_dim, value_dim, model_dim, context_dim, height, width):
    return AttentionLayerParams(
        layer="rand",
        heads=heads,
        query_dim=query_dim,
        value_dim=value_dim,
        model_dim=model_dim,
        context_dim=context_dim,
        height=height,
        width=width,
        w_q=rng.standard_normal((model_dim, heads * query_dim)),
        w_k=rng.standard_normal((context_dim, heads * query_dim)),
        w_v=rng.standard_normal((context_dim, heads * value_dim)),
        w_o=rng.standard_normal((heads * value_dim, model_dim)),
    )


def _reference(z, context, params, weights, mask, values=None):
    """Loop-by-loop masked, weighted multi-head attention"""
    pixels, tokens = z.shape[0], context.shape[0]
    q = z @ params.w_q
    k = context @ params.w_k
    v = context @ params.w_v if values is None else values
    merged = np.zeros((pixels, params.heads * params.value_dim))
    for r in range(params.heads):
        qs = slice(r * params.query_dim, (r + 1) * params.query_dim)
        vs = slice(r * params.value_dim, (r + 1) * params.value_dim)
        for p in range(pixels):
            scores = [sum(q[p, qs] * k[t, qs]) / np.sqrt(params.query_dim) for t in range(tokens)]
            peak = max(scores)
            exps = [np.exp(s - peak) for s in scores]
            total = sum(exps)
            for t in range(tokens):
                m = exps[t] / total * weights[t] * mask[p, t]
                merged[p, vs] += m * v[t, vs]
    return merged @ params.w_o


def test_hand_computed_examples():
    """Two-token scalar block: baseline 2.538, masked 1.462"""
    params = _scalar_params()
    z = np.array([[1.0]])
    context = np.eye(2)
    e = np.e

    out, record = cross_attention_baseline(z, context, params)
    assert np.allclose(record.maps[0, 0], [e / (e + 1), 1 / (e + 1)]), f"unexpected baseline map {record.maps}"
    assert abs(out[0, 0] - 2.538) < 1e-3, f"expected z_out ~ 2.538, got {out[0, 0]}"

    mask = ConcatMask(layer="toy", height=1, width=1, matrix=np.array([[1.0, 0.0]]))
    out, record = cac_cross_attention(z, _flat_prompt([1, 1]), context, mask, params)
    assert np.allclose(record.maps[0, 0], [e / (e + 1), 0.0]), f"unexpected masked map {record.maps}"
    assert abs(out[0, 0] - 1.462) < 1e-3, f"expected z_out ~ 1.462, got {out[0, 0]}"

    print("✅ hand-computed attention examples hold")


def test_identical_keys_split_evenly():
    """Two identical key rows share attention equally"""
    params = _scalar_params()
    out, record = cross_attention_baseline(np.array([[0.7]]), np.array([[1.0, 0.0], [1.0, 0.0]]), params)
    assert np.allclose(record.maps[0, 0], [0.5, 0.5]), f"unexpected map {record.maps}"

    print("✅ identical keys split attention evenly")


def test_cac_matches_reference():
    """Random instances against the loop-based reference"""
    rng = np.random.default_rng(2024)
    for _ in range(200):
        heads = int(rng.integers(1, 3))
        query_dim, value_dim = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        model_dim, context_dim = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        height, width = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        tokens = int(rng.integers(1, 6))
        params = _random_params(rng, heads, query_dim, value_dim, model_dim, context_dim, height, width)
        z = rng.standard_normal((height * width, model_dim))
        context = rng.standard_normal((tokens, context_dim))
        lambdas = rng.uniform(0.5, 10.0, tokens)
        matrix = (rng.random((height * width, tokens)) < 0.6).astype(np.float64)
        mask = ConcatMask(layer="rand", height=height, width=width, matrix=matrix)

        out, _ = cac_cross_attention(z, _flat_prompt(lambdas), context, mask, params)
        expected = _reference(z, context, params, lambdas, matrix)
        assert np.allclose(out, expected, atol=1e-9), "controlled attention disagrees with the reference"

    print("✅ controlled attention matches the reference on 200 instances")


def test_transparent_edit_is_baseline():
    """All-ones mask and unit lambdas reproduce the baseline bit for bit"""
    rng = np.random.default_rng(5)
    params = _random_params(rng, 2, 3, 2, 4, 6, 3, 2)
    z = rng.standard_normal((6, 4))
    context = rng.standard_normal((5, 6))
    mask = ConcatMask(layer="rand", height=3, width=2, matrix=np.ones((6, 5)))

    base, _ = cross_attention_baseline(z, context, params)
    cac, _ = cac_cross_attention(z, _flat_prompt(np.ones(5)), context, mask, params)
    assert np.array_equal(base, cac), "transparent edit must equal the baseline exactly"

    print("✅ transparent edit reproduces the baseline")


def test_lambda_linearity_and_annihilation():
    """Output is linear in lambda; zero-mask columns carry no value"""
    rng = np.random.default_rng(9)
    params = _random_params(rng, 2, 2, 2, 3, 4, 2, 2)
    z = rng.standard_normal((4, 3))
    context = rng.standard_normal((4, 4))
    matrix = np.ones((4, 4))
    matrix[:, 2] = 0.0
    mask = ConcatMask(layer="rand", height=2, width=2, matrix=matrix)
    lambdas = np.array([1.0, 1.0, 10.0, 1.0])

    out, record = cac_cross_attention(z, _flat_prompt(lambdas), context, mask, params)
    doubled, _ = cac_cross_attention(z, _flat_prompt(2 * lambdas), context, mask, params)
    assert np.allclose(doubled, 2 * out), "scaling every lambda should scale the output"
    assert not record.maps[:, :, 2].any(), "masked-out column must be zero in every head"

    values = context @ params.w_v
    values[2] = rng.standard_normal(values.shape[1]) * 100
    expected = _reference(z, context, params, lambdas, matrix, values=values)
    assert np.allclose(out, expected), "output must not depend on the value row of a masked token"

    print("✅ lambda linearity and annihilation hold")


def test_renormalize_rows():
    """Renormalized rows sum to one unless fully masked"""
    rng = np.random.default_rng(11)
    params = _random_params(rng, 1, 2, 2, 2, 3, 1, 2)
    matrix = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    mask = ConcatMask(layer="rand", height=1, width=2, matrix=matrix)
    _, record = cac_cross_attention(
        rng.standard_normal((2, 2)), _flat_prompt(np.ones(3)), rng.standard_normal((3, 3)), mask, params, renormalize=True
    )
    assert np.isclose(record.maps[0, 0].sum(), 1.0), "kept row should sum to one"
    assert not record.maps[0, 1].any(), "fully masked row stays zero"

    print("✅ renormalization keeps zero rows at zero")


def test_dimension_mismatch_raises():
    """Mismatched z, context or mask raises ContractViolation"""
    params = _scalar_params()
    with pytest.raises(ContractViolation):
        cross_attention_baseline(np.ones((2, 1)), np.eye(2), params)
    with pytest.raises(ContractViolation):
        cross_attention_baseline(np.ones((1, 1)), np.eye(3), params)
    mask = ConcatMask(layer="toy", height=1, width=1, matrix=np.ones((1, 3)))
    with pytest.raises(ContractViolation):
        cac_cross_attention(np.ones((1, 1)), _flat_prompt([1, 1]), np.eye(2), mask, params)

    print("✅ dimension mismatches raise")


def test_substring_variant():
    """No spans, a transparent span and a zero span"""
    rng = np.random.default_rng(3)
    params = _random_params(rng, 2, 2, 2, 3, 4, 2, 2)
    z = rng.standard_normal((4, 3))
    caption = rng.standard_normal((5, 4))
    base, base_record = cross_attention_baseline(z, caption, params)

    out, _ = substring_cac_attention(z, caption, [], params)
    assert np.array_equal(out, base), "no spans should equal the baseline"

    ones = np.zeros((4, 5))
    ones[:, 1:3] = 1.0
    out, _ = substring_cac_attention(z, caption, [ConcatMask("rand", 2, 2, ones, span=(1, 2))], params)
    assert np.array_equal(out, base), "transparent span should equal the baseline"

    zero = ConcatMask("rand", 2, 2, np.zeros((4, 5)), span=(1, 2))
    _, record = substring_cac_attention(z, caption, [zero], params)
    assert not record.maps[:, :, 1:3].any(), "zero-mask span columns must vanish"
    assert np.array_equal(record.maps[:, :, [0, 3, 4]], base_record.maps[:, :, [0, 3, 4]]), "other columns unchanged"

    with pytest.raises(ContractViolation):
        substring_cac_attention(
            z, caption, [ConcatMask("rand", 2, 2, ones, span=(1, 2)), ConcatMask("rand", 2, 2, ones, span=(2, 1))], params
        )

    print("✅ substring variant examples hold")


def test_average_outputs_variant():
    """Averaging reduces to the baseline and to a mean of baselines"""
    rng = np.random.default_rng(4)
    params = _random_params(rng, 1, 2, 2, 3, 4, 2, 1)
    z = rng.standard_normal((2, 3))
    caption = rng.standard_normal((4, 4))
    region = rng.standard_normal((3, 4))
    base, _ = cross_attention_baseline(z, caption, params)
    region_out, _ = cross_attention_baseline(z, region, params)

    assert np.allclose(compose_average_outputs(z, caption, [], params), base), "m=0 should equal the baseline"
    assert np.allclose(compose_average_outputs(z, caption, [caption], params), base), "equal prompts average to one"
    mean = compose_average_outputs(z, caption, [region], params)
    assert np.allclose(mean, (base + region_out) / 2), "two prompts should average their outputs"

    print("✅ averaged-output variant examples hold")


def test_self_attention_single_pixel():
    """One pixel attends only to itself"""
    params = init_attention_params("self", 1, 1, model_dim=8, seed=1)
    z = np.random.default_rng(0).standard_normal((1, 8))
    assert np.allclose(self_attention(z, params), z @ params.w_v @ params.w_o), "1-pixel self attention is l_O(l_V(z))"

    print("✅ single-pixel self attention holds")


def test_attention_dump_and_heatmaps():
    """Records survive the binary dump; heatmaps honor the stride"""
    params = init_attention_params("down0", 4, 4, model_dim=8, context_dim=16, seed=2)
    rng = np.random.default_rng(1)
    records = [
        cross_attention_baseline(rng.standard_normal((16, 8)), rng.standard_normal((6, 16)), params, 0, step)[1]
        for step in (0, 1, 2)
    ]
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "attn.bin"
        written = write_attention_dump(records, path)
        assert written == path.stat().st_size, "reported size should match the file"
        back = read_attention_dump(path)
        assert [(layer, step) for layer, step, _ in back] == [(0, 0), (0, 1), (0, 2)]
        assert np.array_equal(back[1][2], records[1].maps), "maps must be stored exactly"

        pngs = write_heatmaps(records, [1, 2], Path(tmp) / "heat", size=(8, 8), stride=2)
        assert len(pngs) == 4, f"steps 0 and 2 with two columns should give 4 files, got {len(pngs)}"

    print("✅ attention dumps and heatmaps hold")


def run_all_attention_tests():
    """Run all attention tests"""
    print("Running Attention Evaluations...")
    print("=" * 50)

    test_hand_computed_examples()
    test_identical_keys_split_evenly()
    test_cac_matches_reference()
    test_transparent_edit_is_baseline()
    test_lambda_linearity_and_annihilation()
    test_renormalize_rows()
    test_dimension_mismatch_raises()
    test_substring_variant()
    test_average_outputs_variant()
    test_self_attention_single_pixel()
    test_attention_dump_and_heatmaps()

    print("=" * 50)
    print("✅ All attention evaluations passed!")


if __name__ == "__main__":
    run_all_attention_tests()
