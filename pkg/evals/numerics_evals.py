"""
Numerics Evaluations

Tests the dense kernels and grid resampling:
- matmul, softmax_rows and hadamard on hand-checked values
- nearest and bilinear mask resampling
- contract violations on bad shapes
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.errors import ContractViolation
from cacgen.numerics import as_matrix, hadamard, matmul, resize_grid, resize_mask, softmax_rows


def test_matmul_examples():
    """Identity, hand product and annihilator cases"""
    a = as_matrix([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert np.array_equal(matmul(np.eye(3), a), a), "I x A should equal A"
    assert np.array_equal(matmul([[1, 2], [3, 4]], [[0], [1]]), [[2], [4]]), "hand product mismatch"
    assert np.array_equal(matmul(np.zeros((3, 3)), a), np.zeros((3, 3))), "0 x A should be 0"

    with pytest.raises(ContractViolation):
        matmul(np.ones((2, 3)), np.ones((2, 3)))

    print("✅ matmul examples hold")


def test_matmul_associativity():
    """(AB)C and A(BC) agree on small random matrices"""
    rng = np.random.default_rng(12)
    for _ in range(50):
        n, k, m, p = rng.integers(1, 7, size=4)
        a, b, c = rng.standard_normal((n, k)), rng.standard_normal((k, m)), rng.standard_normal((m, p))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert left.shape == (n, p) and np.max(np.abs(left - right)) < 1e-9, "matmul should be associative"

    print("✅ matmul associativity holds")


def test_softmax_rows_examples():
    """Symmetry, closed form and shift invariance"""
    assert np.allclose(softmax_rows([[0.0, 0.0]]), [[0.5, 0.5]], atol=1e-15), "[0,0] should give 0.5/0.5"
    out = softmax_rows([[math.log(2.0), 0.0]])
    assert np.allclose(out, [[2 / 3, 1 / 3]], atol=1e-12), f"[ln2, 0] gave {out}"
    for c in (-1e6, -3.0, 0.0, 7.5, 1e6):
        assert np.allclose(softmax_rows([[c] * 4]), [[0.25] * 4], atol=1e-12), f"constant row {c} not uniform"

    rng = np.random.default_rng(0)
    logits = rng.standard_normal((6, 9)) * 20
    probs = softmax_rows(logits)
    assert np.all(np.abs(probs.sum(axis=1) - 1.0) < 1e-9), "rows must sum to 1"
    shifted = softmax_rows(logits + rng.standard_normal((6, 1)) * 5)
    assert np.allclose(probs, shifted, atol=1e-12), "softmax must ignore per-row shifts"

    print("✅ softmax_rows examples hold")


def test_hadamard_examples():
    """Identity, annihilator and hand product"""
    a = as_matrix([[1, 2], [3, 4]])
    assert np.array_equal(hadamard(a, np.ones((2, 2))), a), "A . ones should equal A"
    assert np.array_equal(hadamard(a, np.zeros((2, 2))), np.zeros((2, 2))), "A . zeros should be 0"
    assert np.array_equal(hadamard(a, [[0, 1], [1, 0]]), [[0, 2], [3, 0]]), "hand product mismatch"

    with pytest.raises(ContractViolation):
        hadamard(a, np.ones((2, 3)))

    print("✅ hadamard examples hold")


def test_resize_mask_examples():
    """Block-aligned downsampling, constants and nearest upsampling"""
    quad = np.zeros((4, 4))
    quad[:2, :2] = 1.0
    assert np.array_equal(resize_mask(quad, 2, 2), [[1, 0], [0, 0]]), "quadrant should downsample to one cell"
    assert np.array_equal(resize_mask(np.ones((64, 64)), 8, 8), np.ones((8, 8))), "ones must stay ones"
    assert np.array_equal(resize_mask(np.zeros((64, 64)), 8, 8, "bilinear"), np.zeros((8, 8))), "zeros must stay zeros"
    assert np.array_equal(resize_mask(np.ones((5, 7)), 13, 3, "bilinear"), np.ones((13, 3))), "bilinear must keep constants"

    up = resize_mask(np.array([[1.0, 0.0], [0.0, 0.0]]), 4, 4)
    assert np.array_equal(up, quad), "nearest upsampling should fill the top-left quadrant exactly"

    rng = np.random.default_rng(3)
    binary = (rng.random((17, 23)) > 0.5).astype(float)
    out = resize_mask(binary, 9, 31)
    assert set(np.unique(out)) <= {0.0, 1.0}, "nearest mode must preserve binarity"
    assert np.array_equal(resize_mask(binary, 17, 23), binary), "same-size resize must be the identity"

    soft = resize_mask(rng.random((8, 8)), 3, 5, "bilinear")
    assert soft.min() >= 0.0 and soft.max() <= 1.0, "bilinear output must stay in [0, 1]"

    with pytest.raises(ContractViolation):
        resize_mask(binary, 0, 4)

    print("✅ resize_mask examples hold")


def test_resize_grid_carries_channels():
    """Trailing channels are resized independently"""
    grid = np.stack([np.ones((4, 4)), np.zeros((4, 4)), np.full((4, 4), 0.25)], axis=-1)
    out = resize_grid(grid, 8, 2, "bilinear")
    assert out.shape == (8, 2, 3), f"unexpected shape {out.shape}"
    assert np.allclose(out[..., 0], 1.0) and np.allclose(out[..., 1], 0.0) and np.allclose(out[..., 2], 0.25)

    print("✅ resize_grid keeps channels apart")


def run_all_numerics_tests():
    """Run all numerics tests"""
    print("Running Numerics Evaluations...")
    print("=" * 50)

    test_matmul_examples()
    test_matmul_associativity()
    test_softmax_rows_examples()
    test_hadamard_examples()
    test_resize_mask_examples()
    test_resize_grid_carries_channels()

    print("=" * 50)
    print("✅ All numerics evaluations passed!")


if __name__ == "__main__":
    run_all_numerics_tests()
