"""Offset rotation, kernel patterns, and output block unrotation."""

import numpy as np
import pytest

from lutpool import (
    DIAGONAL_PATTERN,
    KernelPattern,
    OrientationSet,
    PATTERNS,
    RealLut,
    SQUARE_PATTERN,
    WYE_PATTERN,
    bake_real,
    block_permutation,
    lattice_size,
    oriented_predictions,
    rotate_offset,
    rotate_patch,
    unrotate_output,
)


class TestRotateOffset:
    def test_quarter_turns(self):
        assert rotate_offset((0, 1), 1) == (-1, 0)
        assert rotate_offset((0, 1), 2) == (0, -1)
        assert rotate_offset((0, 1), 3) == (1, 0)
        assert rotate_offset((1, 0), 1) == (0, 1)
        assert rotate_offset((1, 1), 1) == (-1, 1)

    def test_origin_fixed(self):
        for r in range(4):
            assert rotate_offset((0, 0), r) == (0, 0)

    def test_four_turns_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            o = (int(rng.integers(-5, 6)), int(rng.integers(-5, 6)))
            assert rotate_offset(o, 4) == o
            # composing single turns matches a direct multi-turn rotation
            step = o
            for r in range(1, 4):
                step = rotate_offset(step, 1)
                assert step == rotate_offset(o, r)


class TestPatterns:
    def test_builtin_shapes(self):
        assert SQUARE_PATTERN.offsets == ((0, 0), (0, 1), (1, 0), (1, 1))
        assert DIAGONAL_PATTERN.offsets == ((0, 0), (1, 1), (2, 2), (3, 3))
        assert WYE_PATTERN.offsets == ((0, 0), (1, 1), (1, -1), (2, 0))
        for p in (SQUARE_PATTERN, DIAGONAL_PATTERN, WYE_PATTERN):
            assert p.n == 4
            assert PATTERNS[p.name] is p

    def test_reach(self):
        assert SQUARE_PATTERN.reach == 1
        assert DIAGONAL_PATTERN.reach == 3
        assert WYE_PATTERN.reach == 2

    def test_rotated_keeps_anchor_and_distinctness(self):
        for p in PATTERNS.values():
            for r in range(4):
                offs = p.rotated(r)
                assert (0, 0) in offs
                assert len(set(offs)) == p.n

    def test_validation(self):
        with pytest.raises(ValueError):
            KernelPattern("bad", ())
        with pytest.raises(ValueError):
            KernelPattern("bad", ((0, 1), (1, 0)))  # anchor missing
        with pytest.raises(ValueError):
            KernelPattern("bad", ((0, 0), (0, 1), (0, 1)))


class TestOrientationSet:
    def test_default_and_k(self):
        assert OrientationSet().rotations == (0, 1, 2, 3)
        assert OrientationSet().k == 4
        assert OrientationSet((0, 2)).k == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            OrientationSet(())
        with pytest.raises(ValueError):
            OrientationSet((0, 0))
        with pytest.raises(ValueError):
            OrientationSet((0, 4))


class TestRotatePatch:
    def test_square_patch_frozen(self):
        img = np.arange(25, dtype=np.float64).reshape(5, 5)
        got = rotate_patch(img, (2, 2), SQUARE_PATTERN, 0)
        np.testing.assert_array_equal(got, [img[2, 2], img[2, 3], img[3, 2], img[3, 3]])
        got = rotate_patch(img, (2, 2), SQUARE_PATTERN, 1)
        np.testing.assert_array_equal(got, [img[2, 2], img[1, 2], img[2, 3], img[1, 3]])

    def test_matches_offset_gather(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 255, (9, 9))
        for pattern in PATTERNS.values():
            for r in range(4):
                got = rotate_patch(img, (4, 4), pattern, r)
                want = [img[4 + dr, 4 + dc] for dr, dc in pattern.rotated(r)]
                np.testing.assert_array_equal(got, want)

    def test_image_rotation_shifts_orientation_index(self):
        # sampling a quarter-turned image equals sampling the original at
        # the mapped anchor with the orientation index decremented
        rng = np.random.default_rng(2)
        img = rng.uniform(0, 255, (10, 12))
        h, w = img.shape
        turned = np.rot90(img)
        for pattern in PATTERNS.values():
            reach = pattern.reach
            for _ in range(20):
                br = int(rng.integers(reach, w - reach))
                bc = int(rng.integers(reach, h - reach))
                src = (bc, w - 1 - br)  # turned[i, j] == img[j, w-1-i]
                for r in range(4):
                    got = rotate_patch(turned, (br, bc), pattern, r)
                    want = rotate_patch(img, src, pattern, (r - 1) % 4)
                    np.testing.assert_array_equal(got, want)

    def test_out_of_bounds_raises(self):
        img = np.zeros((4, 4))
        with pytest.raises(IndexError):
            rotate_patch(img, (3, 3), SQUARE_PATTERN, 0)
        with pytest.raises(IndexError):
            rotate_patch(img, (0, 0), SQUARE_PATTERN, 2)


class TestBlockPermutation:
    def test_frozen_2x2(self):
        np.testing.assert_array_equal(block_permutation(4, 0), [0, 1, 2, 3])
        np.testing.assert_array_equal(block_permutation(4, 1), [1, 3, 0, 2])
        np.testing.assert_array_equal(block_permutation(4, 2), [3, 2, 1, 0])
        np.testing.assert_array_equal(block_permutation(4, 3), [2, 0, 3, 1])

    def test_inverse_pairs(self):
        for m in (4, 9, 16):
            for r in range(4):
                p = block_permutation(m, r)
                q = block_permutation(m, (4 - r) % 4)
                np.testing.assert_array_equal(p[q], np.arange(m))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            block_permutation(2, 1)
        with pytest.raises(ValueError):
            block_permutation(8, 1)


class TestUnrotateOutput:
    def test_scalar_passthrough(self):
        np.testing.assert_array_equal(unrotate_output(np.array([7.0]), 3), [7.0])

    def test_undoes_clockwise_view(self):
        # a block rendered from a clockwise-rotated viewpoint comes back
        # to the common frame under the counter-clockwise inverse
        rng = np.random.default_rng(3)
        for side in (2, 3):
            block = rng.uniform(0, 255, (side, side))
            for r in range(4):
                seen = np.rot90(block, -r)  # what the rotated sampling produced
                fixed = unrotate_output(seen.ravel(), r)
                np.testing.assert_array_equal(fixed, block.ravel())

    def test_reshape_matches_rot90(self):
        rng = np.random.default_rng(4)
        block = rng.uniform(0, 255, 9)
        for r in range(4):
            got = unrotate_output(block, r).reshape(3, 3)
            np.testing.assert_array_equal(got, np.rot90(block.reshape(3, 3), r))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            unrotate_output(np.zeros((2, 2)), 1)
        with pytest.raises(ValueError):
            unrotate_output(np.zeros(3), 1)


class TestOrientedPredictions:
    def test_constant_table_all_orientations_agree(self):
        lut = bake_real(lambda p: np.full((p.shape[0], 4), 42.0), q=5, n=4, m=4)
        rng = np.random.default_rng(5)
        img = rng.uniform(0, 255, (7, 7))
        preds = oriented_predictions(img, (3, 3), SQUARE_PATTERN, lut)
        assert preds.shape == (4, 4)
        np.testing.assert_allclose(preds, 42.0)

    def test_anchor_passthrough_invariant(self):
        # a table reading only the anchor pixel ignores orientation
        lut = bake_real(lambda p: p[:, :1].copy(), q=4, n=4, m=1)
        rng = np.random.default_rng(6)
        img = rng.uniform(0, 255, (9, 9))
        preds = oriented_predictions(img, (4, 4), SQUARE_PATTERN, lut)
        np.testing.assert_allclose(preds, img[4, 4], rtol=0, atol=1e-9)

    def test_orientation_subset(self):
        lut = bake_real(lambda p: p.mean(axis=1, keepdims=True), q=5, n=4, m=1)
        rng = np.random.default_rng(7)
        img = rng.uniform(0, 255, (8, 8))
        two = oriented_predictions(img, (4, 4), SQUARE_PATTERN, lut, OrientationSet((0, 2)))
        four = oriented_predictions(img, (4, 4), SQUARE_PATTERN, lut)
        assert two.shape == (2, 1)
        np.testing.assert_allclose(two[0], four[0])
        np.testing.assert_allclose(two[1], four[2])
