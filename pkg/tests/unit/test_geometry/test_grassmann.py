"""
Unit tests for the oriented Grassmann frame algebra.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.geometry.grassmann import (
    apply_linear,
    batched_cofactor,
    batched_det,
    frame_weight,
    frame_weights,
    grassmann_inner,
    nondegenerate_mask,
)
from src.models.errors import DegenerateFrameError, DimensionMismatchError


def _unit_det(rng: np.random.Generator, d: int) -> np.ndarray:
    m = rng.standard_normal((d, d))
    det = np.linalg.det(m)
    if det < 0:
        m[0] *= -1
        det = -det
    return m / det ** (1.0 / d)


@pytest.mark.unit
class TestFrameWeight:
    """Test frame weights."""

    def test_orthonormal_frame(self):
        """Test that an orthonormal 2-frame has weight 1."""
        assert frame_weight([[1, 0, 0], [0, 1, 0]]) == pytest.approx(1.0)

    def test_diagonal_frame(self):
        """Test weight of an axis-aligned rectangle."""
        assert frame_weight([[2, 0, 0], [0, 3, 0]]) == pytest.approx(6.0)

    def test_collinear_frame_is_zero(self):
        """Test that rank-deficient frames carry zero weight."""
        assert frame_weight([[1, 0], [2, 0]]) == 0.0
        assert not nondegenerate_mask(np.array([[[1.0, 0.0], [2.0, 0.0]]]))[0]

    def test_empty_stack(self):
        """Test weights of an empty stack."""
        assert frame_weights(np.zeros((0, 2, 3))).shape == (0,)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_gauge_invariance(self, rng, d):
        """Test that det-1 frame changes keep the weight."""
        for _ in range(20):
            frame = rng.standard_normal((d, 3))
            m = _unit_det(rng, d)
            assert frame_weight(m.T @ frame) == pytest.approx(frame_weight(frame), rel=1e-12)

    def test_rotation_invariance(self, rng):
        """Test that rotations keep the weight."""
        for seed in range(20):
            R = Rotation.random(random_state=seed).as_matrix()
            frame = rng.standard_normal((2, 3))
            assert frame_weight(apply_linear(R, frame)) == pytest.approx(
                frame_weight(frame), rel=1e-12
            )


@pytest.mark.unit
class TestGrassmannInner:
    """Test inner products between oriented planes."""

    def test_identical_planes(self):
        """Test that a plane has unit inner product with itself."""
        frame = [[1, 0, 0], [0, 1, 0]]
        assert grassmann_inner(frame, frame) == pytest.approx(1.0)

    def test_reversed_orientation(self):
        """Test that opposite lines give -1."""
        assert grassmann_inner([[1, 0]], [[-2, 0]]) == pytest.approx(-1.0)

    def test_forty_five_degrees(self):
        """Test the cosine of 45 degrees."""
        assert grassmann_inner([[1, 0]], [[1, 1]]) == pytest.approx(1 / np.sqrt(2), abs=1e-12)

    def test_degenerate_frame_raises(self):
        """Test that zero-weight frames are rejected."""
        with pytest.raises(DegenerateFrameError):
            grassmann_inner([[1, 0], [2, 0]], [[1, 0], [0, 1]])

    def test_shape_mismatch_raises(self):
        """Test that frames of different shapes are rejected."""
        with pytest.raises(DimensionMismatchError):
            grassmann_inner([[1, 0]], [[1, 0, 0]])
        with pytest.raises(DimensionMismatchError):
            grassmann_inner([[1, 0, 0]], [[1, 0, 0], [0, 1, 0]])

    def test_symmetry_and_sign_flip(self, rng):
        """Test symmetry and negation under one flipped vector."""
        for _ in range(20):
            a = rng.standard_normal((2, 4))
            b = rng.standard_normal((2, 4))
            assert grassmann_inner(a, b) == pytest.approx(grassmann_inner(b, a), abs=1e-14)
            flipped = a.copy()
            flipped[1] *= -1
            assert grassmann_inner(flipped, b) == pytest.approx(-grassmann_inner(a, b), abs=1e-14)
            assert grassmann_inner(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_gauge_invariance(self, rng):
        """Test invariance under det-1 right factors of either frame."""
        for _ in range(20):
            a = rng.standard_normal((2, 3))
            b = rng.standard_normal((2, 3))
            m = _unit_det(rng, 2)
            assert grassmann_inner(m.T @ a, b) == pytest.approx(grassmann_inner(a, b), abs=1e-12)

    def test_value_is_clamped(self, rng):
        """Test that values stay in [-1, 1]."""
        for _ in range(50):
            a = rng.standard_normal((1, 2))
            value = grassmann_inner(a, 3.0 * a)
            assert -1.0 <= value <= 1.0


@pytest.mark.unit
class TestApplyLinear:
    """Test linear pushforward of frames."""

    def test_identity(self, rng):
        """Test that the identity leaves frames unchanged."""
        frame = rng.standard_normal((2, 3))
        np.testing.assert_array_equal(apply_linear(np.eye(3), frame), frame)

    def test_scaling_doubles_weight(self):
        """Test that scaling a line by 2 doubles its weight."""
        out = apply_linear(2 * np.eye(2), np.array([[1.0, 0.0]]))
        np.testing.assert_allclose(out, [[2.0, 0.0]])
        assert frame_weight(out) == pytest.approx(2.0)

    def test_quarter_turn(self):
        """Test a 90 degree rotation in the plane."""
        R = np.array([[0.0, -1.0], [1.0, 0.0]])
        out = apply_linear(R, np.array([[1.0, 0.0]]))
        np.testing.assert_allclose(out, [[0.0, 1.0]], atol=1e-15)
        assert frame_weight(out) == pytest.approx(1.0)


@pytest.mark.unit
class TestDeterminants:
    """Test batched determinant helpers."""

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_det_matches_numpy(self, rng, d):
        """Test closed forms against LU determinants."""
        mats = rng.standard_normal((10, d, d))
        np.testing.assert_allclose(batched_det(mats), np.linalg.det(mats), rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_cofactor_is_determinant_gradient(self, rng, d):
        """Test that cofactors give the derivative of the determinant."""
        a = rng.standard_normal((d, d))
        direction = rng.standard_normal((d, d))
        eps = 1e-6
        fd = (batched_det((a + eps * direction)[None]) - batched_det((a - eps * direction)[None]))[0] / (2 * eps)
        analytic = np.sum(batched_cofactor(a[None])[0] * direction)
        assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-9)
