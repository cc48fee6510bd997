"""
Unit tests for synthetic shapes.
"""

import numpy as np
import pytest

from src.processors.base import mesh_to_varifold
from src.services.metric_service import total_mass
from src.utils.synthetic import closed_curve, curve_varifold, icosphere, random_varifold, split4


class TestClosedCurve:
    """Test closed planar curves."""

    def test_ellipse(self):
        """Test vertex count, closure and counter-clockwise orientation."""
        mesh = closed_curve(64, radii=(2.0, 1.0))
        assert mesh.cell_count == 64
        assert mesh.cells[-1, 1] == 0
        x, y = mesh.vertices.T
        signed_area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        assert signed_area > 0
        assert signed_area == pytest.approx(np.pi * 2.0, rel=1e-2)

    def test_perimeter(self):
        """Test that the circle's mass approaches its perimeter."""
        mu = curve_varifold(200, radii=(1.0, 1.0))
        assert total_mass(mu) == pytest.approx(2 * np.pi, rel=1e-3)

    def test_flower(self):
        """Test the modulated radius."""
        mesh = closed_curve(100, kind="flower", radii=(1.0, 1.0), petals=5, amplitude=0.3)
        radius = np.linalg.norm(mesh.vertices, axis=1)
        assert radius.max() == pytest.approx(1.3)
        assert radius.min() >= 0.7 - 1e-12

    def test_invalid(self):
        """Test too few vertices and unknown kinds."""
        with pytest.raises(ValueError):
            closed_curve(2)
        with pytest.raises(ValueError, match="Unknown curve kind"):
            closed_curve(10, kind="square")


class TestSpheres:
    """Test icosphere construction."""

    @pytest.mark.parametrize("levels", [0, 1, 2])
    def test_counts_and_radius(self, levels):
        """Test face counts and vertex radii."""
        mesh = icosphere(levels, radius=2.0, center=(1.0, 0.0, 0.0))
        assert mesh.cell_count == 20 * 4**levels
        assert len(mesh.vertices) == 10 * 4**levels + 2
        radii = np.linalg.norm(mesh.vertices - [1.0, 0.0, 0.0], axis=1)
        np.testing.assert_allclose(radii, 2.0, rtol=1e-12)

    def test_outward_orientation(self):
        """Test that every triangle normal points away from the center."""
        mu = mesh_to_varifold(icosphere(1))
        normals = np.cross(mu.frames[:, 0], mu.frames[:, 1])
        assert np.all(np.einsum("ij,ij->i", normals, mu.x) > 0)

    def test_area_converges(self):
        """Test that the mesh area approaches 4 pi."""
        assert total_mass(mesh_to_varifold(icosphere(3))) == pytest.approx(4 * np.pi, rel=2e-2)

    def test_split4_needs_triangles(self):
        """Test that polylines cannot be split."""
        with pytest.raises(ValueError, match="triangle"):
            split4(closed_curve(5))


class TestRandomVarifold:
    """Test random atoms."""

    def test_shapes(self, rng):
        """Test requested dimensions."""
        mu = random_varifold(rng, 7, n=3, d=2, spread=2.0)
        assert (mu.size, mu.n, mu.d) == (7, 3, 2)
