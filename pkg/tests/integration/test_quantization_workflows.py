"""
Integration tests for quantization workflows on surfaces.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.config.settings import QuantizeConfig
from src.processors.base import mesh_to_varifold
from src.services.metric_service import distance_sq, relative_error, rigid_transport
from src.services.quantization_service import quantize, subsample_baseline
from src.utils.synthetic import icosphere, random_varifold


@pytest.mark.integration
class TestQuantizationWorkflows:
    """Quantization and metric checks on three-dimensional data."""

    @pytest.mark.slow
    def test_sphere_quantization_beats_subsampling(self, kernels):
        """Test that optimized atoms approximate an icosphere better than a rescaled subsample."""
        target = mesh_to_varifold(icosphere(1))
        report = quantize(target, QuantizeConfig(N=20, restarts=3, seed=5), kernels, threads=3)
        baseline = subsample_baseline(target, 20, seed=5)

        assert report.result.size <= 20
        assert report.rel_error < relative_error(baseline, target, kernels.spatial, kernels.grassmann)
        assert report.stationarity_gap < 1e-8

    def test_rigid_invariance_of_distances(self, rng, kernels):
        """Test distances of random surface varifolds under random rigid motions."""
        for trial in range(10):
            a = random_varifold(rng, 6, n=3, d=2)
            b = random_varifold(rng, 5, n=3, d=2)
            R = Rotation.random(random_state=trial).as_matrix()
            t = rng.standard_normal(3)
            before = distance_sq(a, b, kernels.spatial, kernels.grassmann)
            after = distance_sq(
                rigid_transport(a, R, t), rigid_transport(b, R, t), kernels.spatial, kernels.grassmann
            )
            assert after == pytest.approx(before, rel=1e-10)
            assert np.isfinite(after)
