"""
Unit tests for the L-BFGS optimizer.
"""

import numpy as np
import pytest

from src.config.settings import LbfgsConfig
from src.models.box import Box
from src.models.errors import NonFiniteObjectiveError, NonFiniteStateError
from src.services.optimizer import OptimizerStatus, lbfgs_minimize


def rosenbrock(x):
    value = (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    grad = np.array(
        [-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2), 200 * (x[1] - x[0] ** 2)]
    )
    return value, grad


class TestLbfgs:
    """Test L-BFGS on reference problems."""

    def test_quadratic(self):
        """Test fast convergence on an isotropic quadratic."""
        a = np.array([1.0, -2.0, 3.0])
        result = lbfgs_minimize(lambda x: (np.sum((x - a) ** 2), 2 * (x - a)), np.zeros(3))
        assert result.converged
        assert result.iterations <= 5
        np.testing.assert_allclose(result.x, a, atol=1e-8)

    def test_rosenbrock(self):
        """Test the Rosenbrock valley from the classical start."""
        result = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), LbfgsConfig(max_iters=100))
        assert result.status == OptimizerStatus.CONVERGED
        assert result.iterations <= 100
        np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-6)

    def test_monotone_history(self):
        """Test that accepted iterates never increase the objective."""
        result = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]))
        assert all(b <= a for a, b in zip(result.f_history, result.f_history[1:], strict=False))

    def test_box_projection(self):
        """Test an active lower bound."""
        cfg = LbfgsConfig(projection=Box(lower=[1.0], upper=[2.0]))
        result = lbfgs_minimize(lambda x: (float(x @ x), 2 * x), np.array([1.5]), cfg)
        assert result.converged
        assert result.x[0] == pytest.approx(1.0)

    def test_partial_projection(self):
        """Test a projection that only bounds the first variable."""

        def project(z):
            out = z.copy()
            out[0] = max(out[0], 1.0)
            return out

        result = lbfgs_minimize(lambda x: (float(x @ x), 2 * x), np.array([3.0, 3.0]), project=project)
        np.testing.assert_allclose(result.x, [1.0, 0.0], atol=1e-8)

    def test_max_iters(self):
        """Test that the iteration cap is reported."""
        result = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), LbfgsConfig(max_iters=2))
        assert result.status == OptimizerStatus.MAX_ITERS
        assert not result.converged

    def test_non_finite_start(self):
        """Test that a non-finite start is an error."""
        with pytest.raises(NonFiniteObjectiveError):
            lbfgs_minimize(lambda x: (np.inf, x), np.zeros(2))

    def test_numerical_errors_are_rejected_steps(self):
        """Test that trial points raising numerical errors count as infinite."""

        def guarded(x):
            if x[0] > 5.0:
                raise NonFiniteStateError("blown up")
            return float((x[0] - 4.0) ** 2), np.array([2 * (x[0] - 4.0)])

        result = lbfgs_minimize(guarded, np.array([0.0]))
        assert result.x[0] == pytest.approx(4.0, abs=1e-6)

    def test_invalid_wolfe_constants(self):
        """Test that c1 < c2 is enforced."""
        with pytest.raises(ValueError):
            LbfgsConfig(c1=0.5, c2=0.4)
