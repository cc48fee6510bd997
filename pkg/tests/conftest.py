"""
Shared fixtures for the test suite.
"""

from collections.abc import Callable

import numpy as np
import pytest

from src.geometry.kernels import DeformationKernel, GrassmannKernel, KernelConfig, SpatialKernel
from src.models.shooting import ShootingState
from src.models.varifold import DiscreteVarifold


def central_difference(
    fun: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    flat_x = x.ravel()
    flat_g = grad.ravel()
    for k in range(flat_x.size):
        bumped = flat_x.copy()
        bumped[k] += step
        up = fun(bumped.reshape(x.shape))
        bumped[k] -= 2 * step
        down = fun(bumped.reshape(x.shape))
        flat_g[k] = (up - down) / (2 * step)
    return grad


def relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def kernels() -> KernelConfig:
    return KernelConfig(
        spatial=SpatialKernel(sigma_rho=1.0),
        grassmann=GrassmannKernel(kind="oriented_gaussian", sigma_g=1.0),
        deformation=DeformationKernel(sigma_v=1.0),
    )


@pytest.fixture
def make_varifold(rng: np.random.Generator) -> Callable[..., DiscreteVarifold]:
    def factory(count: int = 4, n: int = 2, d: int = 1, spread: float = 1.0) -> DiscreteVarifold:
        return DiscreteVarifold(
            n=n,
            d=d,
            x=spread * rng.standard_normal((count, n)),
            frames=rng.standard_normal((count, d, n)),
        )

    return factory


@pytest.fixture
def make_state(rng: np.random.Generator) -> Callable[..., ShootingState]:
    """Random shooting states with moderate momenta (smooth trajectories)."""

    def factory(count: int = 3, n: int = 2, d: int = 1, momentum: float = 0.3) -> ShootingState:
        q = rng.standard_normal((count, d + 1, n))
        q[:, 0] *= 1.5
        p = momentum * rng.standard_normal((count, d + 1, n))
        return ShootingState(q=q, p=p)

    return factory


@pytest.fixture
def fd() -> Callable[..., np.ndarray]:
    return central_difference


# Randomized gradient checks: 5 seeds over every (n, d) with d <= n in {1, 2, 3} x {1, 2}.
GRADIENT_CASES = [
    (seed, n, d) for seed in range(5) for n, d in [(2, 1), (2, 2), (3, 1), (3, 2)]
]


def conditioned_varifold(
    rng: np.random.Generator, count: int, n: int, d: int, spread: float = 1.0
) -> DiscreteVarifold:
    """Random varifold whose frames stay away from degeneracy."""
    return DiscreteVarifold(
        n=n,
        d=d,
        x=spread * rng.standard_normal((count, n)),
        frames=np.eye(d, n) + 0.5 * rng.standard_normal((count, d, n)),
    )


def conditioned_state(
    rng: np.random.Generator, count: int, n: int, d: int, momentum: float = 0.1
) -> ShootingState:
    """Random shooting state over well-conditioned frames."""
    mu = conditioned_varifold(rng, count, n, d, spread=1.5)
    q = np.concatenate([mu.x[:, None, :], mu.frames], axis=1)
    p = momentum * rng.standard_normal((count, d + 1, n))
    return ShootingState(q=q, p=p)
