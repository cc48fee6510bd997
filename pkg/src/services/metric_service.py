"""
Kernel inner products, distances and rigid transport of discrete varifolds.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.geometry.grassmann import (
    apply_linear,
    batched_cofactor,
    cross_determinants,
    frame_weights,
    gram_matrix,
    nondegenerate_mask,
)
from src.geometry.kernels import GrassmannKernel, SpatialKernel
from src.models.errors import DegenerateFrameError, EmptyVarifoldError
from src.models.varifold import DiscreteVarifold, check_compatible
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class KernelSum:
    """Value of ``sum_ij k(a_i, b_j)`` and its gradient in the first argument."""

    value: float
    grad_x: NDArray[np.float64] | None = None
    grad_frames: NDArray[np.float64] | None = None


def weight_gradients(frames: NDArray[np.float64], weights: NDArray[np.float64]) -> NDArray[np.float64]:
    """Derivative of each frame weight with respect to its frame vectors.

    ``dr/dU = cof(U U^T) U / r`` for nondegenerate frames.
    """
    cof = batched_cofactor(gram_matrix(frames))
    return np.einsum("ikl,iln->ikn", cof, frames) / weights[:, None, None]


def kernel_sum(
    x_a: NDArray[np.float64],
    frames_a: NDArray[np.float64],
    x_b: NDArray[np.float64],
    frames_b: NDArray[np.float64],
    spatial: SpatialKernel,
    grassmann: GrassmannKernel,
    with_grad: bool = False,
) -> KernelSum:
    """Double kernel sum between two atom sets given as arrays.

    Each pair contributes ``r_i r'_j rho(|x_i - x'_j|^2) gamma(det(U_i V_j^T) / (r_i r'_j))``.
    Degenerate atoms contribute zero and receive a zero gradient.
    """
    grad_x = np.zeros_like(x_a) if with_grad else None
    grad_frames = np.zeros_like(frames_a) if with_grad else None
    keep_a = np.flatnonzero(nondegenerate_mask(frames_a)) if len(x_a) else np.zeros(0, int)
    keep_b = np.flatnonzero(nondegenerate_mask(frames_b)) if len(x_b) else np.zeros(0, int)
    if keep_a.size == 0 or keep_b.size == 0:
        return KernelSum(0.0, grad_x, grad_frames)

    xa, Ua = x_a[keep_a], frames_a[keep_a]
    xb, Vb = x_b[keep_b], frames_b[keep_b]
    r = frame_weights(Ua)
    s = frame_weights(Vb)

    diff = xa[:, None, :] - xb[None, :, :]
    sq = np.einsum("ijn,ijn->ij", diff, diff)
    rho = spatial.derivative(sq, 0)
    mixed, dets = cross_determinants(Ua, Vb)
    rs = r[:, None] * s[None, :]
    t = np.clip(dets / rs, -1.0, 1.0)
    gamma = grassmann.derivative(t, 0)
    pair = rs * gamma
    value = float(np.sum(rho * pair))
    if not with_grad:
        return KernelSum(value)

    gamma_1 = grassmann.derivative(t, 1)
    spatial_w = spatial.derivative(sq, 1) * pair
    gx = 2.0 * (spatial_w.sum(axis=1)[:, None] * xa - spatial_w @ xb)

    # d(r s gamma(c / rs)) / dr = s (gamma - t gamma'), d/dc = gamma'
    weight_coef = (rho * s[None, :] * (gamma - t * gamma_1)).sum(axis=1)
    cof = batched_cofactor(mixed)
    gU = weight_coef[:, None, None] * weight_gradients(Ua, r)
    gU += np.einsum("ij,ijkl,jln->ikn", rho * gamma_1, cof, Vb)

    grad_x[keep_a] = gx
    grad_frames[keep_a] = gU
    return KernelSum(value, grad_x, grad_frames)


def inner_product(
    mu: DiscreteVarifold,
    nu: DiscreteVarifold,
    spatial: SpatialKernel,
    grassmann: GrassmannKernel,
) -> float:
    """Kernel inner product ``<mu, nu>_W*``.

    Raises:
        DimensionMismatchError: If the varifolds differ in n or d
    """
    check_compatible(mu, nu)
    return kernel_sum(mu.x, mu.frames, nu.x, nu.frames, spatial, grassmann).value


def norm_sq(mu: DiscreteVarifold, spatial: SpatialKernel, grassmann: GrassmannKernel) -> float:
    return inner_product(mu, mu, spatial, grassmann)


def distance_sq(
    mu: DiscreteVarifold,
    nu: DiscreteVarifold,
    spatial: SpatialKernel,
    grassmann: GrassmannKernel,
) -> float:
    """``|mu|^2 - 2 <mu, nu> + |nu|^2`` clamped at zero."""
    check_compatible(mu, nu)
    value = (
        norm_sq(mu, spatial, grassmann)
        - 2.0 * inner_product(mu, nu, spatial, grassmann)
        + norm_sq(nu, spatial, grassmann)
    )
    return max(value, 0.0)


def distance_sq_and_grad(
    x: NDArray[np.float64],
    frames: NDArray[np.float64],
    target: DiscreteVarifold,
    spatial: SpatialKernel,
    grassmann: GrassmannKernel,
    target_norm_sq: float | None = None,
) -> tuple[float, NDArray[np.float64], NDArray[np.float64]]:
    """Squared distance from the atoms ``(x, frames)`` to ``target`` with gradient.

    The self term is symmetric, so its gradient is twice the one-sided one.
    Returns the unclamped value so that it stays consistent with the gradient.
    """
    own = kernel_sum(x, frames, x, frames, spatial, grassmann, with_grad=True)
    cross = kernel_sum(x, frames, target.x, target.frames, spatial, grassmann, with_grad=True)
    if target_norm_sq is None:
        target_norm_sq = norm_sq(target, spatial, grassmann)
    value = own.value - 2.0 * cross.value + target_norm_sq
    grad_x = 2.0 * own.grad_x - 2.0 * cross.grad_x
    grad_frames = 2.0 * own.grad_frames - 2.0 * cross.grad_frames
    return value, grad_x, grad_frames


def total_mass(mu: DiscreteVarifold) -> float:
    """Total weight ``sum_i r_i``."""
    if mu.size == 0:
        return 0.0
    return float(np.sum(mu.weights))


def normalize_mass(mu: DiscreteVarifold) -> DiscreteVarifold:
    """Rescale weights to unit total mass.

    Raises:
        EmptyVarifoldError: If the varifold has no atoms
        DegenerateFrameError: If all atoms carry zero weight
    """
    if mu.size == 0:
        raise EmptyVarifoldError("Cannot normalize a varifold without atoms")
    mass = total_mass(mu)
    if mass <= 0.0:
        raise DegenerateFrameError("Cannot normalize a varifold with zero total mass")
    return mu.scale_weights(1.0 / mass)


def relative_error(
    mu: DiscreteVarifold,
    reference: DiscreteVarifold,
    spatial: SpatialKernel,
    grassmann: GrassmannKernel,
) -> float:
    """``|mu - reference| / |reference|`` in the kernel metric."""
    ref = norm_sq(reference, spatial, grassmann)
    if ref <= 0.0:
        return float("inf")
    return float(np.sqrt(distance_sq(mu, reference, spatial, grassmann) / ref))


def rigid_transport(
    mu: DiscreteVarifold, rotation: ArrayLike, translation: ArrayLike
) -> DiscreteVarifold:
    """Map every atom to ``(R x + b, R u^(k))``."""
    R = np.asarray(rotation, dtype=float)
    b = np.asarray(translation, dtype=float)
    return DiscreteVarifold(
        n=mu.n, d=mu.d, x=mu.x @ R.T + b, frames=apply_linear(R, mu.frames)
    )
