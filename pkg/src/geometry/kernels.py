"""
Spatial, Grassmann and deformation kernels with analytic derivatives.

All radial kernels here are Gaussian profiles ``f(s) = exp(-s / sigma^2)`` of
the squared distance ``s``; their derivatives are ``f^(k) = (-1/sigma^2)^k f``.
"""

from enum import Enum
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field


class GrassmannKind(str, Enum):
    """Preset Grassmann kernels ``gamma(t)``."""
    LINEAR = "linear"
    BINET = "binet"
    ORIENTED_GAUSSIAN = "oriented_gaussian"


def gaussian_profile(s: ArrayLike, sigma: float, order: int = 0) -> NDArray[np.float64]:
    """k-th derivative of ``s -> exp(-s / sigma^2)``."""
    scale = -1.0 / sigma**2
    return scale**order * np.exp(np.asarray(s, dtype=float) * scale)


class SpatialKernel(BaseModel):
    """Radial spatial kernel ``rho(|x - y|^2)``."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian"] = "gaussian"
    sigma_rho: float = Field(default=1.0, gt=0)

    def derivative(self, s: ArrayLike, order: int = 0) -> NDArray[np.float64]:
        return gaussian_profile(s, self.sigma_rho, order)


class GrassmannKernel(BaseModel):
    """Kernel ``gamma`` acting on the inner product of two oriented planes.

    linear: ``t`` (oriented, indefinite), binet: ``t^2`` (unoriented),
    oriented_gaussian: ``exp(-2 (1 - t) / sigma_g^2)`` (oriented, positive).
    """

    model_config = ConfigDict(frozen=True)

    kind: GrassmannKind = GrassmannKind.ORIENTED_GAUSSIAN
    sigma_g: float = Field(default=1.0, gt=0)

    @property
    def is_oriented(self) -> bool:
        return self.kind != GrassmannKind.BINET

    @property
    def is_nonnegative(self) -> bool:
        return self.kind != GrassmannKind.LINEAR

    def derivative(self, t: ArrayLike, order: int = 0) -> NDArray[np.float64]:
        t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
        if self.kind == GrassmannKind.LINEAR:
            if order == 0:
                return t.copy()
            return np.full_like(t, 1.0 if order == 1 else 0.0)
        if self.kind == GrassmannKind.BINET:
            if order == 0:
                return t * t
            if order == 1:
                return 2.0 * t
            return np.full_like(t, 2.0 if order == 2 else 0.0)
        rate = 2.0 / self.sigma_g**2
        return rate**order * np.exp(-rate * (1.0 - t))


class DeformationKernel(BaseModel):
    """Diagonal Gaussian kernel ``K_V(x, y) = exp(-|x - y|^2 / sigma_V^2) Id``."""

    model_config = ConfigDict(frozen=True)

    sigma_v: float = Field(default=1.0, gt=0)

    def profile(self, s: ArrayLike, order: int = 0) -> NDArray[np.float64]:
        return gaussian_profile(s, self.sigma_v, order)


class KernelConfig(BaseModel):
    """The three kernels of a run."""

    model_config = ConfigDict(frozen=True)

    spatial: SpatialKernel = Field(default_factory=SpatialKernel)
    grassmann: GrassmannKernel = Field(default_factory=GrassmannKernel)
    deformation: DeformationKernel = Field(default_factory=DeformationKernel)


def rho_eval(s: ArrayLike, kernel: SpatialKernel) -> NDArray[np.float64]:
    return kernel.derivative(s, 0)


def rho_d1(s: ArrayLike, kernel: SpatialKernel) -> NDArray[np.float64]:
    return kernel.derivative(s, 1)


def rho_d2(s: ArrayLike, kernel: SpatialKernel) -> NDArray[np.float64]:
    return kernel.derivative(s, 2)


def rho_d3(s: ArrayLike, kernel: SpatialKernel) -> NDArray[np.float64]:
    return kernel.derivative(s, 3)


def gamma_eval(t: ArrayLike, kernel: GrassmannKernel) -> NDArray[np.float64]:
    return kernel.derivative(t, 0)


def gamma_d1(t: ArrayLike, kernel: GrassmannKernel) -> NDArray[np.float64]:
    return kernel.derivative(t, 1)


def gamma_d2(t: ArrayLike, kernel: GrassmannKernel) -> NDArray[np.float64]:
    return kernel.derivative(t, 2)


def gamma_d3(t: ArrayLike, kernel: GrassmannKernel) -> NDArray[np.float64]:
    return kernel.derivative(t, 3)


def _offset(x: ArrayLike, y: ArrayLike) -> tuple[NDArray[np.float64], float]:
    w = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return w, float(w @ w)


def kv_eval(x: ArrayLike, y: ArrayLike, kernel: DeformationKernel) -> float:
    _, s = _offset(x, y)
    return float(kernel.profile(s))


def kv_d1(x: ArrayLike, y: ArrayLike, kernel: DeformationKernel) -> NDArray[np.float64]:
    """Gradient of ``K_V(x, y)`` in ``x``."""
    w, s = _offset(x, y)
    return 2.0 * kernel.profile(s, 1) * w


def kv_d2(x: ArrayLike, y: ArrayLike, kernel: DeformationKernel) -> NDArray[np.float64]:
    """Hessian of ``K_V(x, y)`` in ``x``."""
    w, s = _offset(x, y)
    n = w.shape[0]
    return 2.0 * kernel.profile(s, 1) * np.eye(n) + 4.0 * kernel.profile(s, 2) * np.outer(w, w)


def kv_d3(x: ArrayLike, y: ArrayLike, kernel: DeformationKernel) -> NDArray[np.float64]:
    """Third derivative tensor ``T_abc`` of ``K_V(x, y)`` in ``x``."""
    w, s = _offset(x, y)
    eye = np.eye(w.shape[0])
    sym = (
        np.einsum("ab,c->abc", eye, w)
        + np.einsum("ac,b->abc", eye, w)
        + np.einsum("bc,a->abc", eye, w)
    )
    return 4.0 * kernel.profile(s, 2) * sym + 8.0 * kernel.profile(s, 3) * np.einsum(
        "a,b,c->abc", w, w, w
    )
