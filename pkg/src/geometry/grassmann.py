"""
Frame algebra for the oriented Grassmannian.

A frame is an array of shape ``(d, n)`` whose rows are the vectors
``u^(1), ..., u^(d)`` of R^n. It encodes an oriented d-plane together with a
weight: the plane is the oriented span of the rows and the weight is the
d-volume of the parallelotope they span. Batched helpers take stacks of
frames of shape ``(N, d, n)``.

Frames are never orthonormalized here; transported frames stay exact and the
weight change of a linear map is carried by the frame itself.
"""

import numpy as np
from numpy.typing import NDArray

from src.models.errors import DegenerateFrameError, DimensionMismatchError

Frame = NDArray[np.float64]

DEGENERACY_RTOL = 1e-12


def gram_matrix(frame: Frame) -> NDArray[np.float64]:
    """Return ``G_kl = u^(k) . u^(l)`` for a frame or a stack of frames."""
    frame = np.asarray(frame, dtype=float)
    return frame @ np.swapaxes(frame, -1, -2)


def batched_det(mats: NDArray[np.float64]) -> NDArray[np.float64]:
    """Determinant of a stack of ``(d, d)`` matrices.

    Closed forms for d <= 3, LU (``np.linalg.det``) otherwise.
    """
    d = mats.shape[-1]
    if d == 1:
        return mats[..., 0, 0].copy()
    if d == 2:
        return mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    if d == 3:
        a = mats
        return (
            a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0])
        )
    return np.linalg.det(mats)


def batched_cofactor(mats: NDArray[np.float64]) -> NDArray[np.float64]:
    """Cofactor matrices ``C`` with ``d det(A) = sum_kl C_kl dA_kl``.

    Computed from minors, so it stays exact on singular matrices.
    """
    d = mats.shape[-1]
    if d == 1:
        return np.ones_like(mats)
    if d == 2:
        cof = np.empty_like(mats)
        cof[..., 0, 0] = mats[..., 1, 1]
        cof[..., 0, 1] = -mats[..., 1, 0]
        cof[..., 1, 0] = -mats[..., 0, 1]
        cof[..., 1, 1] = mats[..., 0, 0]
        return cof
    cof = np.empty_like(mats)
    idx = np.arange(d)
    for k in range(d):
        rows = idx[idx != k]
        for l in range(d):
            cols = idx[idx != l]
            minor = mats[..., rows[:, None], cols[None, :]]
            cof[..., k, l] = (-1.0) ** (k + l) * batched_det(minor)
    return cof


def frame_weight(frame: Frame) -> float:
    """d-volume ``sqrt(max(0, det G))`` spanned by the frame vectors."""
    return float(frame_weights(np.asarray(frame, dtype=float)[None])[0])


def frame_weights(frames: NDArray[np.float64]) -> NDArray[np.float64]:
    """Weights of a stack of frames, shape ``(N,)``."""
    if frames.shape[0] == 0:
        return np.zeros(0)
    det = batched_det(gram_matrix(frames))
    return np.sqrt(np.maximum(det, 0.0))


def degeneracy_thresholds(frames: NDArray[np.float64]) -> NDArray[np.float64]:
    """Per-frame weight below which the frame counts as a zero-mass atom."""
    d = frames.shape[-2]
    max_norm = np.linalg.norm(frames, axis=-1).max(axis=-1) if frames.size else np.zeros(0)
    return DEGENERACY_RTOL * max_norm**d


def nondegenerate_mask(frames: NDArray[np.float64]) -> NDArray[np.bool_]:
    """True for frames whose weight is above the degeneracy threshold."""
    return frame_weights(frames) > degeneracy_thresholds(frames)


def cross_determinants(
    frames_a: NDArray[np.float64], frames_b: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Pairwise mixed Gram matrices and their determinants.

    Returns ``(A, det A)`` with ``A[i, j] = U_i V_j^T`` of shape ``(N, M, d, d)``.
    """
    mixed = np.einsum("ikn,jln->ijkl", frames_a, frames_b)
    return mixed, batched_det(mixed)


def grassmann_inner(frame: Frame, other: Frame) -> float:
    """Inner product of the oriented planes spanned by two frames.

    ``det(u^(k) . u'^(l)) / (r r')`` clamped to [-1, 1]. Invariant under
    right-multiplication of either frame by a determinant-one matrix.

    Raises:
        DimensionMismatchError: If the frames differ in shape
        DegenerateFrameError: If either frame carries (numerically) zero weight
    """
    frame = np.asarray(frame, dtype=float)
    other = np.asarray(other, dtype=float)
    if frame.shape != other.shape:
        raise DimensionMismatchError(
            f"Frames must share shape (d, n), got {frame.shape} and {other.shape}"
        )
    stacked = np.stack([frame, other])
    weights = frame_weights(stacked)
    if np.any(weights <= degeneracy_thresholds(stacked)):
        raise DegenerateFrameError("Grassmann inner product undefined for a degenerate frame")
    mixed = (frame @ other.T)[None]
    value = batched_det(mixed)[0] / (weights[0] * weights[1])
    return float(np.clip(value, -1.0, 1.0))


def apply_linear(matrix: NDArray[np.float64], frame: Frame) -> Frame:
    """Push a frame (or stack of frames) forward by a linear map: ``u -> A u``.

    No renormalization is applied, so the weight follows the d-volume change.
    """
    return np.asarray(frame, dtype=float) @ np.asarray(matrix, dtype=float).T
