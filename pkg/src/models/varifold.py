"""
Discrete oriented varifold models.
"""
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.geometry.grassmann import frame_weight, frame_weights, nondegenerate_mask
from src.models.errors import DimensionMismatchError


def _frozen_array(value: Any, ndim: int, name: str) -> NDArray[np.float64]:
    array = np.array(value, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite values")
    array.setflags(write=False)
    return array


class OrientedFrameAtom(BaseModel):
    """One weighted Dirac ``r delta_(x, T)`` stored as a point and a frame."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray
    frame: np.ndarray

    @field_validator("x", mode="before")
    @classmethod
    def validate_x(cls, v: Any) -> NDArray[np.float64]:
        return _frozen_array(v, 1, "x")

    @field_validator("frame", mode="before")
    @classmethod
    def validate_frame(cls, v: Any) -> NDArray[np.float64]:
        return _frozen_array(v, 2, "frame")

    @model_validator(mode="after")
    def validate_shapes(self) -> "OrientedFrameAtom":
        d, n = self.frame.shape
        if self.x.shape[0] != n:
            raise ValueError(f"Frame vectors have {n} components but x has {self.x.shape[0]}")
        if d < 1 or n < d:
            raise ValueError(f"Frame must satisfy 1 <= d <= n, got d={d}, n={n}")
        return self

    @property
    def weight(self) -> float:
        return frame_weight(self.frame)


class DiscreteVarifold(BaseModel):
    """Finite sum of weighted oriented Diracs in R^n carrying d-planes.

    Stored column-wise: ``x`` has shape ``(N, n)`` and ``frames`` has shape
    ``(N, d, n)``. Zero-weight atoms are kept.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    x: np.ndarray
    frames: np.ndarray

    @field_validator("x", mode="before")
    @classmethod
    def validate_x(cls, v: Any) -> NDArray[np.float64]:
        return _frozen_array(v, 2, "x")

    @field_validator("frames", mode="before")
    @classmethod
    def validate_frames(cls, v: Any) -> NDArray[np.float64]:
        return _frozen_array(v, 3, "frames")

    @model_validator(mode="before")
    @classmethod
    def shape_empty(cls, data: Any) -> Any:
        # Empty inputs arrive as flat [] and are reshaped from (n, d)
        if isinstance(data, dict) and "n" in data and "d" in data:
            n, d = data["n"], data["d"]
            if np.size(data.get("x", [])) == 0:
                data = {**data, "x": np.zeros((0, n))}
            if np.size(data.get("frames", [])) == 0:
                data = {**data, "frames": np.zeros((0, d, n))}
        return data

    @model_validator(mode="after")
    def validate_shapes(self) -> "DiscreteVarifold":
        if self.d > self.n:
            raise ValueError(f"Plane dimension d={self.d} exceeds ambient dimension n={self.n}")
        count = self.x.shape[0]
        if self.x.shape != (count, self.n):
            raise ValueError(f"x must have shape (N, {self.n}), got {self.x.shape}")
        if self.frames.shape != (count, self.d, self.n):
            raise ValueError(
                f"frames must have shape ({count}, {self.d}, {self.n}), got {self.frames.shape}"
            )
        return self

    @classmethod
    def empty(cls, n: int, d: int) -> "DiscreteVarifold":
        return cls(n=n, d=d, x=np.zeros((0, n)), frames=np.zeros((0, d, n)))

    @classmethod
    def from_arrays(cls, x: ArrayLike, frames: ArrayLike) -> "DiscreteVarifold":
        frames = np.asarray(frames, dtype=float)
        if frames.ndim != 3:
            raise ValueError(f"frames must have shape (N, d, n), got {frames.shape}")
        return cls(n=frames.shape[2], d=frames.shape[1], x=x, frames=frames)

    @classmethod
    def from_atoms(cls, atoms: list[OrientedFrameAtom], n: int, d: int) -> "DiscreteVarifold":
        if not atoms:
            return cls.empty(n, d)
        return cls(
            n=n,
            d=d,
            x=np.stack([a.x for a in atoms]),
            frames=np.stack([a.frame for a in atoms]),
        )

    @property
    def size(self) -> int:
        return int(self.x.shape[0])

    @property
    def atoms(self) -> list[OrientedFrameAtom]:
        return [OrientedFrameAtom(x=x, frame=f) for x, f in zip(self.x, self.frames, strict=True)]

    @property
    def weights(self) -> NDArray[np.float64]:
        return frame_weights(self.frames)

    def nondegenerate(self) -> NDArray[np.bool_]:
        return nondegenerate_mask(self.frames)

    def subset(self, indices: ArrayLike) -> "DiscreteVarifold":
        idx = np.asarray(indices, dtype=int)
        return DiscreteVarifold(n=self.n, d=self.d, x=self.x[idx], frames=self.frames[idx])

    def concat(self, other: "DiscreteVarifold") -> "DiscreteVarifold":
        check_compatible(self, other)
        return DiscreteVarifold(
            n=self.n,
            d=self.d,
            x=np.concatenate([self.x, other.x]),
            frames=np.concatenate([self.frames, other.frames]),
        )

    def scale_weights(self, factor: float) -> "DiscreteVarifold":
        """Multiply every weight by ``factor > 0`` by scaling frames uniformly."""
        return DiscreteVarifold(
            n=self.n, d=self.d, x=self.x, frames=self.frames * factor ** (1.0 / self.d)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteVarifold):
            return NotImplemented
        return (
            self.n == other.n
            and self.d == other.d
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.frames, other.frames)
        )

    __hash__ = None  # type: ignore[assignment]


def check_compatible(a: DiscreteVarifold, b: DiscreteVarifold) -> None:
    """Raise unless both varifolds share ambient and plane dimensions."""
    if a.n != b.n or a.d != b.d:
        raise DimensionMismatchError(
            f"Varifolds must share (n, d): got ({a.n}, {a.d}) and ({b.n}, {b.d})"
        )


def frame_lift(curve: DiscreteVarifold, second_vectors: ArrayLike) -> DiscreteVarifold:
    """Turn a 1-varifold into a 2-varifold by appending one frame vector per atom.

    Raises:
        DimensionMismatchError: If ``curve`` is not a 1-varifold or the vector
            array does not have shape ``(N, n)``
    """
    extra = np.asarray(second_vectors, dtype=float)
    if curve.d != 1:
        raise DimensionMismatchError(f"frame_lift expects a 1-varifold, got d={curve.d}")
    if curve.n < 2 or extra.shape != (curve.size, curve.n):
        raise DimensionMismatchError(
            f"Second vectors must have shape ({curve.size}, {curve.n}), got {extra.shape}"
        )
    frames = np.concatenate([curve.frames, extra[:, None, :]], axis=1)
    return DiscreteVarifold(n=curve.n, d=2, x=curve.x, frames=frames)
