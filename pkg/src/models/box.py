"""
Axis-aligned boxes used as support constraints.
"""
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

AUTO_INFLATION = 0.05


class Box(BaseModel):
    """Closed box ``[lower, upper]`` in R^n."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lower: np.ndarray
    upper: np.ndarray

    @field_validator("lower", "upper", mode="before")
    @classmethod
    def as_vector(cls, v: Any) -> NDArray[np.float64]:
        array = np.array(v, dtype=float).reshape(-1)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def validate_bounds(self) -> "Box":
        if self.lower.shape != self.upper.shape:
            raise ValueError("Box bounds must have the same dimension")
        if np.any(self.lower > self.upper):
            raise ValueError("Box lower bound exceeds upper bound")
        return self

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @classmethod
    def around(cls, points: NDArray[np.float64], inflation: float = AUTO_INFLATION) -> "Box":
        """Bounding box of ``points`` inflated by ``inflation`` of its extent per axis."""
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        pad = inflation * (hi - lo)
        return cls(lower=lo - pad, upper=hi + pad)

    @classmethod
    def parse(cls, text: str) -> "Box":
        """Parse ``x0,y0,...:x1,y1,...``."""
        try:
            lo, hi = text.split(":")
            return cls(
                lower=[float(v) for v in lo.split(",")], upper=[float(v) for v in hi.split(",")]
            )
        except ValueError as e:
            raise ValueError(f"Invalid box '{text}', expected x0,y0,...:x1,y1,...") from e

    def project(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.clip(points, self.lower, self.upper)

    def contains(self, points: NDArray[np.float64]) -> bool:
        return bool(np.all(points >= self.lower) and np.all(points <= self.upper))
