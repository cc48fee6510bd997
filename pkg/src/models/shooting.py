"""
State and trajectory models for geodesic shooting.

States are stored per atom: ``q[i, 0]`` is the position ``x_i`` and
``q[i, 1:]`` the frame ``u_i^(1..d)``; ``p`` has the same layout and holds
the costates ``p_i^x`` and ``p_i^{u_k}``.
"""
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.varifold import DiscreteVarifold


def _frozen(value: Any, ndim: int, name: str) -> NDArray[np.float64]:
    array = np.array(value, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got shape {array.shape}")
    array.setflags(write=False)
    return array


class ShootingState(BaseModel):
    """Concatenated state ``q`` and costate ``p``, each of shape ``(N, d + 1, n)``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    q: np.ndarray
    p: np.ndarray

    @field_validator("q", "p", mode="before")
    @classmethod
    def validate_array(cls, v: Any) -> NDArray[np.float64]:
        return _frozen(v, 3, "state")

    @model_validator(mode="after")
    def validate_shapes(self) -> "ShootingState":
        if self.q.shape != self.p.shape:
            raise ValueError(f"q and p must share shape, got {self.q.shape} and {self.p.shape}")
        if self.q.shape[1] < 2:
            raise ValueError("States need at least one frame vector per atom")
        return self

    @classmethod
    def from_varifold(
        cls, mu: DiscreteVarifold, p: NDArray[np.float64] | None = None
    ) -> "ShootingState":
        q = np.concatenate([mu.x[:, None, :], mu.frames], axis=1)
        return cls(q=q, p=np.zeros_like(q) if p is None else p)

    @classmethod
    def from_flat(cls, flat: NDArray[np.float64], shape: tuple[int, int, int]) -> "ShootingState":
        half = flat.size // 2
        return cls(q=flat[:half].reshape(shape), p=flat[half:].reshape(shape))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.q.shape  # type: ignore[return-value]

    @property
    def atom_count(self) -> int:
        return int(self.q.shape[0])

    @property
    def n(self) -> int:
        return int(self.q.shape[2])

    @property
    def d(self) -> int:
        return int(self.q.shape[1] - 1)

    @property
    def x(self) -> NDArray[np.float64]:
        return self.q[:, 0]

    @property
    def frames(self) -> NDArray[np.float64]:
        return self.q[:, 1:]

    @property
    def px(self) -> NDArray[np.float64]:
        return self.p[:, 0]

    @property
    def pframes(self) -> NDArray[np.float64]:
        return self.p[:, 1:]

    def flat(self) -> NDArray[np.float64]:
        return np.concatenate([self.q.ravel(), self.p.ravel()])

    def varifold(self) -> DiscreteVarifold:
        return DiscreteVarifold(n=self.n, d=self.d, x=self.x, frames=self.frames)


class Trajectory(BaseModel):
    """RK4 samples of a shooting trajectory on ``t_k = k / steps``.

    ``states`` holds the flattened state at every time sample, ``stages`` the
    four RK4 stage inputs of every step (used to replay the flow on other
    atoms), plus conservation diagnostics. A ``reverse`` trajectory was
    integrated with step ``-1 / steps``; replays use the same signed step.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    steps: int = Field(..., ge=1)
    reverse: bool = False
    shape: tuple[int, int, int]
    flat_states: np.ndarray
    stages: np.ndarray
    hamiltonian_series: np.ndarray
    gram_series: np.ndarray

    @model_validator(mode="after")
    def validate_lengths(self) -> "Trajectory":
        if self.flat_states.shape[0] != self.steps + 1:
            raise ValueError("Trajectory must hold steps + 1 states")
        if self.stages.shape[:2] != (self.steps, 4):
            raise ValueError("Trajectory must hold four stages per step")
        if self.hamiltonian_series.shape[0] != self.steps + 1:
            raise ValueError("Hamiltonian series must have steps + 1 entries")
        return self

    @property
    def step(self) -> float:
        """Signed RK4 step."""
        return (-1.0 if self.reverse else 1.0) / self.steps

    @property
    def times(self) -> NDArray[np.float64]:
        return np.arange(self.steps + 1) * self.step

    def state(self, k: int) -> ShootingState:
        return ShootingState.from_flat(self.flat_states[k], self.shape)

    @property
    def states(self) -> list[ShootingState]:
        return [self.state(k) for k in range(self.steps + 1)]

    @property
    def initial(self) -> ShootingState:
        return self.state(0)

    @property
    def final(self) -> ShootingState:
        return self.state(self.steps)

    def hamiltonian_drift(self) -> float:
        """Max relative deviation of the Hamiltonian from its initial value."""
        h0 = self.hamiltonian_series[0]
        return float(np.max(np.abs(self.hamiltonian_series - h0)) / max(abs(h0), 1e-300))

    def gram_drift(self) -> float:
        """Max over atoms of ``|D^i(t) - D^i(0)| / (1 + |D^i(0)|)``."""
        if self.gram_series.shape[1] == 0:
            return 0.0
        ref = self.gram_series[0]
        dev = np.linalg.norm(self.gram_series - ref, axis=(-2, -1)).max(axis=0)
        return float(np.max(dev / (1.0 + np.linalg.norm(ref, axis=(-2, -1)))))
