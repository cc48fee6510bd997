"""
Result models returned by quantization, registration and experiments.
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.shooting import Trajectory
from src.models.varifold import DiscreteVarifold
from src.services.optimizer import OptimizerStatus


class QuantizeReport(BaseModel):
    """Best-of-restarts quantization of a target varifold."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    result: DiscreteVarifold
    rel_error: float = Field(..., ge=0)
    stationarity_gap: float = Field(..., ge=0)
    best_restart: int = Field(..., ge=0)
    iterations: list[int] = Field(default_factory=list)
    status: OptimizerStatus = OptimizerStatus.CONVERGED
    dropped_atoms: int = Field(default=0, ge=0)

    @property
    def atom_count(self) -> int:
        return self.result.size


class RegistrationReport(BaseModel):
    """Outcome of one geodesic-shooting registration.

    ``scalar_defect`` is the largest off-diagonal magnitude of the end-time
    matrices ``D^i(1)``, relative to ``1 + |D^i|``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p0: np.ndarray
    energy: float
    reg_term: float
    fid_term: float = Field(..., ge=0)
    trajectory: Trajectory
    deformed: DiscreteVarifold
    grad_norm: float
    iterations: int
    evaluations: int = 0
    status: OptimizerStatus
    energy_history: list[float] = Field(default_factory=list)
    scalar_defect: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == OptimizerStatus.CONVERGED

    @property
    def hamiltonian_drift(self) -> float:
        return self.trajectory.hamiltonian_drift()

    @property
    def gram_drift(self) -> float:
        return self.trajectory.gram_drift()


class QuantCurveRow(BaseModel):
    """Relative errors of quantization and uniform subsampling at one ``N``."""

    N: int = Field(..., ge=1)
    rel_err_quantize: float = Field(..., ge=0)
    rel_err_subsample: float = Field(..., ge=0)


class QuantCurveResult(BaseModel):
    rows: list[QuantCurveRow]

    @field_validator("rows")
    @classmethod
    def validate_sorted(cls, v: list[QuantCurveRow]) -> list[QuantCurveRow]:
        if any(a.N >= b.N for a, b in zip(v, v[1:])):
            raise ValueError("Rows must be sorted by strictly increasing N")
        return v


class GammaConvRow(BaseModel):
    """Energies of the full-resolution source moved by the field estimated at one ``N``.

    ``gap`` uses the quantized source, ``subsample_gap`` the subsampled one.
    Rows with a negative gap are flagged rather than rejected.
    """

    N: int = Field(..., ge=1)
    energy: float
    energy_star: float
    gap: float
    subsample_energy: float
    subsample_gap: float
    flagged: bool = False


class GammaConvResult(BaseModel):
    rows: list[GammaConvRow]
    energy_star: float
    spearman_rho: float | None = None

    @property
    def flagged_levels(self) -> list[int]:
        return [row.N for row in self.rows if row.flagged]
