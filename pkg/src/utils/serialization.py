"""
JSON persistence for varifolds, trajectories and reports.

Floats are written with 17 significant digits, which reproduces every double
exactly on reading.
"""

import json
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict

from src.config.settings import read_config
from src.models.errors import SchemaError
from src.models.reports import QuantizeReport, RegistrationReport
from src.models.shooting import Trajectory
from src.models.varifold import DiscreteVarifold
from src.utils.logging_config import get_logger
from src.utils.validation import validate_output_path

logger = get_logger(__name__)

VARIFOLD_FORMAT = "varifold-v1"

__all__ = [
    "VARIFOLD_FORMAT",
    "dumps",
    "read_config",
    "read_varifold",
    "report_to_dict",
    "write_json",
    "write_report",
    "write_trajectory",
    "write_varifold",
]


def _format_float(value: float) -> str:
    if not np.isfinite(value):
        raise ValueError(f"Cannot serialize non-finite value {value}")
    text = f"{value:.17g}"
    # keep floats recognizable (and -0.0 signed) after a JSON round trip
    if not any(ch in text for ch in ".e"):
        text += ".0"
    return text


def dumps(obj: Any, indent: int = 0, step: int = 2) -> str:
    """JSON text with fixed-precision floats; arrays become nested lists."""
    pad = " " * (indent + step)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + step, step)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent + step, step) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + " " * indent + "]"
    raise TypeError(f"Cannot serialize object of type {type(obj).__name__}")


def write_json(obj: Any, path: Path) -> None:
    validate_output_path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


class _AtomRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: list[float]
    U: list[list[float]]


class _VarifoldFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: Literal["varifold-v1"]
    n: int = pydantic.Field(..., ge=1)
    d: int = pydantic.Field(..., ge=1)
    atoms: list[_AtomRecord]


def _key_path(loc: tuple[Any, ...]) -> str:
    path = ""
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path


def write_varifold(mu: DiscreteVarifold, path: Path) -> None:
    """Write ``mu`` in the ``varifold-v1`` JSON schema."""
    payload = {
        "format": VARIFOLD_FORMAT,
        "n": mu.n,
        "d": mu.d,
        "atoms": [{"x": x, "U": frame} for x, frame in zip(mu.x, mu.frames, strict=True)],
    }
    write_json(payload, path)
    logger.info(f"Wrote {mu.size} atoms to {path}")


def read_varifold(path: Path) -> DiscreteVarifold:
    """Read a ``varifold-v1`` JSON file.

    Raises:
        SchemaError: Naming the offending key when the file violates the schema
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Varifold file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e}") from e
    try:
        record = _VarifoldFile.model_validate(data)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        key = _key_path(first["loc"]) or "<root>"
        raise SchemaError(f"{path}: invalid value for '{key}': {first['msg']}", key=key) from e

    n, d = record.n, record.d
    if d > n:
        raise SchemaError(f"{path}: plane dimension d={d} exceeds n={n}", key="d")
    for i, atom in enumerate(record.atoms):
        if len(atom.x) != n:
            raise SchemaError(f"{path}: atom {i} has {len(atom.x)} coordinates, expected {n}", key=f"atoms[{i}].x")
        if len(atom.U) != d or any(len(row) != n for row in atom.U):
            raise SchemaError(f"{path}: atom {i} frame must be {d} rows of {n} entries", key=f"atoms[{i}].U")

    x = np.array([a.x for a in record.atoms], dtype=float).reshape(-1, n)
    frames = np.array([a.U for a in record.atoms], dtype=float).reshape(-1, d, n)
    return DiscreteVarifold(n=n, d=d, x=x, frames=frames)


def write_trajectory(trajectory: Trajectory, path: Path) -> None:
    """Write ``{"steps": S, "states": [{"t", "q", "p"}, ...]}``."""
    states = [
        {"t": float(t), "q": state.q, "p": state.p}
        for t, state in zip(trajectory.times, trajectory.states, strict=True)
    ]
    write_json({"steps": trajectory.steps, "states": states}, path)


def report_to_dict(report: QuantizeReport | RegistrationReport) -> dict[str, Any]:
    if isinstance(report, QuantizeReport):
        return {
            "atom_count": report.atom_count,
            "rel_error": report.rel_error,
            "stationarity_gap": report.stationarity_gap,
            "best_restart": report.best_restart,
            "iterations": report.iterations,
            "status": report.status.value,
            "dropped_atoms": report.dropped_atoms,
        }
    return {
        "energy": report.energy,
        "reg_term": report.reg_term,
        "fid_term": report.fid_term,
        "grad_norm": report.grad_norm,
        "iterations": report.iterations,
        "evaluations": report.evaluations,
        "status": report.status.value,
        "converged": report.converged,
        "hamiltonian_drift": report.hamiltonian_drift,
        "gram_drift": report.gram_drift,
        "scalar_defect": report.scalar_defect,
        "energy_history": report.energy_history,
        "p0": report.p0,
    }


def write_report(report: QuantizeReport | RegistrationReport, path: Path) -> None:
    write_json(report_to_dict(report), path)
