"""
Unit tests for JSON persistence.
"""

import json

import numpy as np
import pytest

from src.config.settings import QuantizeConfig, RegistrationConfig
from src.models.errors import SchemaError
from src.models.varifold import DiscreteVarifold
from src.services.quantization_service import quantize
from src.services.registration_service import register
from src.services.shooting_service import rk4_forward
from src.utils.serialization import (
    VARIFOLD_FORMAT,
    dumps,
    read_varifold,
    report_to_dict,
    write_report,
    write_trajectory,
    write_varifold,
)

def _write(path, payload):
    path.write_text(json.dumps(payload))
    return path


VALID = {"format": "varifold-v1", "n": 2, "d": 1, "atoms": [{"x": [0.0, 1.0], "U": [[1.0, 0.0]]}]}


class TestVarifoldFiles:
    """Test varifold-v1 reading and writing."""

    def test_round_trip_is_exact(self, make_varifold, tmp_path):
        """Test that every double survives a round trip."""
        mu = make_varifold(count=9, n=3, d=2)
        mu = DiscreteVarifold(n=3, d=2, x=np.vstack([mu.x, [[-0.0, 1e-300, 1 / 3]]]), frames=np.vstack([mu.frames, mu.frames[:1]]))
        path = tmp_path / "mu.json"
        write_varifold(mu, path)
        back = read_varifold(path)
        assert back == mu
        assert np.signbit(back.x[-1, 0])

    def test_empty_round_trip(self, tmp_path):
        """Test the empty varifold."""
        path = tmp_path / "empty.json"
        write_varifold(DiscreteVarifold.empty(3, 2), path)
        back = read_varifold(path)
        assert back.size == 0 and (back.n, back.d) == (3, 2)

    def test_file_layout(self, tmp_path):
        """Test the written keys."""
        path = tmp_path / "one.json"
        write_varifold(read_varifold(_write(tmp_path / "in.json", VALID)), path)
        data = json.loads(path.read_text())
        assert data["format"] == VARIFOLD_FORMAT
        assert data["atoms"][0] == {"x": [0.0, 1.0], "U": [[1.0, 0.0]]}

    def test_missing_d(self, tmp_path):
        """Test that a missing key is named."""
        payload = {k: v for k, v in VALID.items() if k != "d"}
        with pytest.raises(SchemaError) as exc_info:
            read_varifold(_write(tmp_path / "bad.json", payload))
        assert exc_info.value.key == "d"
        assert "'d'" in str(exc_info.value)

    def test_bad_frame_shape(self, tmp_path):
        """Test that frame rows must have n entries."""
        payload = {**VALID, "atoms": [{"x": [0.0, 1.0], "U": [[1.0, 0.0, 2.0]]}]}
        with pytest.raises(SchemaError) as exc_info:
            read_varifold(_write(tmp_path / "bad.json", payload))
        assert exc_info.value.key == "atoms[0].U"

    def test_wrong_format_tag(self, tmp_path):
        """Test that the format tag is checked."""
        with pytest.raises(SchemaError) as exc_info:
            read_varifold(_write(tmp_path / "bad.json", {**VALID, "format": "varifold-v2"}))
        assert exc_info.value.key == "format"

    def test_unknown_key(self, tmp_path):
        """Test that extra keys are rejected."""
        payload = {**VALID, "atoms": [{"x": [0.0, 1.0], "U": [[1.0, 0.0]], "w": 2.0}]}
        with pytest.raises(SchemaError) as exc_info:
            read_varifold(_write(tmp_path / "bad.json", payload))
        assert exc_info.value.key == "atoms[0].w"

    def test_d_exceeds_n(self, tmp_path):
        """Test the plane dimension bound."""
        with pytest.raises(SchemaError) as exc_info:
            read_varifold(_write(tmp_path / "bad.json", {**VALID, "n": 1, "d": 2, "atoms": []}))
        assert exc_info.value.key == "d"

    def test_invalid_json(self, tmp_path):
        """Test that broken JSON is a schema error."""
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            read_varifold(path)

    def test_missing_file(self, tmp_path):
        """Test that a missing file is reported."""
        with pytest.raises(FileNotFoundError):
            read_varifold(tmp_path / "nope.json")


class TestDumps:
    """Test fixed-precision JSON text."""

    def test_floats_keep_type_and_sign(self):
        """Test integral floats and negative zero."""
        assert dumps(1.0) == "1.0"
        assert dumps(-0.0) == "-0.0"
        assert dumps(1e22) == "1e+22"
        assert dumps(3) == "3"

    def test_non_finite_rejected(self):
        """Test that NaN cannot be written."""
        with pytest.raises(ValueError):
            dumps([1.0, float("nan")])

    def test_unknown_type(self):
        """Test that arbitrary objects are rejected."""
        with pytest.raises(TypeError):
            dumps(object())


class TestTrajectoryAndReports:
    """Test trajectory and report files."""

    def test_trajectory_layout(self, make_state, tmp_path):
        """Test steps, times and state shapes."""
        state = make_state(count=2, n=2, d=1)
        traj = rk4_forward(state, 4, RegistrationConfig().kernels.deformation)
        path = tmp_path / "traj.json"
        write_trajectory(traj, path)
        data = json.loads(path.read_text())
        assert data["steps"] == 4
        assert [s["t"] for s in data["states"]] == [0.0, 0.25, 0.5, 0.75, 1.0]
        np.testing.assert_array_equal(np.array(data["states"][0]["q"]), state.q)
        np.testing.assert_array_equal(np.array(data["states"][-1]["p"]), traj.final.p)

    def test_registration_report(self, make_varifold, tmp_path):
        """Test the registration report keys."""
        mu = make_varifold(count=2)
        report = register(mu, mu, RegistrationConfig(steps=2))
        path = tmp_path / "report.json"
        write_report(report, path)
        data = json.loads(path.read_text())
        assert data["status"] == "converged"
        assert data["energy"] == pytest.approx(0.0, abs=1e-10)
        assert np.array(data["p0"]).shape == (2, 2, 2)

    def test_quantize_report(self, make_varifold, kernels):
        """Test the quantization report keys."""
        mu = make_varifold(count=3)
        report = quantize(mu, QuantizeConfig(N=3, restarts=1), kernels, threads=1)
        data = report_to_dict(report)
        assert data["atom_count"] == 3
        assert data["best_restart"] == 0
        assert set(data) >= {"rel_error", "stationarity_gap", "iterations", "status", "dropped_atoms"}
