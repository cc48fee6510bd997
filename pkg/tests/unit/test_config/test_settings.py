"""
Unit tests for run configuration and runtime settings.
"""

import json

import pytest

from src.config.settings import (
    QuantizeConfig,
    RegistrationConfig,
    RunConfig,
    get_settings,
    read_config,
    reload_settings,
)
from src.geometry.kernels import GrassmannKind
from src.models.errors import SchemaError


class TestRunConfig:
    """Test loading of run configuration files."""

    def test_defaults(self):
        """Test the packaged defaults."""
        config = read_config()
        assert config.lambda_ == 10.0
        assert config.steps == 16
        assert config.reduce_momentum
        assert config.kernels().grassmann.kind == GrassmannKind.ORIENTED_GAUSSIAN

    def test_json_override(self, tmp_path):
        """Test that a partial JSON file overrides nested keys."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"lambda": 2.5, "sigma_v": 0.3, "optimizer": {"max_iters": 7}}))
        config = read_config(path)
        registration = config.registration()
        assert registration.lambda_ == 2.5
        assert registration.kernels.deformation.sigma_v == 0.3
        assert registration.optimizer.max_iters == 7
        assert registration.optimizer.memory == 10

    def test_yaml_override(self, tmp_path):
        """Test YAML configuration files."""
        path = tmp_path / "cfg.yaml"
        path.write_text("gamma:\n  kind: binet\nsteps: 4\n")
        config = read_config(path)
        assert config.kernels().grassmann.kind == GrassmannKind.BINET
        assert config.steps == 4

    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_non_positive_lambda(self, tmp_path, value):
        """Test that lambda must be positive."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"lambda": value}))
        with pytest.raises(SchemaError) as exc_info:
            read_config(path)
        assert exc_info.value.key == "lambda"

    def test_unknown_key(self, tmp_path):
        """Test that misspelled keys are rejected."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"sigma_p": 1.0}))
        with pytest.raises(SchemaError) as exc_info:
            read_config(path)
        assert exc_info.value.key == "sigma_p"

    def test_not_a_mapping(self, tmp_path):
        """Test that the file must hold a mapping."""
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2]")
        with pytest.raises(SchemaError, match="mapping"):
            read_config(path)

    def test_missing_file(self, tmp_path):
        """Test that missing config files are reported."""
        with pytest.raises(FileNotFoundError):
            read_config(tmp_path / "nope.yaml")

    def test_to_dict_uses_alias(self):
        """Test that dumping keeps the file key names."""
        data = RunConfig().to_dict()
        assert data["lambda"] == 10.0
        assert "lambda_" not in data


class TestRunParameters:
    """Test per-run parameter models."""

    def test_quantize_config(self):
        """Test bounds of quantization settings."""
        assert QuantizeConfig(N=3).restarts == 5
        assert QuantizeConfig(N=3, box="auto").box == "auto"
        with pytest.raises(ValueError):
            QuantizeConfig(N=0)

    def test_registration_config(self):
        """Test bounds of registration settings."""
        assert RegistrationConfig().reduce_momentum
        with pytest.raises(ValueError):
            RegistrationConfig(steps=0)


class TestRuntimeSettings:
    """Test environment-driven runtime settings."""

    def test_environment_prefix(self, monkeypatch):
        """Test VARIMATCH_ variables."""
        monkeypatch.setenv("VARIMATCH_THREADS", "3")
        monkeypatch.setenv("VARIMATCH_LOG_LEVEL", "DEBUG")
        settings = reload_settings()
        assert settings.threads == 3
        assert settings.log_level == "DEBUG"
        assert get_settings() is settings

    def test_overrides_win(self, monkeypatch):
        """Test that explicit values beat the environment and None is ignored."""
        monkeypatch.setenv("VARIMATCH_THREADS", "3")
        settings = reload_settings(threads=2, log_level=None)
        assert settings.threads == 2
        assert settings.log_level == "WARNING"

    def test_invalid_threads(self, monkeypatch):
        """Test that thread counts must be positive."""
        monkeypatch.setenv("VARIMATCH_THREADS", "0")
        with pytest.raises(ValueError):
            reload_settings()
