"""
Unit tests for file validation helpers.
"""

import pytest

from src.models.mesh import MeshFormat
from src.utils.validation import (
    parse_int_list,
    validate_file_exists,
    validate_file_format,
    validate_output_path,
)


class TestValidation:
    """Test validation helpers."""

    @pytest.mark.parametrize("name,expected", [("a.obj", MeshFormat.OBJ), ("B.CSV", MeshFormat.CSV)])
    def test_supported_formats(self, name, expected):
        """Test suffix detection, case insensitive."""
        assert validate_file_format(name) == expected

    def test_unsupported_format(self):
        """Test rejection of unknown suffixes."""
        with pytest.raises(ValueError, match="Unsupported mesh format"):
            validate_file_format("mesh.stl")

    def test_file_exists(self, tmp_path):
        """Test missing, directory and empty paths."""
        with pytest.raises(FileNotFoundError):
            validate_file_exists(tmp_path / "missing.obj")
        with pytest.raises(ValueError, match="not a file"):
            validate_file_exists(tmp_path)
        empty = tmp_path / "empty.obj"
        empty.write_text("")
        with pytest.raises(ValueError, match="empty"):
            validate_file_exists(empty)

    def test_parse_int_list(self):
        """Test comma-separated integers."""
        assert parse_int_list("10,20, 40") == [10, 20, 40]
        with pytest.raises(ValueError):
            parse_int_list("1,x")
        with pytest.raises(ValueError):
            parse_int_list(",")

    def test_output_path(self, tmp_path):
        """Test parent creation and rejection of directories."""
        target = validate_output_path(tmp_path / "a" / "b" / "out.json")
        assert target.parent.is_dir()
        with pytest.raises(ValueError, match="directory"):
            validate_output_path(tmp_path)
