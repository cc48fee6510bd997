"""
File format validation utilities.
"""

from pathlib import Path

from src.models.mesh import MeshFormat

SUPPORTED_FORMATS = {
    ".obj": MeshFormat.OBJ,
    ".csv": MeshFormat.CSV,
}


def validate_file_format(file_path: Path) -> MeshFormat:
    """
    Validate a mesh file suffix and return its MeshFormat.

    Args:
        file_path: Path to the file

    Returns:
        MeshFormat enum value

    Raises:
        ValueError: If format is not supported
    """
    suffix = Path(file_path).suffix.lower()

    if suffix not in SUPPORTED_FORMATS:
        raise ValueError(
            f"Unsupported mesh format: {suffix}. "
            f"Supported formats: {', '.join(SUPPORTED_FORMATS.keys())}"
        )

    return SUPPORTED_FORMATS[suffix]


def validate_file_exists(file_path: Path) -> None:
    """
    Validate that file exists and is readable.

    Args:
        file_path: Path to the file

    Raises:
        FileNotFoundError: If file doesn't exist
        ValueError: If the path is not a regular non-empty file
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")

    if not file_path.is_file():
        raise ValueError(f"Path is not a file: {file_path}")

    if not file_path.stat().st_size > 0:
        raise ValueError(f"File is empty: {file_path}")


def parse_int_list(text: str) -> list[int]:
    """Parse ``"10,20,40"`` into a list of integers."""
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"Expected a comma-separated list of integers, got '{text}'") from e
    if not values:
        raise ValueError("Expected at least one integer")
    return values


def validate_output_path(file_path: Path) -> Path:
    """
    Prepare a path for writing a result file.

    Missing parent directories are created.

    Raises:
        ValueError: If the path is an existing directory
    """
    file_path = Path(file_path)
    if file_path.is_dir():
        raise ValueError(f"Output path is a directory: {file_path}")
    file_path.parent.mkdir(parents=True, exist_ok=True)
    return file_path
