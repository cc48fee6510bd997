"""
Mesh conversion service coordinating mesh processors.
"""

from pathlib import Path

from src.models.mesh import Mesh, MeshFormat
from src.models.varifold import DiscreteVarifold
from src.processors.base import BaseMeshProcessor
from src.processors.obj_processor import ObjProcessor
from src.processors.polyline_processor import PolylineProcessor
from src.utils.logging_config import get_logger
from src.utils.validation import validate_file_exists, validate_file_format

logger = get_logger(__name__)


class MeshConverter:
    """Reads and writes meshes by file suffix and turns them into varifolds."""

    def __init__(self) -> None:
        self._processors: dict[MeshFormat, BaseMeshProcessor] = {
            MeshFormat.OBJ: ObjProcessor(),
            MeshFormat.CSV: PolylineProcessor(),
        }

    def processor_for(self, file_path: Path) -> BaseMeshProcessor:
        mesh_format = validate_file_format(file_path)
        processor = self._processors.get(mesh_format)
        if not processor:
            raise ValueError(f"No processor available for format: {mesh_format}")
        return processor

    def read(self, file_path: Path) -> Mesh:
        file_path = Path(file_path)
        validate_file_exists(file_path)
        return self.processor_for(file_path).read(file_path)

    def write(self, mesh: Mesh, file_path: Path) -> None:
        self.processor_for(Path(file_path)).write(mesh, Path(file_path))

    def convert(self, file_path: Path) -> tuple[Mesh, DiscreteVarifold]:
        """
        Read a mesh file and build its varifold.

        Args:
            file_path: OBJ triangle mesh or CSV polyline

        Returns:
            Tuple of (mesh, varifold)
        """
        file_path = Path(file_path)
        validate_file_exists(file_path)
        mesh, mu = self.processor_for(file_path).process(file_path)
        logger.info(f"Converted {file_path.name} into {mu.size} atoms (n={mu.n}, d={mu.d})")
        return mesh, mu
