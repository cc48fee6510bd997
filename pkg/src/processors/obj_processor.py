"""
Wavefront OBJ triangle mesh processor.
"""

from pathlib import Path

import numpy as np

from src.models.errors import MeshParseError
from src.models.mesh import Mesh, MeshFormat
from src.processors.base import BaseMeshProcessor
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

# Records without geometric content for a triangle soup
IGNORED_RECORDS = {"vn", "vt", "vp", "o", "g", "s", "usemtl", "mtllib", "l"}


def _face_index(token: str, vertex_count: int, line_no: int) -> int:
    head = token.split("/", 1)[0]
    try:
        index = int(head)
    except ValueError as e:
        raise MeshParseError(f"invalid face index '{token}'", line=line_no) from e
    if index < 0:
        index = vertex_count + index + 1
    if not 1 <= index <= vertex_count:
        raise MeshParseError(
            f"face references vertex {head} but only {vertex_count} are defined", line=line_no
        )
    return index - 1


class ObjProcessor(BaseMeshProcessor):
    """Triangle meshes stored as OBJ ``v`` and ``f`` records."""

    @property
    def supported_format(self) -> MeshFormat:
        return MeshFormat.OBJ

    def read(self, file_path: Path) -> Mesh:
        """Parse vertices and triangular faces; normals and textures are ignored."""
        vertices: list[list[float]] = []
        faces: list[list[int]] = []
        with open(file_path, encoding="utf-8") as f:
            for line_no, raw in enumerate(f, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                record, *fields = line.split()
                if record == "v":
                    try:
                        coords = [float(v) for v in fields]
                    except ValueError as e:
                        raise MeshParseError(f"invalid vertex '{line}'", line=line_no) from e
                    if len(coords) < 2:
                        raise MeshParseError("vertex needs at least 2 coordinates", line=line_no)
                    if vertices and len(coords) != len(vertices[0]):
                        raise MeshParseError(
                            f"vertex has {len(coords)} coordinates, expected {len(vertices[0])}",
                            line=line_no,
                        )
                    vertices.append(coords)
                elif record == "f":
                    if len(fields) != 3:
                        raise MeshParseError(
                            f"only triangular faces are supported, got {len(fields)} vertices",
                            line=line_no,
                        )
                    faces.append([_face_index(t, len(vertices), line_no) for t in fields])
                elif record not in IGNORED_RECORDS:
                    raise MeshParseError(f"unknown record '{record}'", line=line_no)

        if not vertices:
            raise MeshParseError(f"no vertices found in {file_path}")
        logger.info(f"Read {len(vertices)} vertices and {len(faces)} triangles from {file_path.name}")
        return Mesh(
            vertices=np.array(vertices),
            cells=np.array(faces, dtype=np.int64).reshape(-1, 3),
        )

    def write(self, mesh: Mesh, file_path: Path) -> None:
        if mesh.d != 2:
            raise ValueError(f"OBJ output needs a triangle mesh, got cells of dimension {mesh.d}")
        lines = ["v " + " ".join(f"{c:.17g}" for c in v) for v in mesh.vertices]
        lines += ["f " + " ".join(str(i + 1) for i in face) for face in mesh.cells]
        Path(file_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.info(f"Wrote {mesh.cell_count} triangles to {file_path}")
