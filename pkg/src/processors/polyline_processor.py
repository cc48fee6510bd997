"""
CSV polyline processor: one vertex per row, blank lines separate components.
"""

import csv
from pathlib import Path

import numpy as np

from src.models.errors import MeshParseError
from src.models.mesh import Mesh, MeshFormat
from src.processors.base import BaseMeshProcessor
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


def split_components(cells: np.ndarray) -> list[list[int]]:
    """Vertex chains of consecutive segments ``(a, b), (b, c), ...``."""
    chains: list[list[int]] = []
    for a, b in cells.tolist():
        if chains and chains[-1][-1] == a:
            chains[-1].append(b)
        else:
            chains.append([a, b])
    return chains


class PolylineProcessor(BaseMeshProcessor):
    """Polylines stored as CSV rows of coordinates."""

    @property
    def supported_format(self) -> MeshFormat:
        return MeshFormat.CSV

    def read(self, file_path: Path) -> Mesh:
        """Consecutive rows of a component become oriented segments."""
        vertices: list[list[float]] = []
        cells: list[tuple[int, int]] = []
        component_start = 0

        def close_component(line_no: int) -> None:
            count = len(vertices) - component_start
            if count == 1:
                raise MeshParseError("polyline component needs at least 2 vertices", line=line_no)
            cells.extend((i, i + 1) for i in range(component_start, len(vertices) - 1))

        with open(file_path, encoding="utf-8", newline="") as f:
            line_no = 0
            for line_no, row in enumerate(csv.reader(f), start=1):
                fields = [c.strip() for c in row]
                if not any(fields):
                    close_component(line_no)
                    component_start = len(vertices)
                    continue
                try:
                    coords = [float(c) for c in fields]
                except ValueError as e:
                    raise MeshParseError(f"invalid coordinates {row}", line=line_no) from e
                if vertices and len(coords) != len(vertices[0]):
                    raise MeshParseError(
                        f"row has {len(coords)} coordinates, expected {len(vertices[0])}",
                        line=line_no,
                    )
                vertices.append(coords)
            close_component(line_no)

        if not vertices:
            raise MeshParseError(f"no vertices found in {file_path}")
        logger.info(f"Read {len(vertices)} vertices and {len(cells)} segments from {file_path.name}")
        return Mesh(vertices=np.array(vertices), cells=np.array(cells, dtype=np.int64).reshape(-1, 2))

    def write(self, mesh: Mesh, file_path: Path) -> None:
        if mesh.d != 1:
            raise ValueError(f"CSV output needs a polyline, got cells of dimension {mesh.d}")
        with open(file_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            for k, chain in enumerate(split_components(mesh.cells)):
                if k:
                    writer.writerow([])
                for index in chain:
                    writer.writerow([f"{c:.17g}" for c in mesh.vertices[index]])
        logger.info(f"Wrote {mesh.cell_count} segments to {file_path}")
