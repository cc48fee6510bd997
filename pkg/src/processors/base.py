"""
Base processor interface for mesh files, and the mesh-to-varifold map.
"""

from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np

from src.models.mesh import Mesh, MeshFormat
from src.models.varifold import DiscreteVarifold


def mesh_to_varifold(mesh: Mesh) -> DiscreteVarifold:
    """One Dirac per cell, weighted by the cell's length or area.

    Triangles ``(v0, v1, v2)`` give ``x`` = centroid and frame ``(e1, e2) s`` with
    ``e1 = v1 - v0``, ``e2 = v2 - v0`` and ``s = sqrt(area / |e1 ^ e2|)``, so the
    frame weight equals the area. Segments give ``x`` = midpoint and the single
    frame vector ``v1 - v0``. Degenerate cells yield zero-weight atoms.
    """
    corners = mesh.vertices[mesh.cells]
    x = corners.mean(axis=1)
    frames = corners[:, 1:] - corners[:, :1]
    if mesh.d == 2:
        # |e1 ^ e2| = 2 area, so s = 1/sqrt(2) for every triangle
        frames = frames * np.sqrt(0.5)
    return DiscreteVarifold(n=mesh.n, d=mesh.d, x=x, frames=frames)


class BaseMeshProcessor(ABC):
    """Base interface for mesh readers and writers."""

    @property
    @abstractmethod
    def supported_format(self) -> MeshFormat:
        """Return the mesh format this processor supports."""
        pass

    @abstractmethod
    def read(self, file_path: Path) -> Mesh:
        """
        Parse a mesh file.

        Args:
            file_path: Path to the mesh file

        Returns:
            Parsed mesh

        Raises:
            MeshParseError: With the offending line number
        """
        pass

    @abstractmethod
    def write(self, mesh: Mesh, file_path: Path) -> None:
        """
        Write a mesh, keeping its connectivity and orientation.

        Args:
            mesh: Mesh to write
            file_path: Destination path
        """
        pass

    def process(self, file_path: Path) -> tuple[Mesh, DiscreteVarifold]:
        """
        Read a mesh file and build its varifold.

        Args:
            file_path: Path to the mesh file

        Returns:
            Tuple of (mesh, varifold)
        """
        mesh = self.read(file_path)
        return mesh, mesh_to_varifold(mesh)
