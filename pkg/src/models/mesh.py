"""
Simplicial mesh models (triangle surfaces and polylines).
"""
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class MeshFormat(str, Enum):
    """Supported mesh file formats."""
    OBJ = "obj"
    CSV = "csv"


class Mesh(BaseModel):
    """Vertices plus cells of ``d + 1`` zero-based vertex indices.

    ``d = 2`` for triangle meshes, ``d = 1`` for polylines. Vertex order inside
    a cell fixes the orientation.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vertices: np.ndarray
    cells: np.ndarray

    @field_validator("vertices", mode="before")
    @classmethod
    def validate_vertices(cls, v: Any) -> NDArray[np.float64]:
        array = np.array(v, dtype=float)
        if array.ndim != 2 or array.shape[1] < 1:
            raise ValueError(f"Vertices must have shape (V, n), got {array.shape}")
        array.setflags(write=False)
        return array

    @field_validator("cells", mode="before")
    @classmethod
    def validate_cells(cls, v: Any) -> NDArray[np.int64]:
        array = np.array(v, dtype=np.int64)
        if array.ndim != 2 or array.shape[1] not in (2, 3):
            raise ValueError(f"Cells must have 2 or 3 vertices each, got shape {array.shape}")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def validate_indices(self) -> "Mesh":
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= len(self.vertices)):
            raise ValueError("Cells reference vertices that do not exist")
        if self.d > self.n:
            raise ValueError(f"Cells of dimension {self.d} cannot live in R^{self.n}")
        return self

    @property
    def n(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def d(self) -> int:
        return int(self.cells.shape[1] - 1)

    @property
    def cell_count(self) -> int:
        return int(self.cells.shape[0])

    def with_vertices(self, vertices: NDArray[np.float64]) -> "Mesh":
        """Same connectivity on new vertex positions."""
        return Mesh(vertices=vertices, cells=self.cells)
