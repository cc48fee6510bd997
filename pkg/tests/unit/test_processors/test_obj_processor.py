"""
Unit tests for the OBJ triangle mesh processor.
"""

import numpy as np
import pytest

from src.models.errors import MeshParseError
from src.models.mesh import Mesh, MeshFormat
from src.processors.obj_processor import ObjProcessor

UNIT_SQUARE = """# unit square
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vn 0 0 1
f 1 2 3
f 1/1/1 3/3/1 4/4/1
"""


@pytest.fixture
def processor():
    return ObjProcessor()


class TestObjProcessor:
    """Test OBJ parsing and writing."""

    def test_supported_format(self, processor):
        """Test the declared format."""
        assert processor.supported_format == MeshFormat.OBJ

    def test_read_unit_square(self, processor, tmp_path):
        """Test vertices, faces and ignored records."""
        path = tmp_path / "square.obj"
        path.write_text(UNIT_SQUARE)
        mesh = processor.read(path)
        assert mesh.vertices.shape == (4, 3)
        np.testing.assert_array_equal(mesh.cells, [[0, 1, 2], [0, 2, 3]])

    def test_negative_indices(self, processor, tmp_path):
        """Test relative face indices."""
        path = tmp_path / "tri.obj"
        path.write_text("v 0 0\nv 1 0\nv 0 1\nf -3 -2 -1\n")
        mesh = processor.read(path)
        np.testing.assert_array_equal(mesh.cells, [[0, 1, 2]])
        assert mesh.n == 2

    def test_quad_face_rejected(self, processor, tmp_path):
        """Test that non-triangular faces report their line."""
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(MeshParseError, match="line 5") as exc_info:
            processor.read(path)
        assert exc_info.value.line == 5

    def test_bad_vertex(self, processor, tmp_path):
        """Test that non-numeric coordinates are rejected."""
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 x 0\n")
        with pytest.raises(MeshParseError, match="line 2"):
            processor.read(path)

    def test_missing_vertex(self, processor, tmp_path):
        """Test faces referencing undefined vertices."""
        path = tmp_path / "missing.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nf 1 2 3\n")
        with pytest.raises(MeshParseError, match="only 2 are defined"):
            processor.read(path)

    def test_unknown_record(self, processor, tmp_path):
        """Test that unknown records are errors."""
        path = tmp_path / "odd.obj"
        path.write_text("v 0 0 0\ncurv 1 2\n")
        with pytest.raises(MeshParseError, match="unknown record"):
            processor.read(path)

    def test_no_vertices(self, processor, tmp_path):
        """Test files without geometry."""
        path = tmp_path / "empty.obj"
        path.write_text("# nothing here\n")
        with pytest.raises(MeshParseError, match="no vertices"):
            processor.read(path)

    def test_write_then_read(self, processor, tmp_path):
        """Test that writing keeps coordinates and orientation."""
        mesh = Mesh(vertices=[[0.1, 0.2, 0.3], [1.0 / 3.0, 0.0, 0.0], [0.0, 2.0, -1e-20]], cells=[[0, 2, 1]])
        path = tmp_path / "out.obj"
        processor.write(mesh, path)
        back = processor.read(path)
        np.testing.assert_array_equal(back.vertices, mesh.vertices)
        np.testing.assert_array_equal(back.cells, mesh.cells)

    def test_write_rejects_polylines(self, processor, tmp_path):
        """Test that OBJ output needs triangles."""
        mesh = Mesh(vertices=[[0.0, 0.0], [1.0, 0.0]], cells=[[0, 1]])
        with pytest.raises(ValueError, match="triangle"):
            processor.write(mesh, tmp_path / "line.obj")
