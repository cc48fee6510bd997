"""
Synthetic shapes for tests and desk-scale experiments.
"""

from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.models.mesh import Mesh
from src.models.varifold import DiscreteVarifold
from src.processors.base import mesh_to_varifold


def closed_curve(
    count: int,
    kind: Literal["ellipse", "flower"] = "ellipse",
    radii: tuple[float, float] = (1.0, 0.6),
    petals: int = 5,
    amplitude: float = 0.3,
    center: ArrayLike = (0.0, 0.0),
    phase: float = 0.0,
) -> Mesh:
    """Counter-clockwise closed polygon in the plane with ``count`` vertices.

    ``flower`` modulates the ellipse radius by ``1 + amplitude cos(petals t)``.
    """
    if count < 3:
        raise ValueError(f"A closed curve needs at least 3 vertices, got {count}")
    t = 2.0 * np.pi * np.arange(count) / count + phase
    radius = np.ones_like(t)
    if kind == "flower":
        radius = 1.0 + amplitude * np.cos(petals * t)
    elif kind != "ellipse":
        raise ValueError(f"Unknown curve kind: {kind}")
    vertices = np.stack([radii[0] * radius * np.cos(t), radii[1] * radius * np.sin(t)], axis=1)
    vertices += np.asarray(center, dtype=float)
    cells = np.stack([np.arange(count), (np.arange(count) + 1) % count], axis=1)
    return Mesh(vertices=vertices, cells=cells)


def curve_varifold(count: int, **kwargs: object) -> DiscreteVarifold:
    return mesh_to_varifold(closed_curve(count, **kwargs))  # type: ignore[arg-type]


def split4(mesh: Mesh) -> Mesh:
    """Split every triangle into 4 congruent children through its edge midpoints.

    Children keep the parent's orientation; shared edges share their midpoint.
    """
    if mesh.d != 2:
        raise ValueError(f"split4 needs a triangle mesh, got cells of dimension {mesh.d}")
    faces = mesh.cells
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    unique, inverse = np.unique(np.sort(edges, axis=1), axis=0, return_inverse=True)
    inverse = inverse.reshape(3, -1) + len(mesh.vertices)
    midpoints = mesh.vertices[unique].mean(axis=1)

    a, b, c = faces.T
    ab, bc, ca = inverse
    children = np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )
    return Mesh(vertices=np.concatenate([mesh.vertices, midpoints]), cells=children)


def _icosahedron() -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return vertices / np.linalg.norm(vertices, axis=1, keepdims=True), faces


def icosphere(levels: int = 1, radius: float = 1.0, center: ArrayLike = (0.0, 0.0, 0.0)) -> Mesh:
    """Outward-oriented icosphere with ``20 * 4**levels`` triangles."""
    if levels < 0:
        raise ValueError(f"levels must be >= 0, got {levels}")
    vertices, faces = _icosahedron()
    mesh = Mesh(vertices=vertices, cells=faces)
    for _ in range(levels):
        mesh = split4(mesh)
        vertices = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1, keepdims=True)
        mesh = mesh.with_vertices(vertices)
    return mesh.with_vertices(radius * mesh.vertices + np.asarray(center, dtype=float))


def random_varifold(
    rng: np.random.Generator,
    count: int,
    n: int = 2,
    d: int = 1,
    spread: float = 1.0,
) -> DiscreteVarifold:
    """Atoms with normal positions and normal frames."""
    return DiscreteVarifold(
        n=n,
        d=d,
        x=spread * rng.standard_normal((count, n)),
        frames=rng.standard_normal((count, d, n)),
    )
