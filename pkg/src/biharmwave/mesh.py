"""Structured triangulations of rectangles with the edge adjacency needed for
jump and average terms.

Edge convention: every edge stores its vertex pair in the counterclockwise
order of its *left* triangle, and the unit normal points out of the left
triangle (towards the right one, or out of the domain on the boundary).
Jumps are always ``left trace - right trace``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

NONE = -1


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (V, 2)
    triangles: np.ndarray  # (F, 3), counterclockwise
    edge_vertices: np.ndarray  # (E, 2), ordered ccw w.r.t. the left triangle
    edge_left: np.ndarray  # (E,)
    edge_right: np.ndarray  # (E,), NONE on the boundary
    edge_normals: np.ndarray  # (E, 2)
    edge_lengths: np.ndarray  # (E,)
    edge_midpoints: np.ndarray  # (E, 2)
    tri_edges: np.ndarray  # (F, 3), local edge i is opposite local vertex i
    tri_edge_signs: np.ndarray  # (F, 3), +1 if the triangle is the edge's left one
    boundary_vertex: np.ndarray  # (V,) bool
    boundary_edge: np.ndarray  # (E,) bool
    rect: tuple[float, float, float, float]
    shape: tuple[int, int]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edge_left)

    @property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        sides = np.stack([p[:, 1] - p[:, 2], p[:, 2] - p[:, 0], p[:, 0] - p[:, 1]], axis=1)
        return np.linalg.norm(sides, axis=2).max(axis=1)

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def h_max(self) -> float:
        return float(self.diameters.max())

    @property
    def cell_width(self) -> float:
        """Side length of one grid cell in x; the nominal mesh size ``h`` used
        for time-step coupling and in error tables."""
        x0, _, x1, _ = self.rect
        return (x1 - x0) / self.shape[0]

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_edge)

    def edge_patch(self, e: int):
        """Return ``(left, right, normal, length, midpoint)`` for edge ``e``;
        ``right`` is None on the boundary."""
        if not 0 <= e < self.n_edges:
            raise IndexError(f"edge index {e} out of range [0, {self.n_edges})")
        right = int(self.edge_right[e])
        return (
            int(self.edge_left[e]),
            None if right == NONE else right,
            self.edge_normals[e].copy(),
            float(self.edge_lengths[e]),
            self.edge_midpoints[e].copy(),
        )

    def dump(self, path: str | Path) -> None:
        """Debug dump: header ``V E F``, vertex coordinates, triangle triples."""
        with open(path, "w") as fh:
            fh.write(f"{self.n_vertices} {self.n_edges} {self.n_triangles}\n")
            for x, y in self.vertices:
                fh.write(f"{x:.17g} {y:.17g}\n")
            for a, b, c in self.triangles:
                fh.write(f"{a} {b} {c}\n")


def from_triangles(vertices, triangles, rect=None, shape=(0, 0)) -> Mesh:
    """Build full adjacency for a conforming triangulation given ccw triangles."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    F = len(triangles)

    # local edge i opposite vertex i, traversed counterclockwise
    loc_a = triangles[:, [1, 2, 0]]
    loc_b = triangles[:, [2, 0, 1]]
    lo, hi = np.minimum(loc_a, loc_b).ravel(), np.maximum(loc_a, loc_b).ravel()
    keys = lo * len(vertices) + hi
    uniq, first, inverse, counts = np.unique(keys, return_index=True, return_inverse=True, return_counts=True)
    if counts.max() > 2:
        raise ValueError("non-manifold triangulation: an edge has more than two triangles")
    E = len(uniq)
    tri_edges = inverse.reshape(F, 3)

    tri_of = np.repeat(np.arange(F), 3)
    left = tri_of[first]
    right = np.full(E, NONE, dtype=np.int64)
    slot = np.arange(3 * F)
    other = slot[np.isin(slot, first, invert=True)]
    right[inverse[other]] = tri_of[other]

    a = loc_a.ravel()[first]
    b = loc_b.ravel()[first]
    edge_vertices = np.column_stack([a, b])
    d = vertices[b] - vertices[a]
    lengths = np.linalg.norm(d, axis=1)
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    midpoints = 0.5 * (vertices[a] + vertices[b])

    signs = np.where(left[tri_edges] == np.arange(F)[:, None], 1, -1)
    boundary_edge = right == NONE
    boundary_vertex = np.zeros(len(vertices), dtype=bool)
    boundary_vertex[edge_vertices[boundary_edge].ravel()] = True

    if rect is None:
        rect = (*vertices.min(axis=0), *vertices.max(axis=0))
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        edge_vertices=edge_vertices,
        edge_left=left,
        edge_right=right,
        edge_normals=normals,
        edge_lengths=lengths,
        edge_midpoints=midpoints,
        tri_edges=tri_edges,
        tri_edge_signs=signs,
        boundary_vertex=boundary_vertex,
        boundary_edge=boundary_edge,
        rect=tuple(float(v) for v in rect),
        shape=tuple(shape),
    )
    if np.any(mesh.areas <= 0):
        raise ValueError("triangles must be counterclockwise with positive area")
    return mesh


def build_uniform(nx: int, ny: int, rect=(0.0, 0.0, 1.0, 1.0)) -> Mesh:
    """Tensor grid of ``nx`` by ``ny`` cells, each split along its
    lower-left to upper-right diagonal."""
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"need positive integer cell counts, got nx={nx}, ny={ny}")
    x0, y0, x1, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate rectangle {rect}")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = (j * (nx + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return from_triangles(vertices, triangles, rect=(x0, y0, x1, y1), shape=(nx, ny))
