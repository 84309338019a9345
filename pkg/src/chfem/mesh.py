"""Uniform periodic triangulations of the unit square.

Level ``k`` has ``n = 2**(3 + k)`` cells per side. Each cell ``(i, j)`` is
split along its bottom-left to top-right diagonal into a lower triangle
``2c`` and an upper triangle ``2c + 1`` with ``c = j n + i``. Vertices and
edges are stored once; periodic images resolve to the primary index through
``i mod n``, ``j mod n``.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import LevelTooLarge

MAX_LEVEL = 7

# edge kinds, attached to the cell at the edge's lower-left vertex
HORIZONTAL, VERTICAL, DIAGONAL = 0, 1, 2


@dataclass(frozen=True, eq=False)
class Mesh:
    level: int
    n: int
    vertices: np.ndarray  # (n^2, 2)
    triangles: np.ndarray  # (2 n^2, 3) primary vertex indices
    edges: np.ndarray  # (3 n^2, 2) primary vertex indices
    edge_midpoints: np.ndarray  # (3 n^2, 2)
    triangle_edges: np.ndarray  # (2 n^2, 3) edges (0,1), (1,2), (2,0) of each triangle
    corners: np.ndarray  # (2 n^2, 3, 2) unwrapped vertex coordinates
    periodic_map: dict = field(repr=False)
    parents: np.ndarray = field(default=None, repr=False)

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def areas(self):
        c = self.corners
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def shape_ratio(self):
        """Inradius over diameter for every triangle."""
        c = self.corners
        la = np.linalg.norm(c[:, 1] - c[:, 0], axis=1)
        lb = np.linalg.norm(c[:, 2] - c[:, 1], axis=1)
        lc = np.linalg.norm(c[:, 0] - c[:, 2], axis=1)
        rho = 2.0 * self.areas() / (la + lb + lc)
        return rho / np.maximum(np.maximum(la, lb), lc)

    def to_csv(self, vertex_path, triangle_path):
        with open(vertex_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "x", "y"])
            for k, (x, y) in enumerate(self.vertices):
                w.writerow([k, repr(float(x)), repr(float(y))])
        with open(triangle_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "v0", "v1", "v2"])
            for k, t in enumerate(self.triangles):
                w.writerow([k, *map(int, t)])


def _vid(i, j, n):
    return (j % n) * n + (i % n)


def build_uniform(level):
    if level < 0:
        raise ValueError("level must be nonnegative")
    if level > MAX_LEVEL:
        raise LevelTooLarge(f"level {level} exceeds the resource guard MAX_LEVEL={MAX_LEVEL}")
    n = 2 ** (3 + level)
    j, i = np.divmod(np.arange(n * n), n)
    vertices = np.column_stack([i / n, j / n])

    v00 = _vid(i, j, n)
    v10 = _vid(i + 1, j, n)
    v11 = _vid(i + 1, j + 1, n)
    v01 = _vid(i, j + 1, n)
    tri = np.empty((2 * n * n, 3), dtype=np.int64)
    tri[0::2] = np.column_stack([v00, v10, v11])
    tri[1::2] = np.column_stack([v00, v11, v01])

    edges = np.empty((3 * n * n, 2), dtype=np.int64)
    edges[HORIZONTAL::3] = np.column_stack([v00, v10])
    edges[VERTICAL::3] = np.column_stack([v00, v01])
    edges[DIAGONAL::3] = np.column_stack([v00, v11])
    mid = np.empty((3 * n * n, 2))
    mid[HORIZONTAL::3] = np.column_stack([(i + 0.5) / n, j / n])
    mid[VERTICAL::3] = np.column_stack([i / n, (j + 0.5) / n])
    mid[DIAGONAL::3] = np.column_stack([(i + 0.5) / n, (j + 0.5) / n])

    def eid(ii, jj, kind):
        return 3 * _vid(ii, jj, n) + kind

    tedges = np.empty((2 * n * n, 3), dtype=np.int64)
    # lower (00, 10, 11): edges (00-10), (10-11), (11-00)
    tedges[0::2] = np.column_stack([eid(i, j, HORIZONTAL), eid(i + 1, j, VERTICAL), eid(i, j, DIAGONAL)])
    # upper (00, 11, 01): edges (00-11), (11-01), (01-00)
    tedges[1::2] = np.column_stack([eid(i, j, DIAGONAL), eid(i, j + 1, HORIZONTAL), eid(i, j, VERTICAL)])

    x0, y0, x1, y1 = i / n, j / n, (i + 1) / n, (j + 1) / n
    corners = np.empty((2 * n * n, 3, 2))
    corners[0::2] = np.stack([np.column_stack([x0, y0]), np.column_stack([x1, y0]), np.column_stack([x1, y1])], axis=1)
    corners[1::2] = np.stack([np.column_stack([x0, y0]), np.column_stack([x1, y1]), np.column_stack([x0, y1])], axis=1)

    # image vertex (i, j) with i == n or j == n -> primary representative
    periodic_map = {}
    for a in range(n + 1):
        for b in range(n + 1):
            if a == n or b == n:
                periodic_map[(a, b)] = _vid(a, b, n)

    return Mesh(level, n, vertices, tri, edges, mid, tedges, corners, periodic_map)


def children_of(n_coarse):
    """Parent -> four children map for red refinement of a level with ``n_coarse`` cells per side.

    Returns an array of shape (2 n^2, 4) of fine triangle indices.
    """
    n = n_coarse
    nf = 2 * n
    j, i = np.divmod(np.arange(n * n), n)

    def t(ii, jj, upper):
        return 2 * (jj * nf + ii) + upper

    out = np.empty((2 * n * n, 4), dtype=np.int64)
    I, J = 2 * i, 2 * j
    out[0::2] = np.column_stack([t(I, J, 0), t(I + 1, J, 0), t(I + 1, J + 1, 0), t(I + 1, J, 1)])
    out[1::2] = np.column_stack([t(I, J, 1), t(I + 1, J + 1, 1), t(I, J + 1, 1), t(I, J + 1, 0)])
    return out


def refine(mesh):
    """Red refinement; the result equals ``build_uniform(level + 1)`` and carries ``parents``."""
    fine = build_uniform(mesh.level + 1)
    parents = np.empty(fine.n_triangles, dtype=np.int64)
    kids = children_of(mesh.n)
    parents[kids.ravel()] = np.repeat(np.arange(mesh.n_triangles), 4)
    object.__setattr__(fine, "parents", parents)
    return fine, kids


def coarse_vertex_in_fine(coarse, fine):
    """Fine vertex index carrying the same coordinates as each coarse vertex."""
    if fine.n != 2 * coarse.n:
        raise ValueError("meshes are not one refinement apart")
    j, i = np.divmod(np.arange(coarse.n_vertices), coarse.n)
    return (2 * j) * fine.n + 2 * i
