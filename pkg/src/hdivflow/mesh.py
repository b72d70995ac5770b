"""Structured triangulations of the unit square with edge/cell adjacency.

Every square of an ``N x N`` grid is cut into two triangles.  The
diagonal is ``/`` (from lower-left to upper-right) or ``\\``:

* ``right``      -- ``/`` everywhere
* ``left``       -- ``\\`` everywhere
* ``union_jack`` -- ``/`` when ``i + j`` is even, ``\\`` otherwise

Edges carry a global orientation from the lower to the higher vertex
index and a global unit normal obtained by rotating that tangent 90
degrees clockwise.  ``cell_edge_signs[c, i]`` is +1 when the outward
normal of cell ``c`` on its local edge ``i`` equals the global normal.
Local edge ``i`` is the edge opposite local vertex ``i`` and runs from
local vertex ``i+1`` to ``i+2`` (mod 3).

With ``periodic_x=True`` the lines ``x=0`` and ``x=1`` are identified.
Geometry stays attached to the cells (vertex coordinates are not
wrapped), while edges are built from the identified vertex ids.
"""

from dataclasses import dataclass, field

import numpy as np

PATTERNS = ("union_jack", "right", "left")

# local edge i joins local vertices LOCAL_EDGES[i]
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulation with full adjacency.

    Attributes
    ----------
    vertices : ndarray (nv, 2)
        Vertex coordinates.
    cells : ndarray (nc, 3)
        Counter-clockwise vertex indices into ``vertices``.
    vertex_ids : ndarray (nv,)
        Topological id of every vertex; differs from ``arange(nv)`` only
        for periodic meshes.
    edges : ndarray (ne, 2)
        Topological vertex ids, lower id first.
    cell_edges : ndarray (nc, 3)
        Global edge index of each local edge.
    cell_edge_signs : ndarray (nc, 3)
        Orientation sign of each local edge (see module docstring).
    edge_cells : ndarray (ne, 2)
        Adjacent cells, lower index first; ``-1`` in column 1 on the boundary.
    edge_local : ndarray (ne, 2)
        Local edge index of the edge inside each adjacent cell.
    boundary : ndarray (ne,) of bool
    h_max : float
    """

    vertices: np.ndarray
    cells: np.ndarray
    vertex_ids: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    cell_edge_signs: np.ndarray
    edge_cells: np.ndarray
    edge_local: np.ndarray
    boundary: np.ndarray
    h_max: float
    periodic_x: bool = False
    _geometry: dict = field(default_factory=dict, repr=False)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_vertices(self):
        """Number of topologically distinct vertices."""
        return int(self.vertex_ids.max()) + 1

    @property
    def interior(self):
        return ~self.boundary

    # -- cell geometry -----------------------------------------------------

    @property
    def cell_coords(self):
        """Vertex coordinates per cell, shape (nc, 3, 2)."""
        return self._cached("coords", lambda: self.vertices[self.cells])

    @property
    def jacobians(self):
        """Affine map Jacobians ``J = [x1 - x0, x2 - x0]``, shape (nc, 2, 2)."""

        def build():
            xc = self.cell_coords
            return np.stack([xc[:, 1] - xc[:, 0], xc[:, 2] - xc[:, 0]], axis=-1)

        return self._cached("J", build)

    @property
    def dets(self):
        return self._cached("detJ", lambda: np.linalg.det(self.jacobians))

    @property
    def areas(self):
        return 0.5 * self.dets

    @property
    def diameters(self):
        def build():
            xc = self.cell_coords
            d = xc[:, LOCAL_EDGES[:, 1]] - xc[:, LOCAL_EDGES[:, 0]]
            return np.linalg.norm(d, axis=-1).max(axis=1)

        return self._cached("diam", build)

    def map_to_physical(self, ref_xy):
        """Map reference points (nq, 2) to physical points (nc, nq, 2)."""
        x0 = self.cell_coords[:, 0]
        return x0[:, None, :] + np.einsum("cij,qj->cqi", self.jacobians, ref_xy)

    def _cached(self, key, build):
        if key not in self._geometry:
            value = build()
            value.flags.writeable = False
            self._geometry[key] = value
        return self._geometry[key]

    # -- edge geometry -----------------------------------------------------

    def edge_endpoints(self):
        """Endpoint coordinates of each edge, ordered low -> high id, (ne, 2, 2).

        The realisation is taken from the first adjacent cell, which matters
        only for the seam edges of a periodic mesh.
        """

        def build():
            c = self.edge_cells[:, 0]
            le = self.edge_local[:, 0]
            a = self.cell_coords[c, LOCAL_EDGES[le, 0]]
            b = self.cell_coords[c, LOCAL_EDGES[le, 1]]
            flip = self.cell_edge_signs[c, le] < 0
            start = np.where(flip[:, None], b, a)
            end = np.where(flip[:, None], a, b)
            return np.stack([start, end], axis=1)

        return self._cached("edge_xy", build)

    def edge_geometry(self, edge):
        """Return ``(unit_normal, length, midpoint)`` of one edge.

        Raises
        ------
        IndexError
            If ``edge`` is out of range.
        """
        if not 0 <= edge < self.n_edges:
            raise IndexError(f"edge index {edge} out of range [0, {self.n_edges})")
        a, b = self.edge_endpoints()[edge]
        t = b - a
        length = float(np.hypot(*t))
        normal = np.array([t[1], -t[0]]) / length
        return normal, length, 0.5 * (a + b)

    def edge_normals(self):
        """Global unit normals of all edges, shape (ne, 2)."""
        xy = self.edge_endpoints()
        t = xy[:, 1] - xy[:, 0]
        n = np.column_stack([t[:, 1], -t[:, 0]])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def edge_lengths(self):
        xy = self.edge_endpoints()
        return np.linalg.norm(xy[:, 1] - xy[:, 0], axis=1)

    # -- output ------------------------------------------------------------

    def dump(self, path):
        """Write the plain-text mesh dump (``vertex``/``cell``/``edge`` lines)."""
        with open(path, "w") as fh:
            for x, y in self.vertices:
                fh.write(f"vertex {float(x)!r} {float(y)!r}\n")
            for v in self.cells:
                fh.write(f"cell {v[0]} {v[1]} {v[2]}\n")
            for (a, b), bnd in zip(self.edges, self.boundary):
                fh.write(f"edge {a} {b} {int(bnd)}\n")


def build_unit_square_mesh(cells_per_side, pattern="union_jack", periodic_x=False):
    """Triangulate the unit square with ``cells_per_side`` squares per side.

    Parameters
    ----------
    cells_per_side : int
        Number of squares ``N`` along each side; ``h_max = sqrt(2) / N``.
    pattern : {"union_jack", "right", "left"}
    periodic_x : bool
        Identify ``x = 0`` with ``x = 1``.  Needs ``N >= 3`` so that no two
        edges share the same pair of vertex ids.

    Returns
    -------
    Mesh
    """
    if isinstance(cells_per_side, bool) or not isinstance(cells_per_side, (int, np.integer)):
        raise ValueError(f"cells_per_side must be an integer, got {cells_per_side!r}")
    n = int(cells_per_side)
    if n < 1:
        raise ValueError(f"cells_per_side must be >= 1, got {n}")
    if (n + 1) ** 2 >= np.iinfo(np.int64).max // 8:
        raise ValueError(f"cells_per_side={n} overflows the index type")
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")
    if periodic_x and n < 3:
        raise ValueError("periodic meshes need cells_per_side >= 3")

    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s)  # vertex (i, j) -> j * (n + 1) + i
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    v00 = j * (n + 1) + i
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    if pattern == "right":
        slash = np.ones(n * n, dtype=bool)
    elif pattern == "left":
        slash = np.zeros(n * n, dtype=bool)
    else:
        slash = (i + j) % 2 == 0
    lower = np.where(slash[:, None],
                     np.column_stack([v00, v10, v11]),
                     np.column_stack([v00, v10, v01]))
    upper = np.where(slash[:, None],
                     np.column_stack([v00, v11, v01]),
                     np.column_stack([v10, v11, v01]))
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    if periodic_x:
        vi = np.arange(len(vertices)) % (n + 1)
        vj = np.arange(len(vertices)) // (n + 1)
        vertex_ids = vj * n + vi % n
    else:
        vertex_ids = np.arange(len(vertices))

    return _from_cells(vertices, cells, vertex_ids, np.sqrt(2.0) / n, periodic_x)


def _from_cells(vertices, cells, vertex_ids, h_max, periodic_x):
    nc = len(cells)
    tc = vertex_ids[cells]
    a = tc[:, LOCAL_EDGES[:, 0]]
    b = tc[:, LOCAL_EDGES[:, 1]]
    signs = np.where(a < b, 1, -1).astype(np.int64)
    pairs = np.stack([np.minimum(a, b), np.maximum(a, b)], axis=-1).reshape(-1, 2)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    cell_edges = inverse.reshape(nc, 3)

    ne = len(edges)
    occ_cell = np.repeat(np.arange(nc), 3)
    occ_local = np.tile(np.arange(3), nc)
    order = np.lexsort((occ_cell, inverse))  # by edge, then by cell
    counts = np.bincount(inverse, minlength=ne)
    if counts.max() > 2:
        raise ValueError("non-manifold triangulation: an edge has more than two cells")
    first = np.concatenate([[0], np.cumsum(counts)[:-1]])
    edge_cells = np.full((ne, 2), -1, dtype=np.int64)
    edge_local = np.full((ne, 2), -1, dtype=np.int64)
    edge_cells[:, 0] = occ_cell[order][first]
    edge_local[:, 0] = occ_local[order][first]
    two = counts == 2
    edge_cells[two, 1] = occ_cell[order][first[two] + 1]
    edge_local[two, 1] = occ_local[order][first[two] + 1]

    arrays = dict(
        vertices=vertices, cells=cells, vertex_ids=vertex_ids, edges=edges,
        cell_edges=cell_edges, cell_edge_signs=signs, edge_cells=edge_cells,
        edge_local=edge_local, boundary=counts == 1,
    )
    for arr in arrays.values():
        arr.flags.writeable = False
    return Mesh(h_max=float(h_max), periodic_x=periodic_x, **arrays)
