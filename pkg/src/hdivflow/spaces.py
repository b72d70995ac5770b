"""Finite element spaces: RT_k and BDM_k velocities, discontinuous P_l pressures.

Reference bases are built once per :class:`SpaceSpec` by inverting the
matrix of degrees of freedom evaluated on a monomial spanning set, so
that the basis is dual to the DOF functionals:

* edge moments ``int_e v.n L_m ds`` against shifted Legendre
  polynomials ``L_m``, ``m = 0..k``, in the arc-length parameter of the
  edge (local: from local vertex ``i+1`` to ``i+2``; global: from the
  lower to the higher vertex id),
* RT_k interior moments against ``[P_{k-1}]^2``,
* nodal values at equispaced points for discontinuous ``P_l``.

Velocity bases are mapped with the contravariant Piola transform, which
preserves edge moments exactly on affine cells.  Switching from the
local to the global edge orientation flips both the normal and the
parameter, so the moment against ``L_m`` picks up ``(-1)**(m+1)`` when
the signs disagree; :class:`DofMap` stores these factors.  Normal DOFs
on the boundary are dropped from the global numbering, which imposes
``v.n = 0`` strongly.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import legendre

from .mesh import LOCAL_EDGES
from .quadrature import edge_rule, triangle_rule

RT, BDM, P_DISC = "RT", "BDM", "P_disc"
SUPPORTED_DEGREES = {RT: (0, 1), BDM: (1,), P_DISC: (0, 1)}

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class GeometryError(ValueError):
    """Raised for degenerate cells."""


@dataclass(frozen=True)
class SpaceSpec:
    """Element family and degree.

    ``family`` is one of ``"RT"``, ``"BDM"``, ``"P_disc"``.
    """

    family: str
    degree: int

    def __post_init__(self):
        if self.family not in SUPPORTED_DEGREES:
            raise ValueError(f"unknown element family {self.family!r}")
        if self.family == BDM and self.degree < 1:
            raise ValueError("BDM_k needs k >= 1")
        if self.degree not in SUPPORTED_DEGREES[self.family]:
            raise ValueError(
                f"{self.family}_{self.degree} is not supported; degrees available: "
                f"{SUPPORTED_DEGREES[self.family]}"
            )

    @property
    def is_vector(self):
        return self.family != P_DISC

    @property
    def dofs_per_edge(self):
        return self.degree + 1 if self.is_vector else 0

    @property
    def dofs_per_cell_interior(self):
        k = self.degree
        if self.family == RT:
            return k * (k + 1)
        if self.family == BDM:
            return (k - 1) * (k + 1)
        return (k + 1) * (k + 2) // 2

    @property
    def dim(self):
        """Local dimension per cell."""
        return 3 * self.dofs_per_edge + self.dofs_per_cell_interior

    def __str__(self):
        return f"{self.family}{self.degree}"


RT0, RT1, BDM1 = SpaceSpec(RT, 0), SpaceSpec(RT, 1), SpaceSpec(BDM, 1)
P0, P1 = SpaceSpec(P_DISC, 0), SpaceSpec(P_DISC, 1)


# -- polynomial helpers ---------------------------------------------------
# A scalar polynomial is a square coefficient array c[a, b] for x**a * y**b;
# a vector polynomial stacks two of them, shape (2, d+1, d+1).

def _monomial(d, a, b):
    c = np.zeros((d + 1, d + 1))
    c[a, b] = 1.0
    return c


def _ddx(c):
    out = np.zeros_like(c)
    out[..., :-1, :] = c[..., 1:, :] * np.arange(1, c.shape[-2])[:, None]
    return out


def _ddy(c):
    out = np.zeros_like(c)
    out[..., :, :-1] = c[..., :, 1:] * np.arange(1, c.shape[-1])[None, :]
    return out


def _powers(xy, d):
    """Monomial table ``m[q, a, b] = x_q**a * y_q**b``."""
    px = xy[:, 0:1] ** np.arange(d + 1)
    py = xy[:, 1:2] ** np.arange(d + 1)
    return px[:, :, None] * py[:, None, :]


def _shifted_legendre(m, s):
    return legendre.legval(2.0 * s - 1.0, np.eye(m + 1)[m])


def _spanning_set(spec):
    k = spec.degree
    if spec.family == P_DISC:
        return k, [_monomial(k, a, b) for a in range(k + 1) for b in range(k + 1 - a)]
    d = k + 1 if spec.family == RT else k
    span = []
    for a in range(k + 1):
        for b in range(k + 1 - a):
            m = _monomial(d, a, b)
            z = np.zeros_like(m)
            span += [np.stack([m, z]), np.stack([z, m])]
    if spec.family == RT:
        # x * (homogeneous P_k)
        for a in range(k + 1):
            b = k - a
            span.append(np.stack([_monomial(d, a + 1, b), _monomial(d, a, b + 1)]))
    return d, span


def _lagrange_nodes(k):
    if k == 0:
        return np.array([[1 / 3, 1 / 3]])
    return np.array([[i / k, j / k] for j in range(k + 1) for i in range(k + 1 - j)])


class ReferenceBasis:
    """Nodal basis of one :class:`SpaceSpec` on the reference triangle.

    Attributes
    ----------
    coeffs : ndarray
        ``(nb, 2, d+1, d+1)`` for vector families, ``(nb, d+1, d+1)`` for
        scalar ones.
    """

    def __init__(self, spec):
        self.spec = spec
        self.poly_degree, span = _spanning_set(spec)
        span = np.array(span)
        D = self.dof_functionals(span)
        if D.shape[0] != D.shape[1]:
            raise AssertionError("DOF count does not match spanning set")
        self.coeffs = np.einsum("i...,ij->j...", span, np.linalg.inv(D))
        self.coeffs.flags.writeable = False

    @property
    def size(self):
        return len(self.coeffs)

    def dof_functionals(self, polys):
        """Evaluate every DOF functional on a stack of polynomials.

        Returns ``D[f, j]`` = functional ``f`` applied to ``polys[j]``.
        """
        spec = self.spec
        k = spec.degree
        d = polys.shape[-1] - 1
        if spec.family == P_DISC:
            nodes = _lagrange_nodes(k)
            return np.einsum("qab,jab->qj", _powers(nodes, d), polys)

        rows = []
        q = edge_rule(2 * k + 2 * d + 1)
        for i in range(3):
            a, b = REF_VERTICES[LOCAL_EDGES[i]]
            t = b - a
            nu = np.array([t[1], -t[0]])  # |e| times the outward normal
            pts = a + q.points[:, None] * t
            vals = np.einsum("qab,jcab->jqc", _powers(pts, d), polys) @ nu
            for m in range(k + 1):
                rows.append(vals @ (q.weights * _shifted_legendre(m, q.points)))
        if spec.family == RT and k >= 1:
            tq = triangle_rule(max(1, d + k - 1))
            vals = np.einsum("qab,jcab->jqc", _powers(tq.xy, d), polys)
            pw = _powers(tq.xy, k - 1)
            for a in range(k):
                for b in range(k - a):
                    w = 0.5 * tq.weights * pw[:, a, b]
                    rows += [vals[:, :, 0] @ w, vals[:, :, 1] @ w]
        return np.array(rows)

    def tabulate(self, xy, derivatives=True):
        """Evaluate the basis at reference points ``xy`` (nq, 2).

        Returns
        -------
        BasisTable
            Vector families: ``values`` (nb, nq, 2), ``div`` (nb, nq) and
            ``grad`` (nb, nq, 2, 2) with ``grad[..., i, j] = d v_i / d x_j``.
            Scalar families: ``values`` (nb, nq), ``grad`` (nb, nq, 2).
        """
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        pw = _powers(xy, self.poly_degree)
        ev = lambda c: np.einsum("qab,j...ab->jq...", pw, c)
        values = ev(self.coeffs)
        if not derivatives:
            return BasisTable(values, None, None)
        dx, dy = ev(_ddx(self.coeffs)), ev(_ddy(self.coeffs))
        if self.spec.is_vector:
            grad = np.stack([dx, dy], axis=-1)
            return BasisTable(values, dx[..., 0] + dy[..., 1], grad)
        return BasisTable(values, None, np.stack([dx, dy], axis=-1))


@dataclass(frozen=True)
class BasisTable:
    values: np.ndarray
    div: np.ndarray
    grad: np.ndarray


@lru_cache(maxsize=None)
def get_reference_basis(spec):
    return ReferenceBasis(spec)


def reference_basis(spec, points):
    """Tabulate the reference basis of ``spec`` at barycentric ``points`` (nq, 3)."""
    lam = np.atleast_2d(np.asarray(points, dtype=float))
    if lam.shape[1] != 3:
        raise ValueError("points must be barycentric triples")
    if np.any(lam < -1e-12) or np.any(np.abs(lam.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("points must lie in the reference triangle")
    return get_reference_basis(spec).tabulate(lam[:, 1:])


def piola_map(cell_vertices, ref_values, ref_div=None):
    """Contravariant Piola transform ``v = J v_ref / det J`` on one affine cell.

    Parameters
    ----------
    cell_vertices : array_like (3, 2)
    ref_values : array_like (..., 2)
    ref_div : array_like, optional
        Reference divergence; mapped to ``div_ref / det J`` when given.
    """
    xv = np.asarray(cell_vertices, dtype=float)
    J = np.column_stack([xv[1] - xv[0], xv[2] - xv[0]])
    det = np.linalg.det(J)
    if abs(det) < 1e-14:
        raise GeometryError(f"degenerate cell, det J = {det:g}")
    values = np.asarray(ref_values, dtype=float) @ J.T / det
    if ref_div is None:
        return values
    return values, np.asarray(ref_div, dtype=float) / det


# -- DOF maps ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DofMap:
    """Cell-to-global DOF numbering.

    ``cell_to_global[c, i]`` is ``-1`` for boundary normal DOFs removed
    from the space; ``signs[c, i]`` converts a global coefficient into the
    coefficient of the local reference basis function.
    """

    cell_to_global: np.ndarray
    signs: np.ndarray
    n_global: int

    @property
    def active(self):
        return self.cell_to_global >= 0


def build_dof_map(mesh, spec):
    nc = mesh.n_cells
    if not spec.is_vector:
        n = spec.dim
        c2g = np.arange(nc * n, dtype=np.int64).reshape(nc, n)
        return _frozen_dofmap(c2g, np.ones((nc, n)), nc * n)

    ke = spec.dofs_per_edge
    ni = spec.dofs_per_cell_interior
    rank = np.cumsum(mesh.interior) - 1
    n_edge_dofs = int(mesh.interior.sum()) * ke

    c2g = np.empty((nc, spec.dim), dtype=np.int64)
    signs = np.ones((nc, spec.dim))
    for le in range(3):
        e = mesh.cell_edges[:, le]
        s = mesh.cell_edge_signs[:, le]
        for m in range(ke):
            col = le * ke + m
            c2g[:, col] = np.where(mesh.boundary[e], -1, rank[e] * ke + m)
            signs[:, col] = np.where(s > 0, 1.0, (-1.0) ** (m + 1))
    c2g[:, 3 * ke:] = n_edge_dofs + np.arange(nc * ni).reshape(nc, ni)
    return _frozen_dofmap(c2g, signs, n_edge_dofs + nc * ni)


def _frozen_dofmap(c2g, signs, n):
    c2g.flags.writeable = False
    signs.flags.writeable = False
    return DofMap(c2g, signs, int(n))


class FunctionSpace:
    """A :class:`SpaceSpec` on a mesh together with its DOF map."""

    def __init__(self, mesh, spec):
        self.mesh = mesh
        self.spec = spec
        self.basis = get_reference_basis(spec)
        self.dofmap = build_dof_map(mesh, spec)

    @property
    def dim(self):
        return self.dofmap.n_global

    def __repr__(self):
        return f"FunctionSpace({self.spec}, n_cells={self.mesh.n_cells}, dim={self.dim})"

    def local_coefficients(self, coefficients):
        """Gather global coefficients into per-cell reference coefficients (nc, nb)."""
        c2g = self.dofmap.cell_to_global
        loc = np.asarray(coefficients, dtype=float)[np.maximum(c2g, 0)]
        return np.where(c2g >= 0, loc * self.dofmap.signs, 0.0)

    def tabulate(self, xy, derivatives=True):
        """Physical basis functions on every cell at reference points ``xy``.

        Returns a :class:`BasisTable` with a leading cell axis.  Vector
        values are Piola mapped; scalar values are plain pull-backs.
        """
        ref = self.basis.tabulate(xy, derivatives)
        J, det = self.mesh.jacobians, self.mesh.dets
        if not self.spec.is_vector:
            values = np.broadcast_to(ref.values, (self.mesh.n_cells,) + ref.values.shape)
            if not derivatives:
                return BasisTable(values, None, None)
            Jinv = np.linalg.inv(J)
            grad = np.einsum("bqk,ckj->cbqj", ref.grad, Jinv)
            return BasisTable(values, None, grad)
        values = np.einsum("cij,bqj->cbqi", J, ref.values) / det[:, None, None, None]
        if not derivatives:
            return BasisTable(values, None, None)
        div = ref.div[None] / det[:, None, None]
        Jinv = np.linalg.inv(J)
        grad = np.einsum("cik,bqkl,clj->cbqij", J, ref.grad, Jinv) / det[:, None, None, None, None]
        return BasisTable(values, div, grad)


# -- discrete fields --------------------------------------------------------

@dataclass(eq=False)
class DiscreteField:
    """Coefficient vector of a :class:`FunctionSpace`."""

    space: FunctionSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.dim,):
            raise ValueError(
                f"expected {self.space.dim} coefficients, got {self.coefficients.shape}"
            )

    @classmethod
    def zeros(cls, space):
        return cls(space, np.zeros(space.dim))

    def cell_values(self, xy, with_div=False):
        """Values at reference points ``xy`` on every cell: (nc, nq[, 2])."""
        tab = self.space.tabulate(xy, derivatives=with_div)
        loc = self.space.local_coefficients(self.coefficients)
        vals = np.einsum("cb,cbq...->cq...", loc, tab.values)
        if not with_div:
            return vals
        return vals, np.einsum("cb,cbq->cq", loc, tab.div)

    def evaluate(self, cell, points):
        """Evaluate on one cell at physical ``points`` (n, 2) lying in that cell."""
        mesh = self.space.mesh
        if not 0 <= cell < mesh.n_cells:
            raise IndexError(f"cell index {cell} out of range [0, {mesh.n_cells})")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        J = mesh.jacobians[cell]
        xy = np.linalg.solve(J, (pts - mesh.cell_coords[cell, 0]).T).T
        ref = self.space.basis.tabulate(xy, derivatives=False).values
        loc = self.space.local_coefficients(self.coefficients)[cell]
        vals = np.tensordot(loc, ref, axes=(0, 0))
        if self.space.spec.is_vector:
            return piola_map(mesh.cell_coords[cell], vals)
        return vals


def evaluate(field, cell, points):
    return field.evaluate(cell, points)


def edge_points(mesh, t):
    """Physical points at global edge parameters ``t``, shape (ne, nt, 2)."""
    xy = mesh.edge_endpoints()
    return xy[:, None, 0] + t[None, :, None] * (xy[:, None, 1] - xy[:, None, 0])


def rt_interpolate(space, field, quad_degree=None):
    """Raviart-Thomas interpolant of a vector field.

    Edge moments against ``P_k(e)`` and interior moments against
    ``[P_{k-1}(T)]^2`` of the interpolant match those of ``field``.
    Boundary edges carry no DOFs, so ``field.n`` should vanish on the
    boundary.

    Parameters
    ----------
    space : FunctionSpace
        An RT space.
    field : callable
        ``field(x, y)`` returning an array of shape ``x.shape + (2,)``.
    quad_degree : int, optional
        Exactness of the quadrature used for the moments.
    """
    spec = space.spec
    if spec.family != RT:
        raise ValueError(f"the RT interpolant needs an RT space, got {spec}")
    k = spec.degree
    mesh = space.mesh
    deg = quad_degree or 2 * k + 6
    coeffs = np.zeros(space.dim)

    q = edge_rule(deg)
    ie = np.flatnonzero(mesh.interior)
    xy = mesh.edge_endpoints()[ie]
    t = xy[:, 1] - xy[:, 0]
    nu = np.column_stack([t[:, 1], -t[:, 0]])
    pts = edge_points(mesh, q.points)[ie]
    flux = np.einsum("eqc,ec->eq", field(pts[..., 0], pts[..., 1]), nu)
    for m in range(k + 1):
        coeffs[np.arange(len(ie)) * (k + 1) + m] = flux @ (q.weights * _shifted_legendre(m, q.points))

    if space.spec.dofs_per_cell_interior:
        tq = triangle_rule(deg)
        X = mesh.map_to_physical(tq.xy)
        v = field(X[..., 0], X[..., 1])
        # pulled-back field det(J) J^{-1} v
        Jinv = np.linalg.inv(mesh.jacobians)
        vref = np.einsum("cij,cqj->cqi", Jinv, v) * mesh.dets[:, None, None]
        pw = _powers(tq.xy, k - 1)
        moments = []
        for a in range(k):
            for b in range(k - a):
                w = 0.5 * tq.weights * pw[:, a, b]
                moments += [vref[..., 0] @ w, vref[..., 1] @ w]
        interior = space.dofmap.cell_to_global[:, 3 * (k + 1):]
        coeffs[interior] = np.column_stack(moments)
    return DiscreteField(space, coeffs)


def l2_project(space, field, quad_degree=None):
    """Cellwise L2 projection of a scalar field onto discontinuous ``P_l``.

    ``field(x, y)`` must return an array shaped like ``x``.
    """
    if space.spec.is_vector:
        raise ValueError("l2_project targets a discontinuous scalar space")
    deg = quad_degree or 2 * space.spec.degree + 6
    tq = triangle_rule(deg)
    psi = space.basis.tabulate(tq.xy, derivatives=False).values
    M = np.einsum("q,iq,jq->ij", tq.weights, psi, psi)
    X = space.mesh.map_to_physical(tq.xy)
    rhs = np.einsum("q,cq,iq->ci", tq.weights, field(X[..., 0], X[..., 1]), psi)
    local = np.linalg.solve(M, rhs.T).T
    coeffs = np.empty(space.dim)
    coeffs[space.dofmap.cell_to_global] = local
    return DiscreteField(space, coeffs)
