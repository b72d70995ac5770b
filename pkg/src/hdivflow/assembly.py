"""Assembly of the upwind H(div) saddle-point system.

For velocity test functions ``v`` and pressure test functions ``q`` the
assembled rows are::

    -(u, beta.grad v)_h + <(beta.n) u^, v>_h + (sigma u, v) - (p, div v) = (f, v)
    (div u, q) + lam * int q = 0
    sum_j (int psi_j) p_j = 0

``u^`` is the upwind trace, chosen independently at every facet
quadrature point: the trace from the cell whose outward normal has
``beta.n > 0``.  Where ``beta.n == 0`` the facet integrand vanishes.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import LOCAL_EDGES
from .quadrature import default_degrees, edge_rule, triangle_rule
from .spaces import (BDM, P_DISC, REF_VERTICES, RT, FunctionSpace, SpaceSpec,
                     edge_points, rt_interpolate)

BOUNDARY_FLUX_TOL = 1e-10


class ProblemSetupError(ValueError):
    """The problem data violate an assumption of the method."""


@dataclass(frozen=True)
class QuadConfig:
    """Exactness degrees of the volume and edge rules."""

    volume_degree: int
    edge_degree: int

    @classmethod
    def for_degree(cls, k, extra=0):
        vol, edge = default_degrees(k)
        return cls(vol + extra, edge + extra)

    def elevated(self, extra):
        return QuadConfig(self.volume_degree + extra, self.edge_degree + extra)


@dataclass(frozen=True, eq=False)
class SaddleSystem:
    """Block system over ``(u, p, lam)``; ``matrix`` is CSR."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    block_sizes: tuple

    @property
    def shape(self):
        return self.matrix.shape

    def split(self, x):
        nu, np_, _ = self.block_sizes
        return x[:nu], x[nu:nu + np_], float(x[nu + np_])

    def dump(self, path):
        """Write the matrix as ``row col value`` lines (0-based)."""
        A = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"% {A.shape[0]} {A.shape[1]} {A.nnz}\n")
            for r, c, v in zip(A.row, A.col, A.data):
                fh.write(f"{r} {c} {float(v)!r}\n")


def _scatter(rows, cols, vals, shape):
    """Sum triplets into CSR in an order that does not depend on input order."""
    rows, cols, vals = (np.ravel(a) for a in (rows, cols, vals))
    keep = (rows >= 0) & (cols >= 0)
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    order = np.lexsort((vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows):
        start = np.flatnonzero(np.r_[True, (np.diff(rows) != 0) | (np.diff(cols) != 0)])
        rows, cols, vals = rows[start], cols[start], np.add.reduceat(vals, start)
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)


def _scatter_cells(space_r, space_c, local):
    """Scatter per-cell local matrices ``local[c, i, j]``."""
    rows, cols, vals = _cell_triplets(space_r, space_c, local)
    return _scatter(rows, cols, vals, (space_r.dim, space_c.dim))


def _cell_triplets(space_r, space_c, local):
    dr, dc = space_r.dofmap, space_c.dofmap
    vals = local * dr.signs[:, :, None] * dc.signs[:, None, :]
    rows = np.broadcast_to(dr.cell_to_global[:, :, None], local.shape)
    cols = np.broadcast_to(dc.cell_to_global[:, None, :], local.shape)
    return rows, cols, vals


def _volume_rule(space, quad):
    tq = triangle_rule(quad.volume_degree)
    mesh = space.mesh
    X = mesh.map_to_physical(tq.xy)
    wdet = 0.5 * tq.weights[None, :] * mesh.dets[:, None]  # (nc, nq)
    return tq, X, wdet


def mass_matrix(space, sigma, quad):
    """``(sigma u, v)`` for a vector space, ``(p, q)`` if ``sigma`` is None."""
    tq, X, wdet = _volume_rule(space, quad)
    tab = space.tabulate(tq.xy, derivatives=False)
    w = wdet if sigma is None else wdet * sigma(X[..., 0], X[..., 1])
    if space.spec.is_vector:
        local = np.einsum("cq,ciqk,cjqk->cij", w, tab.values, tab.values)
    else:
        local = np.einsum("cq,iq,jq->cij", w, tab.values[0], tab.values[0])
    return _scatter_cells(space, space, local)


def divergence_matrix(pspace, vspace, quad):
    """``B[q_j, v_i] = (psi_j, div phi_i)``, shape (n_p, n_u)."""
    tq, _, wdet = _volume_rule(vspace, quad)
    vt = vspace.tabulate(tq.xy)
    psi = pspace.basis.tabulate(tq.xy, derivatives=False).values
    local = np.einsum("cq,jq,ciq->cji", wdet, psi, vt.div)
    return _scatter_cells(pspace, vspace, local)


def load_vector(space, f, quad):
    tq, X, wdet = _volume_rule(space, quad)
    tab = space.tabulate(tq.xy, derivatives=False)
    local = np.einsum("cq,cqk,ciqk->ci", wdet, f(X[..., 0], X[..., 1]), tab.values)
    return _gather_load(space, local)


def interpolated_load_vector(space, fh, quad):
    """``(f_h, v)`` for a discrete field ``f_h`` on the same mesh."""
    tq, _, wdet = _volume_rule(space, quad)
    tab = space.tabulate(tq.xy, derivatives=False)
    local = np.einsum("cq,cqk,ciqk->ci", wdet, fh.cell_values(tq.xy), tab.values)
    return _gather_load(space, local)


def _gather_load(space, local):
    dm = space.dofmap
    out = np.zeros(space.dim)
    np.add.at(out, dm.cell_to_global[dm.active], (local * dm.signs)[dm.active])
    return out


def pressure_mean_vector(pspace, quad=None):
    """``m_j = int_Omega psi_j``."""
    deg = quad.volume_degree if quad else 2 * pspace.spec.degree + 2
    tq = triangle_rule(deg)
    psi = pspace.basis.tabulate(tq.xy, derivatives=False).values
    local = 0.5 * pspace.mesh.dets[:, None] * (psi @ tq.weights)[None, :]
    out = np.zeros(pspace.dim)
    out[pspace.dofmap.cell_to_global] = local
    return out


# -- convection ---------------------------------------------------------------

def _facet_tables(space, t):
    """Reference basis on every (local edge, reversed?) combination at params ``t``.

    Returns an array (3, 2, nb, nt, 2).
    """
    out = []
    for le in range(3):
        a, b = REF_VERTICES[LOCAL_EDGES[le]]
        per_flip = []
        for s in (t, 1.0 - t):
            xy = a + s[:, None] * (b - a)
            per_flip.append(space.basis.tabulate(xy, derivatives=False).values)
        out.append(per_flip)
    return np.array(out)


def _trace(space, tables, cells, local_edges):
    """Piola-mapped basis traces on facets, (nf, nb, nt, 2)."""
    mesh = space.mesh
    flip = (mesh.cell_edge_signs[cells, local_edges] < 0).astype(int)
    ref = tables[local_edges, flip]
    J = mesh.jacobians[cells]
    return np.einsum("fij,fbqj->fbqi", J, ref) / mesh.dets[cells, None, None, None]


def boundary_normal_flux(mesh, beta, edge_degree=9):
    """Maximum ``|beta.n|`` over boundary edge quadrature points."""
    q = edge_rule(edge_degree)
    be = np.flatnonzero(mesh.boundary)
    if len(be) == 0:
        return 0.0
    pts = edge_points(mesh, q.points)[be]
    bn = np.einsum("eqk,ek->eq", beta(pts[..., 0], pts[..., 1]), mesh.edge_normals()[be])
    return float(np.abs(bn).max())


def convection_matrix(space, beta, quad, include_boundary=False):
    """Matrix of ``-(u, beta.grad v)_h + <(beta.n) u^, v>_h`` (rows: test ``v``).

    Volume and interior-facet terms are always assembled.  Boundary facets
    are assembled only with ``include_boundary``; there the upwind trace is
    the interior trace on outflow and zero on inflow.
    """
    mesh = space.mesh

    tq, X, wdet = _volume_rule(space, quad)
    tab = space.tabulate(tq.xy)
    b = beta(X[..., 0], X[..., 1])  # (nc, nq, 2)
    # (beta . grad) phi_i = grad(phi_i) beta
    adv = np.einsum("cbqij,cqj->cbqi", tab.grad, b)
    local = -np.einsum("cq,cjqk,ciqk->cij", wdet, tab.values, adv)
    triplets = [_cell_triplets(space, space, local)]

    q = edge_rule(quad.edge_degree)
    tables = _facet_tables(space, q.points)
    pts = edge_points(mesh, q.points)  # (ne, nt, 2)
    bn = np.einsum("eqk,ek->eq", beta(pts[..., 0], pts[..., 1]), mesh.edge_normals())
    wlen = q.weights[None, :] * mesh.edge_lengths()[:, None]
    dm = space.dofmap

    ie = np.flatnonzero(mesh.interior)
    if len(ie):
        c1, c2 = mesh.edge_cells[ie].T
        l1, l2 = mesh.edge_local[ie].T
        phi1 = _trace(space, tables, c1, l1)
        phi2 = _trace(space, tables, c2, l2)
        b1 = bn[ie] * mesh.cell_edge_signs[c1, l1][:, None]  # beta.n_out of c1
        wb = wlen[ie] * b1
        up1 = wb * (b1 > 0)
        up2 = wb * (b1 < 0)
        # test side (c1: +, c2: -) x upwind trial side
        blocks = {
            (0, 0): np.einsum("fq,fjqk,fiqk->fij", up1, phi1, phi1),
            (0, 1): np.einsum("fq,fjqk,fiqk->fij", up2, phi2, phi1),
            (1, 0): -np.einsum("fq,fjqk,fiqk->fij", up1, phi1, phi2),
            (1, 1): -np.einsum("fq,fjqk,fiqk->fij", up2, phi2, phi2),
        }
        cells = (c1, c2)
        for (ts, us), blk in blocks.items():
            ct, cu = cells[ts], cells[us]
            vals = blk * dm.signs[ct][:, :, None] * dm.signs[cu][:, None, :]
            rows = np.broadcast_to(dm.cell_to_global[ct][:, :, None], vals.shape)
            cols = np.broadcast_to(dm.cell_to_global[cu][:, None, :], vals.shape)
            triplets.append((rows, cols, vals))

    if include_boundary:
        be = np.flatnonzero(mesh.boundary)
        c1 = mesh.edge_cells[be, 0]
        l1 = mesh.edge_local[be, 0]
        phi = _trace(space, tables, c1, l1)
        b1 = bn[be] * mesh.cell_edge_signs[c1, l1][:, None]
        up = wlen[be] * b1 * (b1 > 0)
        blk = np.einsum("fq,fjqk,fiqk->fij", up, phi, phi)
        vals = blk * dm.signs[c1][:, :, None] * dm.signs[c1][:, None, :]
        rows = np.broadcast_to(dm.cell_to_global[c1][:, :, None], vals.shape)
        cols = np.broadcast_to(dm.cell_to_global[c1][:, None, :], vals.shape)
        triplets.append((rows, cols, vals))

    rows, cols, vals = (np.concatenate([np.ravel(t[i]) for t in triplets]) for i in range(3))
    return _scatter(rows, cols, vals, (space.dim, space.dim))


def apply_form(u, v, beta, quad=None, include_boundary=True):
    """``(u (x) beta, grad v)_h - <(beta.n) u^, v>_h`` for two discrete fields.

    This is the negative of the convective part of the assembled operator;
    for ``u = v`` it equals ``-|v|_beta^2 / 2``.
    """
    space = u.space
    if v.space is not space:
        raise ValueError("both fields must live in the same space")
    quad = quad or QuadConfig.for_degree(space.spec.degree)
    C = convection_matrix(space, beta, quad, include_boundary=include_boundary)
    return -float(v.coefficients @ (C @ u.coefficients))


# -- full system ------------------------------------------------------------

COMPATIBLE = {(RT, P_DISC): 0, (BDM, P_DISC): -1}


def check_pair(vspec, pspec):
    shift = COMPATIBLE.get((vspec.family, pspec.family))
    if shift is None or pspec.degree != vspec.degree + shift:
        raise ValueError(
            f"incompatible space pair {vspec}/{pspec}; use RT_k/P_k or BDM_k/P_(k-1)"
        )


LOADS = ("exact", "interpolated")


def assemble(vspace, pspace, problem, quad=None, load="exact"):
    """Assemble the saddle-point system for ``problem``.

    Parameters
    ----------
    load : {"exact", "interpolated"}
        ``"exact"`` integrates ``(f, v)`` with ``f`` evaluated at quadrature
        points.  ``"interpolated"`` first replaces ``f`` by its RT_k
        interpolant (``k`` the velocity degree), so that ``f = sigma * beta``
        becomes ``sigma * Pi(beta)``, a discretely divergence-free field.

    Raises
    ------
    ValueError
        For an incompatible velocity/pressure pair.
    ProblemSetupError
        If ``beta.n`` does not vanish on the boundary.
    """
    check_pair(vspace.spec, pspace.spec)
    if load not in LOADS:
        raise ValueError(f"load must be one of {LOADS}, got {load!r}")
    if vspace.mesh is not pspace.mesh:
        raise ValueError("velocity and pressure spaces must share a mesh")
    quad = quad or QuadConfig.for_degree(vspace.spec.degree)
    mesh = vspace.mesh
    flux = boundary_normal_flux(mesh, problem.beta, quad.edge_degree)
    if flux > BOUNDARY_FLUX_TOL:
        raise ProblemSetupError(f"beta.n = {flux:.3e} on the boundary; expected 0")

    K = convection_matrix(vspace, problem.beta, quad) + mass_matrix(vspace, problem.sigma, quad)
    B = divergence_matrix(pspace, vspace, quad)
    m = pressure_mean_vector(pspace, quad)
    mcol = sp.csr_matrix(m[:, None])
    A = sp.bmat([
        [K, -B.T, None],
        [B, None, mcol],
        [None, mcol.T, None],
    ], format="csr")
    if load == "interpolated":
        fspace = FunctionSpace(mesh, SpaceSpec(RT, vspace.spec.degree))
        fh = rt_interpolate(fspace, problem.f, quad.volume_degree)
        F = interpolated_load_vector(vspace, fh, quad)
    else:
        F = load_vector(vspace, problem.f, quad)
    rhs = np.concatenate([F, np.zeros(pspace.dim + 1)])
    return SaddleSystem(A, rhs, (vspace.dim, pspace.dim, 1))


def residual_fields(system, x):
    """Residual ``b - A x`` split into velocity, pressure and constraint parts."""
    r = system.rhs - system.matrix @ x
    return system.split(r)
