"""Seeded property checks of the discretisation.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs the
whole suite.  Results depend only on the seed, never on timing, so two
runs with the same seed print identical reports.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .analysis import check_rt_bdm_equivalence, jump_seminorm, l2_norm, solve_problem
from .assembly import (QuadConfig, _cell_triplets, _facet_tables, _scatter, _trace,
                       apply_form, assemble, convection_matrix, divergence_matrix, mass_matrix)
from .mesh import LOCAL_EDGES, build_unit_square_mesh
from .problems import vortex_problem, zero_flow_problem
from .quadrature import edge_rule, triangle_rule
from .solver import relative_residual
from .spaces import (BDM1, P0, P1, REF_VERTICES, RT0, RT1, DiscreteField, FunctionSpace,
                     _powers, _shifted_legendre, get_reference_basis, l2_project)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def check_mesh(rng):
    worst = []
    for pattern in ("union_jack", "right", "left"):
        for n in sorted(rng.choice(np.arange(1, 9), 3, replace=False)):
            m = build_unit_square_mesh(int(n), pattern)
            euler = m.n_vertices - m.n_edges + m.n_cells
            area = abs(m.areas.sum() - 1.0)
            ie = np.flatnonzero(m.interior)
            c, le = m.edge_cells[ie], m.edge_local[ie]
            opposite = np.all(m.cell_edge_signs[c[:, 0], le[:, 0]] == -m.cell_edge_signs[c[:, 1], le[:, 1]])
            ok = euler == 1 and area < 1e-12 and opposite and np.all(m.areas > 0)
            worst.append((ok, f"{pattern} N={n}"))
    bad = [w for ok, w in worst if not ok]
    return CheckResult("mesh invariants", not bad, "all meshes valid" if not bad else f"failed: {bad}")


def check_unisolvence(rng):
    err = 0.0
    for spec in (RT0, RT1, BDM1, P0, P1):
        basis = get_reference_basis(spec)
        D = basis.dof_functionals(np.asarray(basis.coeffs))
        err = max(err, np.abs(D - np.eye(len(D))).max())
    return CheckResult("unisolvence", err < 1e-12, f"max |D - I| = {err:.2e}")


def normal_jumps(field, edge_degree=6):
    """Largest interior jump of ``v.n`` and largest boundary ``|v.n|``."""
    space = field.space
    mesh = space.mesh
    q = edge_rule(edge_degree)
    tables = _facet_tables(space, q.points)
    loc = space.local_coefficients(field.coefficients)
    n = mesh.edge_normals()

    def trace(col, edges):
        c, le = mesh.edge_cells[edges, col], mesh.edge_local[edges, col]
        vals = np.einsum("fb,fbqk->fqk", loc[c], _trace(space, tables, c, le))
        return np.einsum("fqk,fk->fq", vals, n[edges])

    ie, be = np.flatnonzero(mesh.interior), np.flatnonzero(mesh.boundary)
    jump = np.abs(trace(0, ie) - trace(1, ie)).max() if len(ie) else 0.0
    bnd = np.abs(trace(0, be)).max() if len(be) else 0.0
    return float(jump), float(bnd)


def check_normal_continuity(rng):
    mesh = build_unit_square_mesh(4)
    worst = 0.0
    for spec in (RT0, RT1, BDM1):
        V = FunctionSpace(mesh, spec)
        for _ in range(5):
            j, b = normal_jumps(DiscreteField(V, rng.standard_normal(V.dim)))
            worst = max(worst, j, b)
    return CheckResult("normal continuity", worst <= 1e-12, f"max |[v.n]|, |v.n| on boundary = {worst:.2e}")


def divergence_free_field(space, pspace, rng, quad=None):
    """A random discretely divergence-free field of ``space``."""
    quad = quad or QuadConfig.for_degree(space.spec.degree)
    B = divergence_matrix(pspace, space, quad).toarray()
    Z = sla.null_space(B)
    return DiscreteField(space, Z @ rng.standard_normal(Z.shape[1]))


def polynomial_fit_residual(field, degree, quad_degree=6):
    """Max residual of a per-cell degree-``degree`` fit through the field values."""
    tq = triangle_rule(quad_degree)
    X = field.space.mesh.map_to_physical(tq.xy)
    vals = field.cell_values(tq.xy)
    worst = 0.0
    for c in range(X.shape[0]):
        x, y = X[c].T
        A = np.column_stack([x ** a * y ** b for a in range(degree + 1) for b in range(degree + 1 - a)])
        coef, *_ = np.linalg.lstsq(A, vals[c], rcond=None)
        worst = max(worst, np.abs(A @ coef - vals[c]).max())
    return worst


def check_div_free_is_bdm(rng):
    mesh = build_unit_square_mesh(3)
    V, Q = FunctionSpace(mesh, RT1), FunctionSpace(mesh, P1)
    worst = 0.0
    for _ in range(3):
        v = divergence_free_field(V, Q, rng)
        v.coefficients /= np.abs(v.coefficients).max()
        worst = max(worst, polynomial_fit_residual(v, 1))
    return CheckResult("div-free RT1 fields are piecewise P1", worst <= 1e-10, f"fit residual = {worst:.2e}")


def convection_terms(v, beta, quad):
    """``((v (x) beta, grad v)_h, <beta.n v^, v>_h, |v|_beta^2 / 2)``."""
    space = v.space
    mesh = space.mesh
    tq = triangle_rule(quad.volume_degree)
    X = mesh.map_to_physical(tq.xy)
    wdet = 0.5 * tq.weights[None, :] * mesh.dets[:, None]
    vals = v.cell_values(tq.xy)
    tab = space.tabulate(tq.xy)
    loc = space.local_coefficients(v.coefficients)
    grad = np.einsum("cb,cbqij->cqij", loc, tab.grad)
    b = beta(X[..., 0], X[..., 1])
    volume = float(np.einsum("cq,cqi,cqj,cqij->", wdet, vals, b, grad))
    form = apply_form(v, v, beta, quad, include_boundary=True)
    half_jump = 0.5 * jump_seminorm(v, beta, quad.edge_degree) ** 2
    return volume, volume - form, half_jump


def identity_defect(v, beta, quad):
    """Relative defect of ``(v(x)beta, grad v)_h - <beta.n v^, v>_h + |v|_beta^2/2 = 0``."""
    vol, facet, half = convection_terms(v, beta, quad)
    scale = abs(vol) + abs(facet) + abs(half)
    return abs(vol - facet + half) / scale


# beta is not polynomial, so the volume and facet integrals only cancel up to
# quadrature error; four extra degrees take the defect below 1e-12
IDENTITY_QUAD_EXTRA = 4


def check_convection_identity(rng, samples=100, cells=8):
    mesh = build_unit_square_mesh(cells)
    beta = vortex_problem(1).beta
    worst = 0.0
    for spec in (RT1, BDM1):
        V = FunctionSpace(mesh, spec)
        quad = QuadConfig.for_degree(spec.degree, IDENTITY_QUAD_EXTRA)
        for _ in range(samples):
            worst = max(worst, identity_defect(DiscreteField(V, rng.standard_normal(V.dim)), beta, quad))
    return CheckResult("convection identity", worst <= 1e-10,
                       f"max relative defect over {2 * samples} fields = {worst:.2e}")


def sin_field(x, y):
    return np.stack([np.sin(y), np.sin(x)], axis=-1)


def commuting_defect(cells, k, field=sin_field, div_field=None, quad_degree=10):
    """``||div Pi v - P_k div v||`` on a union-jack mesh.

    ``div_field`` defaults to zero, the divergence of ``(sin y, sin x)``.
    """
    mesh = build_unit_square_mesh(cells)
    V = FunctionSpace(mesh, RT1 if k == 1 else RT0)
    Q = FunctionSpace(mesh, P1 if k == 1 else P0)
    div_field = div_field or (lambda x, y: np.zeros_like(x))
    tq = triangle_rule(quad_degree)
    wdet = 0.5 * tq.weights[None, :] * mesh.dets[:, None]
    pdiv = l2_project(Q, div_field, quad_degree).cell_values(tq.xy)
    return l2_norm(interpolant_divergence(V, field, tq, quad_degree) - pdiv, wdet)


def interpolant_divergence(space, field, tq, quad_degree):
    """``div Pi v`` at the points of ``tq`` on every cell, shape (nc, nq).

    ``v.n`` need not vanish on the boundary: on each cell ``div Pi v`` only
    depends on the local moments of ``v``, so they are computed cell by cell
    with every edge included.
    """
    mesh = space.mesh
    k = space.spec.degree
    q = edge_rule(quad_degree)
    Jinv = np.linalg.inv(mesh.jacobians)

    def pulled_back(ref_pts):
        X = mesh.map_to_physical(ref_pts)
        v = field(X[..., 0], X[..., 1])
        return np.einsum("cij,cqj->cqi", Jinv, v) * mesh.dets[:, None, None]

    moments = []
    for le in range(3):
        a, b = REF_VERTICES[LOCAL_EDGES[le]]
        t = b - a
        flux = pulled_back(a + q.points[:, None] * t) @ np.array([t[1], -t[0]])
        for m in range(k + 1):
            moments.append(flux @ (q.weights * _shifted_legendre(m, q.points)))
    if k:
        vref = pulled_back(tq.xy)
        pw = _powers(tq.xy, k - 1)
        for a in range(k):
            for b in range(k - a):
                w = 0.5 * tq.weights * pw[:, a, b]
                moments += [vref[..., 0] @ w, vref[..., 1] @ w]
    ref_div = space.basis.tabulate(tq.xy).div
    return np.column_stack(moments) @ ref_div / mesh.dets[:, None]


def check_commuting(rng):
    worst = max(commuting_defect(4, 1), commuting_defect(4, 0))
    return CheckResult("commuting interpolant", worst <= 1e-10, f"||div Pi v - P_k div v|| = {worst:.2e}")


def check_solve_invariants(rng):
    problem = vortex_problem(1, 100.0)
    mesh = build_unit_square_mesh(8)
    V, Q = FunctionSpace(mesh, BDM1), FunctionSpace(mesh, P0)
    system = assemble(V, Q, problem)
    sol = solve_problem(problem, "bdm1p0", 8)
    x = np.concatenate([sol.velocity.coefficients, sol.pressure.coefficients, [sol.multiplier]])
    res = relative_residual(system.matrix, x, system.rhs)
    # independent residual: dense product, no sparse code path
    A = system.matrix.toarray()
    res_dense = float(np.linalg.norm(system.rhs - A @ x) / np.linalg.norm(system.rhs))
    div_rel = sol.report.div_rel
    lam = abs(sol.multiplier) / np.linalg.norm(x)
    ok = res <= 1e-10 and abs(res - res_dense) <= 1e-13 and div_rel <= 1e-9 and lam <= 1e-8
    return CheckResult("solve invariants", ok,
                       f"residual = {res:.1e}, dense residual = {res_dense:.1e}, "
                       f"div/|u_h| = {div_rel:.1e}, |lam|/|x| = {lam:.1e}")


def check_equivalence(rng):
    d, scale = check_rt_bdm_equivalence(vortex_problem(1, 100.0), 8)
    d0, _ = check_rt_bdm_equivalence(zero_flow_problem(1.0), 4)
    ok = d <= 1e-8 * scale and d0 <= 1e-10
    return CheckResult("RT/BDM velocity equivalence", ok,
                       f"vortex {d / scale:.1e} relative, zero flow {d0:.1e}")


def check_assembly_order(rng):
    mesh = build_unit_square_mesh(6)
    V = FunctionSpace(mesh, RT1)
    quad = QuadConfig.for_degree(1)
    tq = triangle_rule(quad.volume_degree)
    tab = V.tabulate(tq.xy, derivatives=False)
    wdet = 0.5 * tq.weights[None, :] * mesh.dets[:, None]
    local = np.einsum("cq,ciqk,cjqk->cij", wdet, tab.values, tab.values)
    rows, cols, vals = (np.ravel(a) for a in _cell_triplets(V, V, local))
    A = _scatter(rows, cols, vals, (V.dim, V.dim))
    perm = rng.permutation(len(rows))
    B = _scatter(rows[::-1], cols[::-1], vals[::-1], (V.dim, V.dim))
    C = _scatter(rows[perm], cols[perm], vals[perm], (V.dim, V.dim))
    same = all((abs(A - M)).max() == 0 for M in (B, C))
    same = same and abs(A - mass_matrix(V, None, quad)).max() == 0
    return CheckResult("assembly order independence", same, "bit-identical" if same else "matrices differ")


def check_boundary_facets(rng):
    mesh = build_unit_square_mesh(6)
    V = FunctionSpace(mesh, BDM1)
    beta = vortex_problem(2).beta
    quad = QuadConfig.for_degree(1)
    d = abs(convection_matrix(V, beta, quad, True) - convection_matrix(V, beta, quad)).max()
    return CheckResult("boundary facet term vanishes", d <= 1e-12, f"max entry = {d:.1e}")


CHECKS = (
    check_mesh,
    check_unisolvence,
    check_normal_continuity,
    check_div_free_is_bdm,
    check_convection_identity,
    check_commuting,
    check_solve_invariants,
    check_equivalence,
    check_assembly_order,
    check_boundary_facets,
)


def run_checks(seed=0):
    """Run every check with its own RNG stream derived from ``seed``."""
    streams = np.random.SeedSequence(seed).spawn(len(CHECKS))
    return [check(np.random.default_rng(s)) for check, s in zip(CHECKS, streams)]
