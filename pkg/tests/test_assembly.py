import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from hdivflow.analysis import jump_seminorm
from hdivflow.assembly import (ProblemSetupError, QuadConfig, _scatter, apply_form, assemble,
                               check_pair, convection_matrix, divergence_matrix, mass_matrix,
                               pressure_mean_vector)
from hdivflow.checks import IDENTITY_QUAD_EXTRA, convection_terms, identity_defect
from hdivflow.mesh import _from_cells, build_unit_square_mesh
from hdivflow.problems import ProblemSpec, constant, vortex_problem, zero_flow_problem
from hdivflow.spaces import (BDM1, P0, P1, RT0, RT1, DiscreteField, FunctionSpace, l2_project,
                             rt_interpolate)

Q1 = QuadConfig.for_degree(1)


def spaces(n, vspec, pspec, pattern="union_jack"):
    mesh = build_unit_square_mesh(n, pattern)
    return FunctionSpace(mesh, vspec), FunctionSpace(mesh, pspec)


def uniform_beta(x, y):
    return np.stack([np.ones_like(x), np.zeros_like(x)], axis=-1)


# -- two-cell hand computation -------------------------------------------------
# N=1 "right" mesh, beta = (1, 0), RT0.  The one DOF lives on the diagonal;
# its basis function is (x, y - 1) on the upper cell and (1 - x, -y) on the
# lower one.  Along the diagonal (t, t) the jump is (2t - 1)(1, 1) and
# beta.n = 1/sqrt(2) with ds = sqrt(2) dt, so the facet term is
# int_0^1 (2t - 1)^2 dt = 1/3.  The volume term integrates x over the upper
# cell and x - 1 over the lower, which cancel.  The outflow side x = 1
# adds int_0^1 y^2 dy = 1/3; the inflow side x = 0 adds nothing.

@pytest.fixture
def two_cell():
    V = FunctionSpace(build_unit_square_mesh(1, "right"), RT0)
    assert V.dim == 1
    return V


def test_two_cell_facet_value(two_cell):
    C = convection_matrix(two_cell, uniform_beta, QuadConfig.for_degree(0))
    assert C[0, 0] == pytest.approx(1 / 3, abs=1e-14)


def test_two_cell_form_and_seminorm(two_cell):
    v = DiscreteField(two_cell, np.ones(1))
    assert apply_form(v, v, uniform_beta) == pytest.approx(-2 / 3, abs=1e-14)
    assert jump_seminorm(v, uniform_beta) ** 2 == pytest.approx(4 / 3, abs=1e-14)


def test_two_cell_rejected_by_assemble(two_cell):
    problem = ProblemSpec(uniform_beta, constant(1.0), 1.0, uniform_beta)
    Q = FunctionSpace(two_cell.mesh, P0)
    with pytest.raises(ProblemSetupError):
        assemble(two_cell, Q, problem)


# -- structure -------------------------------------------------------------------

def test_zero_beta_reduces_to_mass_matrix():
    V, Q = spaces(3, RT1, P1)
    problem = zero_flow_problem(1.0)
    assert abs(convection_matrix(V, problem.beta, Q1, include_boundary=True)).max() == 0
    S = assemble(V, Q, problem, Q1)
    K = S.matrix[:V.dim, :V.dim]
    assert abs(K - mass_matrix(V, problem.sigma, Q1)).max() == 0


@pytest.mark.parametrize("vspec,pspec", [(RT0, P0), (RT1, P1), (BDM1, P0)])
def test_block_layout(vspec, pspec):
    V, Q = spaces(4, vspec, pspec)
    S = assemble(V, Q, vortex_problem(1, 10.0))
    nu, npr, nl = S.block_sizes
    assert S.shape == (nu + npr + 1,) * 2 and nl == 1
    A = S.matrix
    B = divergence_matrix(Q, V, QuadConfig.for_degree(vspec.degree))
    assert abs(A[nu:nu + npr, :nu] - B).max() == 0
    assert abs(A[:nu, nu:nu + npr] + B.T).max() == 0
    m = pressure_mean_vector(Q, QuadConfig.for_degree(vspec.degree))
    np.testing.assert_array_equal(A[nu:nu + npr, -1].toarray().ravel(), m)
    np.testing.assert_array_equal(A[-1, nu:nu + npr].toarray().ravel(), m)
    assert A[-1, -1] == 0 and abs(A[-1, :nu]).max() == 0


def test_constraint_column_is_mass_times_constant():
    V, Q = spaces(5, RT1, P1)
    S = assemble(V, Q, vortex_problem(2))
    M = mass_matrix(Q, None, QuadConfig.for_degree(1))
    np.testing.assert_allclose(S.matrix[V.dim:-1, -1].toarray().ravel(), M @ np.ones(Q.dim), atol=1e-15)
    assert pressure_mean_vector(Q).sum() == pytest.approx(1.0, abs=1e-14)
    # with u.n = 0 the divergence of every velocity integrates to zero
    assert np.abs(divergence_matrix(Q, V, QuadConfig.for_degree(1)).T @ M @ np.ones(Q.dim)).max() < 1e-13


@pytest.mark.parametrize("vspec,pspec", [(RT0, P1), (RT1, P0), (BDM1, P1)])
def test_incompatible_pairs(vspec, pspec):
    with pytest.raises(ValueError):
        check_pair(vspec, pspec)
    V, Q = spaces(2, vspec, pspec)
    with pytest.raises(ValueError):
        assemble(V, Q, vortex_problem(1))


def test_spaces_on_different_meshes():
    V, _ = spaces(2, RT0, P0)
    _, Q = spaces(2, RT0, P0)
    with pytest.raises(ValueError):
        assemble(V, Q, vortex_problem(1))


def test_bad_load():
    V, Q = spaces(2, RT0, P0)
    with pytest.raises(ValueError):
        assemble(V, Q, vortex_problem(1), load="lumped")


def test_interpolated_load_matches_exact_for_space_data():
    # shear (y, 0) on a periodic mesh lies in RT1, so both loads agree
    from hdivflow.problems import SHEAR_PROFILES, shear_problem
    mesh = build_unit_square_mesh(4, periodic_x=True)
    V, Q = FunctionSpace(mesh, RT1), FunctionSpace(mesh, P1)
    problem = shear_problem(SHEAR_PROFILES["linear"], 3.0)
    a = assemble(V, Q, problem, load="exact").rhs
    b = assemble(V, Q, problem, load="interpolated").rhs
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_boundary_facets_vanish_for_vortex():
    V, _ = spaces(6, BDM1, P0)
    beta = vortex_problem(3).beta
    d = convection_matrix(V, beta, Q1, include_boundary=True) - convection_matrix(V, beta, Q1)
    assert abs(d).max() <= 1e-12


# -- upwinding ---------------------------------------------------------------

def test_upwind_sign_change_along_edge():
    """beta.n changing sign inside an edge is integrated pointwise."""
    V, _ = spaces(2, RT1, P1, "right")

    def beta(x, y):
        return np.stack([y - 0.5, np.zeros_like(x)], axis=-1)

    v = DiscreteField(V, np.random.default_rng(2).standard_normal(V.dim))
    q = QuadConfig.for_degree(1, IDENTITY_QUAD_EXTRA)
    # beta is polynomial, so the identity holds to roundoff once quadrature is exact
    assert identity_defect(v, beta, q) < 1e-12


def test_upwind_matrix_differs_from_central():
    V, _ = spaces(3, RT1, P1)
    beta = vortex_problem(1).beta
    C = convection_matrix(V, beta, Q1)
    # the upwind part is not skew: its symmetric part is -1/2 of the jump form
    assert abs(C - (-C.T)).max() > 1e-3


# -- identity of the convection form --------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([RT1, BDM1]), st.integers(1, 3))
def test_convection_identity(seed, spec, n):
    mesh = build_unit_square_mesh(8)
    V = FunctionSpace(mesh, spec)
    v = DiscreteField(V, np.random.default_rng(seed).standard_normal(V.dim))
    beta = vortex_problem(n).beta
    # faster vortices need more quadrature for the cancellation to show
    q = QuadConfig.for_degree(spec.degree, IDENTITY_QUAD_EXTRA if n == 1 else 8)
    assert identity_defect(v, beta, q) <= 1e-10


def test_convection_identity_terms_are_nontrivial():
    V = FunctionSpace(build_unit_square_mesh(8), RT1)
    v = DiscreteField(V, np.random.default_rng(0).standard_normal(V.dim))
    vol, facet, half = convection_terms(v, vortex_problem(1).beta, QuadConfig.for_degree(1, 4))
    assert min(abs(vol), abs(facet), abs(half)) > 1.0


def test_apply_form_zero():
    V = FunctionSpace(build_unit_square_mesh(3), BDM1)
    z = DiscreteField.zeros(V)
    w = DiscreteField(V, np.ones(V.dim))
    beta = vortex_problem(1).beta
    assert apply_form(z, z, beta) == 0
    assert apply_form(z, w, beta) == 0


def test_apply_form_rejects_mixed_spaces():
    mesh = build_unit_square_mesh(2)
    a = DiscreteField.zeros(FunctionSpace(mesh, RT1))
    b = DiscreteField.zeros(FunctionSpace(mesh, RT1))
    with pytest.raises(ValueError):
        apply_form(a, b, vortex_problem(1).beta)


# -- determinism ----------------------------------------------------------------

def test_scatter_order_independent():
    rng = np.random.default_rng(4)
    rows, cols = rng.integers(0, 20, 500), rng.integers(0, 20, 500)
    vals = rng.standard_normal(500)
    A = _scatter(rows, cols, vals, (20, 20))
    for perm in (np.arange(500)[::-1], rng.permutation(500)):
        B = _scatter(rows[perm], cols[perm], vals[perm], (20, 20))
        assert np.array_equal(A.indptr, B.indptr) and np.array_equal(A.indices, B.indices)
        assert np.array_equal(A.data, B.data)


def test_reversed_cell_order():
    mesh = build_unit_square_mesh(5)
    rev = _from_cells(mesh.vertices, mesh.cells[::-1].copy(), mesh.vertex_ids, mesh.h_max, False)
    problem = vortex_problem(1, 100.0)
    S1 = assemble(FunctionSpace(mesh, BDM1), FunctionSpace(mesh, P0), problem)
    S2 = assemble(FunctionSpace(rev, BDM1), FunctionSpace(rev, P0), problem)
    nu = S1.block_sizes[0]
    # BDM1 DOFs live on edges, numbered identically; P0 DOFs follow the cells
    perm = np.r_[np.arange(nu), nu + np.arange(mesh.n_cells)[::-1], nu + mesh.n_cells]
    A2 = S2.matrix[perm][:, perm]
    assert abs(S1.matrix - A2).max() <= 1e-15
    np.testing.assert_allclose(S1.rhs, S2.rhs[perm], atol=1e-15)


def test_assembly_repeatable():
    V, Q = spaces(4, RT1, P1)
    a = assemble(V, Q, vortex_problem(2)).matrix
    b = assemble(V, Q, vortex_problem(2)).matrix
    assert np.array_equal(a.data, b.data) and np.array_equal(a.indices, b.indices)


# -- consistency ----------------------------------------------------------------

def test_consistency_residual_vanishes():
    problem = vortex_problem(1, 100.0)
    res = []
    for n in (4, 8, 16):
        V, Q = spaces(n, RT1, P1)
        S = assemble(V, Q, problem)
        u = rt_interpolate(V, problem.exact_u, 12).coefficients
        p = l2_project(Q, problem.exact_p, 12).coefficients
        r = S.rhs - S.matrix @ np.r_[u, p, 0.0]
        res.append(np.abs(r[:V.dim]).max())
        # pressure rows vanish exactly: div Pi u = P_1 div u = 0
        assert np.abs(r[V.dim:]).max() < 1e-12
    rates = np.log2(np.array(res[:-1]) / res[1:])
    assert np.all(rates > 1.5)


def test_matrix_dump(tmp_path):
    V, Q = spaces(1, RT0, P0, "right")
    S = assemble(V, Q, zero_flow_problem())
    path = tmp_path / "A.txt"
    S.dump(path)
    lines = path.read_text().splitlines()
    n, m, nnz = map(int, lines[0].lstrip("% ").split())
    assert (n, m) == S.shape and nnz == len(lines) - 1
    A = sp.coo_matrix(
        ([float(l.split()[2]) for l in lines[1:]],
         ([int(l.split()[0]) for l in lines[1:]], [int(l.split()[1]) for l in lines[1:]])),
        shape=(n, m))
    assert abs(A - S.matrix).max() == 0


def test_split():
    V, Q = spaces(2, RT0, P0)
    S = assemble(V, Q, zero_flow_problem())
    x = np.arange(S.shape[0], dtype=float)
    u, p, lam = S.split(x)
    assert len(u) == V.dim and len(p) == Q.dim and lam == S.shape[0] - 1
