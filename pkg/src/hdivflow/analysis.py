"""Error norms, convergence tables and the RT/BDM velocity equivalence check."""

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import QuadConfig, _facet_tables, _trace, assemble
from .mesh import build_unit_square_mesh
from .quadrature import edge_rule, triangle_rule
from .solver import solve
from .spaces import (BDM1, P0, P1, RT0, RT1, DiscreteField, FunctionSpace, edge_points,
                     l2_project, rt_interpolate)

ELEMENTS = {
    "rt0p0": (RT0, P0),
    "rt1p1dc": (RT1, P1),
    "bdm1p0": (BDM1, P0),
}

CSV_FIELDS = ["h", "n_dofs", "vel_l2_rel", "vel_rate", "pres_l2_rel", "pres_rate",
              "jump_seminorm", "proj_pres_error", "div_l2"]


class StudyError(RuntimeError):
    """A solve inside a convergence study failed."""

    def __init__(self, message, h):
        super().__init__(message)
        self.h = h


@dataclass
class ErrorReport:
    """Errors of one discrete solution.

    ``pres_l2_rel`` is relative to ``||p||`` unless the exact pressure
    vanishes, in which case it is absolute and ``pres_relative`` is False.
    ``div_l2`` is absolute; ``div_l2 / uh_l2`` is the relative divergence.
    """

    h: float
    n_dofs: int
    div_l2: float
    uh_l2: float = math.nan
    vel_l2_rel: float = math.nan
    vel_l2: float = math.nan
    sigma_weighted_vel: float = math.nan
    pres_l2_rel: float = math.nan
    pres_relative: bool = True
    jump_seminorm: float = math.nan
    proj_pres_error: float = math.nan
    elapsed: float = math.nan

    @property
    def div_rel(self):
        return self.div_l2 / self.uh_l2 if self.uh_l2 > 0 else self.div_l2


def error_quad(k):
    """Quadrature for error norms: two degrees above the assembly default."""
    return QuadConfig.for_degree(k, extra=2)


def l2_norm(values, wdet):
    """L2 norm of scalar (nc, nq) or vector (nc, nq, 2) quadrature values."""
    sq = values ** 2 if values.ndim == 2 else (values ** 2).sum(-1)
    return float(np.sqrt((wdet * sq).sum()))


def _volume(mesh, quad):
    tq = triangle_rule(quad.volume_degree)
    X = mesh.map_to_physical(tq.xy)
    wdet = 0.5 * tq.weights[None, :] * mesh.dets[:, None]
    return tq, X, wdet


def jump_seminorm(field, beta, edge_degree=9, exact=None):
    """``|v|_beta`` for ``v = exact - field`` (or ``v = field`` without ``exact``).

    Interior facets contribute ``|beta.n| |v_1 - v_2|^2``, boundary facets
    ``|beta.n| |v|^2``.
    """
    space = field.space
    mesh = space.mesh
    q = edge_rule(edge_degree)
    tables = _facet_tables(space, q.points)
    pts = edge_points(mesh, q.points)
    bn = np.abs(np.einsum("eqk,ek->eq", beta(pts[..., 0], pts[..., 1]), mesh.edge_normals()))
    w = q.weights[None, :] * mesh.edge_lengths()[:, None] * bn
    loc = space.local_coefficients(field.coefficients)
    ue = exact(pts[..., 0], pts[..., 1]) if exact is not None else 0.0

    def side(col):
        has = mesh.edge_cells[:, col] >= 0
        c = np.where(has, mesh.edge_cells[:, col], 0)
        le = np.where(has, mesh.edge_local[:, col], 0)
        vals = np.einsum("fb,fbqk->fqk", loc[c], _trace(space, tables, c, le))
        return np.where(has[:, None, None], ue - vals, 0.0)

    v1 = side(0)
    v2 = np.where(mesh.interior[:, None, None], side(1), 0.0)
    return float(np.sqrt((w * ((v1 - v2) ** 2).sum(-1)).sum()))


def error_norms(velocity, pressure, problem, quad=None):
    """Compute an :class:`ErrorReport` for a discrete solution.

    Without an exact solution only ``div_l2`` and ``n_dofs`` are filled in.
    """
    vspace, pspace = velocity.space, pressure.space
    mesh = vspace.mesh
    quad = quad or error_quad(vspace.spec.degree)
    tq, X, wdet = _volume(mesh, quad)
    uh, divh = velocity.cell_values(tq.xy, with_div=True)
    n_dofs = vspace.dim + pspace.dim
    h = 1.0 / round(np.sqrt(mesh.n_cells / 2))
    report = ErrorReport(h=h, n_dofs=n_dofs, div_l2=l2_norm(divh, wdet), uh_l2=l2_norm(uh, wdet))
    if not problem.has_exact:
        return report

    x, y = X[..., 0], X[..., 1]
    ue, pe = problem.exact_u(x, y), problem.exact_p(x, y)
    ph = pressure.cell_values(tq.xy)
    sig = problem.sigma(x, y)
    report.vel_l2 = l2_norm(ue - uh, wdet)
    report.vel_l2_rel = report.vel_l2 / l2_norm(ue, wdet)
    report.sigma_weighted_vel = float(np.sqrt((wdet * sig * ((ue - uh) ** 2).sum(-1)).sum()))
    p_norm = l2_norm(pe, wdet)
    p_err = l2_norm(pe - ph, wdet)
    report.pres_relative = p_norm > 1e-14
    report.pres_l2_rel = p_err / p_norm if report.pres_relative else p_err
    pp = l2_project(pspace, problem.exact_p, quad.volume_degree)
    report.proj_pres_error = l2_norm(pp.cell_values(tq.xy) - ph, wdet)
    report.jump_seminorm = jump_seminorm(velocity, problem.beta, quad.edge_degree, problem.exact_u)
    return report


@dataclass
class Solution:
    velocity: DiscreteField
    pressure: DiscreteField
    multiplier: float
    report: ErrorReport
    solve_stats: dict = field(default_factory=dict)


def solve_problem(problem, element="bdm1p0", cells_per_side=10, pattern="union_jack",
                  quad=None, tol=1e-10, load="exact"):
    """Mesh, assemble, solve and measure one configuration."""
    vspec, pspec = ELEMENTS[element] if isinstance(element, str) else element
    t0 = time.perf_counter()
    mesh = build_unit_square_mesh(cells_per_side, pattern, periodic_x=problem.periodic_x)
    V, Q = FunctionSpace(mesh, vspec), FunctionSpace(mesh, pspec)
    quad = quad or QuadConfig.for_degree(vspec.degree)
    system = assemble(V, Q, problem, quad, load=load)
    result = solve(system, tol)
    u, p, lam = system.split(result.solution)
    elapsed = time.perf_counter() - t0
    velocity, pressure = DiscreteField(V, u), DiscreteField(Q, p)
    report = error_norms(velocity, pressure, problem, quad.elevated(2))
    report.elapsed = elapsed
    stats = dict(result.stats, relative_residual=result.relative_residual)
    return Solution(velocity, pressure, lam, report, stats)


def rate(e_coarse, e_fine, h_coarse, h_fine):
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


@dataclass
class ConvergenceTable:
    reports: list
    label: str = ""

    def rates(self, attr):
        """Consecutive-pair rates of an :class:`ErrorReport` attribute (None for row 0)."""
        out = [None]
        for a, b in zip(self.reports, self.reports[1:]):
            ea, eb = getattr(a, attr), getattr(b, attr)
            out.append(rate(ea, eb, a.h, b.h) if ea > 0 and eb > 0 else None)
        return out

    def column(self, attr):
        return [getattr(r, attr) for r in self.reports]

    def rows(self):
        vr, pr = self.rates("vel_l2_rel"), self.rates("pres_l2_rel")
        for r, a, b in zip(self.reports, vr, pr):
            yield dict(h=r.h, n_dofs=r.n_dofs, vel_l2_rel=r.vel_l2_rel, vel_rate=a,
                       pres_l2_rel=r.pres_l2_rel, pres_rate=b, jump_seminorm=r.jump_seminorm,
                       proj_pres_error=r.proj_pres_error, div_l2=r.div_l2)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# errors relative to the exact-solution L2 norm\n")
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: "" if v is None else (repr(v) if isinstance(v, float) else v)
                             for k, v in row.items()})
        return buf.getvalue()

    def to_markdown(self, with_time=True):
        head = "| h | rel. L2 error u (rate) | rel. L2 error p (rate) |"
        sep = "|---|---|---|"
        if with_time:
            head += " wall time (local, not comparable) |"
            sep += "---|"
        lines = [f"**{self.label}**", "", head, sep] if self.label else [head, sep]
        for row, r in zip(self.rows(), self.reports):
            cells = [f"1/{round(1 / row['h'])}",
                     f"{_g(row['vel_l2_rel'])} ({_rate(row['vel_rate'])})",
                     f"{_g(row['pres_l2_rel'])} ({_rate(row['pres_rate'])})"]
            if with_time:
                cells.append(f"{r.elapsed:.2f}s")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def _g(x):
    return f"{x:.2g}"


def _rate(r):
    return "-" if r is None else f"{r:.1f}"


def convergence_study(problem, element, cells=(10, 20, 40, 80), pattern="union_jack",
                      quad=None, tol=1e-10, load="exact"):
    """One solve per mesh; ``cells`` lists ``N`` with ``h = 1/N`` decreasing."""
    cells = list(cells)
    if any(b <= a for a, b in zip(cells, cells[1:])):
        raise ValueError("mesh sizes must be strictly decreasing (N strictly increasing)")
    reports = []
    for n in cells:
        try:
            sol = solve_problem(problem, element, n, pattern, quad, tol, load)
        except Exception as exc:
            raise StudyError(f"solve failed at h=1/{n}: {exc}", 1.0 / n) from exc
        reports.append(sol.report)
    name = element if isinstance(element, str) else "/".join(map(str, element))
    return ConvergenceTable(reports, f"{name}, {problem.label}")


def cells_from_h(h_list):
    return [int(round(1.0 / h)) for h in h_list]


def check_rt_bdm_equivalence(problem, cells_per_side, k=1, pattern="union_jack",
                             quad=None, tol=1e-12, load="exact"):
    """Max pointwise |u_h(RT_k/P_k) - u_h(BDM_k/P_{k-1})| over cell quadrature points.

    Returns ``(discrepancy, max |u_h|)``.
    """
    if k != 1:
        raise ValueError("only k = 1 is supported")
    quad = quad or QuadConfig.for_degree(k)
    rt = solve_problem(problem, "rt1p1dc", cells_per_side, pattern, quad, tol, load)
    bdm = solve_problem(problem, "bdm1p0", cells_per_side, pattern, quad, tol, load)
    xy = triangle_rule(quad.volume_degree).xy
    a = rt.velocity.cell_values(xy)
    b = bdm.velocity.cell_values(xy)
    return float(np.abs(a - b).max()), float(np.abs(a).max())


def interpolation_error(field, cells, k, quad_degree=12, pattern="union_jack"):
    """``||v - Pi v||`` for the RT_k interpolant on a ``cells x cells`` mesh."""
    mesh = build_unit_square_mesh(cells, pattern)
    space = FunctionSpace(mesh, RT1 if k == 1 else RT0)
    pi = rt_interpolate(space, field, quad_degree)
    tq, X, wdet = _volume(mesh, QuadConfig(quad_degree, quad_degree - 1))
    return l2_norm(field(X[..., 0], X[..., 1]) - pi.cell_values(tq.xy), wdet)


def report_dict(report):
    d = asdict(report)
    d["div_rel"] = report.div_rel
    return d
