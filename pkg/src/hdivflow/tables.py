"""Reproduction of the four vortex-flow error tables.

Tables 1 and 2 are convergence studies of BDM1/P0 and RT1/P1dc at
``sigma = 100, n = 1``.  Table 3 varies the vortex index ``n`` and
Table 4 varies ``sigma`` at a fixed mesh, each reporting velocity and
pressure errors of both element pairs.

The tables are produced with ``load="interpolated"`` by default: the
source ``f = sigma * beta`` is replaced by its RT interpolant before
integration.  With ``sigma`` large the data error of a directly
integrated ``f`` is amplified into the pressure, which is visible in
the ``sigma = 1e6`` row.
"""

import csv
import io
from dataclasses import dataclass

from .analysis import ConvergenceTable, convergence_study, solve_problem
from .problems import vortex_problem

TABLE_LOAD = "interpolated"
CONVERGENCE_CELLS = (10, 20, 40, 80)
SWEEP_CELLS = 40
VORTEX_INDICES = (1, 2, 4, 8)
SIGMAS = (1e6, 100.0, 50.0, 25.0, 10.0, 1.0)

SWEEP_FIELDS = ["bdm_vel_l2_rel", "bdm_pres_l2_rel", "rt_vel_l2_rel", "rt_pres_l2_rel"]


def convergence_table(element, cells=CONVERGENCE_CELLS, sigma=100.0, n=1, load=TABLE_LOAD,
                      pattern="union_jack", quad=None, tol=1e-10):
    """Table 1 (``bdm1p0``) or Table 2 (``rt1p1dc``)."""
    return convergence_study(vortex_problem(n, sigma), element, cells, pattern, quad, tol, load)


@dataclass
class SweepRow:
    value: float
    bdm: object
    rt: object

    @property
    def errors(self):
        return (self.bdm.vel_l2_rel, self.bdm.pres_l2_rel, self.rt.vel_l2_rel, self.rt.pres_l2_rel)


@dataclass
class SweepTable:
    """Errors of both element pairs on one mesh while one parameter varies."""

    parameter: str
    cells: int
    rows: list
    label: str = ""

    def column(self, name):
        return [r.errors[SWEEP_FIELDS.index(name)] for r in self.rows]

    def to_csv(self, with_time=True):
        buf = io.StringIO()
        buf.write("# errors relative to the exact-solution L2 norm\n")
        if with_time:
            times = ",".join(f"{r.bdm.elapsed + r.rt.elapsed:.3f}" for r in self.rows)
            buf.write(f"# wall time per row in seconds (local, not comparable): {times}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([self.parameter, "h"] + SWEEP_FIELDS)
        for r in self.rows:
            writer.writerow([_param(r.value), repr(1.0 / self.cells)] + [repr(e) for e in r.errors])
        return buf.getvalue()

    def to_markdown(self, with_time=True):
        head = (f"| {self.parameter} | BDM1/P0 u | BDM1/P0 p | RT1/P1dc u | RT1/P1dc p |")
        sep = "|---|---|---|---|---|"
        if with_time:
            head += " wall time (local, not comparable) |"
            sep += "---|"
        lines = [f"**{self.label}**", "", head, sep]
        for r in self.rows:
            cells = [_param(r.value)] + [f"{e:.2g}" for e in r.errors]
            if with_time:
                cells.append(f"{r.bdm.elapsed + r.rt.elapsed:.2f}s")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def _param(v):
    return f"{v:g}"


def _sweep(parameter, values, make, cells, load, pattern, quad, tol, label):
    rows = []
    for v in values:
        problem = make(v)
        bdm = solve_problem(problem, "bdm1p0", cells, pattern, quad, tol, load).report
        rt = solve_problem(problem, "rt1p1dc", cells, pattern, quad, tol, load).report
        rows.append(SweepRow(v, bdm, rt))
    return SweepTable(parameter, cells, rows, label)


def vortex_index_table(indices=VORTEX_INDICES, cells=SWEEP_CELLS, sigma=100.0, load=TABLE_LOAD,
                       pattern="union_jack", quad=None, tol=1e-10):
    """Table 3: errors at ``h = 1/cells`` for several vortex indices."""
    return _sweep("n", indices, lambda n: vortex_problem(n, sigma), cells, load, pattern, quad, tol,
                  f"varying n, sigma={sigma:g}, h=1/{cells}")


def sigma_table(sigmas=SIGMAS, cells=SWEEP_CELLS, n=1, load=TABLE_LOAD,
                pattern="union_jack", quad=None, tol=1e-10):
    """Table 4: errors at ``h = 1/cells`` for several reaction coefficients."""
    return _sweep("sigma", sigmas, lambda s: vortex_problem(n, s), cells, load, pattern, quad, tol,
                  f"varying sigma, n={n}, h=1/{cells}")


def build_table(which, cells=None, load=TABLE_LOAD, pattern="union_jack", quad=None, tol=1e-10):
    """Table ``which`` in 1..4; ``cells`` overrides the mesh list (1, 2) or size (3, 4)."""
    if which in (1, 2):
        element = "bdm1p0" if which == 1 else "rt1p1dc"
        return convergence_table(element, tuple(cells or CONVERGENCE_CELLS), load=load,
                                 pattern=pattern, quad=quad, tol=tol)
    if which in (3, 4):
        size = cells[-1] if cells else SWEEP_CELLS
        fn = vortex_index_table if which == 3 else sigma_table
        return fn(cells=size, load=load, pattern=pattern, quad=quad, tol=tol)
    raise ValueError(f"table number must be 1-4, got {which!r}")


def render(table, fmt="csv", with_time=True):
    if isinstance(table, ConvergenceTable):
        if fmt == "csv":
            text = table.to_csv()
            if with_time:
                times = ",".join(f"{r.elapsed:.3f}" for r in table.reports)
                head, rest = text.split("\n", 1)
                text = f"{head}\n# wall time per row in seconds (local, not comparable): {times}\n{rest}"
            return text
        return table.to_markdown(with_time)
    return table.to_csv(with_time) if fmt == "csv" else table.to_markdown(with_time)
