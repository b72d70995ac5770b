"""Command-line front end.

Sub-commands::

    hdivflow solve        one solve, prints an error report
    hdivflow convergence  a convergence study (CSV or Markdown)
    hdivflow tables       the four vortex error tables, one file each
    hdivflow check        the seeded property-check suite

Every flag may also come from a ``--config`` file of ``key = value`` lines
(keys are flag names without dashes, ``command`` selects the sub-command);
flags given on the command line override the file.

Exit codes: 0 success, 1 a property check failed, 2 bad arguments or
configuration, 3 solver failure.
"""

import argparse
import os
import sys
import time
from dataclasses import dataclass, fields

from .analysis import ELEMENTS, StudyError, cells_from_h, convergence_study, report_dict, solve_problem
from .assembly import LOADS, ProblemSetupError, QuadConfig, assemble
from .checks import run_checks
from .mesh import build_unit_square_mesh
from .problems import SHEAR_PROFILES, make_problem
from .solver import ConvergenceError, SingularSystemError
from .spaces import FunctionSpace
from .tables import TABLE_LOAD, build_table, render

COMMANDS = ("solve", "convergence", "tables", "check")
PATTERNS = ("union_jack", "right", "left")
FORMATS = ("text", "csv", "markdown")

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    problem: str = "vortex"
    element: str = "bdm1p0"
    n: int = 1
    sigma: float = None
    profile: str = "sin"
    N: tuple = None
    pattern: str = "union_jack"
    quad_degree: tuple = None
    tol: float = 1e-10
    load: str = None
    out: str = None
    format: str = None
    seed: int = 0
    which: str = "all"
    timing: bool = True
    dump_mesh: str = None
    dump_matrix: str = None

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @property
    def quad(self):
        if self.quad_degree is None:
            return None
        vol, edge = self.quad_degree
        return QuadConfig(vol, edge)


# -- argument types ---------------------------------------------------------

def positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def int_list(text):
    return tuple(positive_int(t) for t in text.split(",") if t.strip())


def float_list(text):
    return tuple(positive_float(t) for t in text.split(",") if t.strip())


def quad_degrees(text):
    parts = int_list(text)
    if len(parts) == 1:
        return (parts[0], parts[0] - 1)
    if len(parts) == 2:
        return parts
    raise argparse.ArgumentTypeError("expected VOLUME or VOLUME,EDGE")


def on_off(text):
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of key = value lines; flags override it")
    common.add_argument("--problem", choices=("vortex", "shear"), default="vortex")
    common.add_argument("--element", choices=sorted(ELEMENTS), default="bdm1p0",
                        help="velocity/pressure pair")
    common.add_argument("--n", type=positive_int, default=1, help="vortex index")
    common.add_argument("--sigma", type=positive_float, help="reaction coefficient (vortex default 100)")
    common.add_argument("--profile", choices=sorted(SHEAR_PROFILES), default="sin",
                        help="shear profile")
    mesh = common.add_mutually_exclusive_group()
    mesh.add_argument("--N", type=int_list, help="cells per side, comma separated")
    mesh.add_argument("--h-list", type=float_list, help="mesh sizes 1/N, comma separated")
    common.add_argument("--pattern", choices=PATTERNS, default="union_jack")
    common.add_argument("--quad-degree", type=quad_degrees,
                        help="quadrature exactness VOLUME[,EDGE] (default 2k+6,2k+5)")
    common.add_argument("--tol", type=positive_float, default=1e-10, help="solver residual tolerance")
    common.add_argument("--load", choices=LOADS,
                        help=f"source treatment (default exact; {TABLE_LOAD} for tables)")
    common.add_argument("--out", help="output file (solve, convergence, check) or directory (tables)")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--seed", type=int, default=0, help="seed of the property checks")
    common.add_argument("--which", choices=("1", "2", "3", "4", "all"), default="all",
                        help="table to reproduce")
    common.add_argument("--timing", type=on_off, default=True,
                        help="include local wall times in table output (on/off)")
    common.add_argument("--dump-mesh", help="write the mesh to this file (solve)")
    common.add_argument("--dump-matrix", help="write the system matrix to this file (solve)")
    common.add_argument("--dump-config", metavar="PATH",
                        help="write the resolved configuration ('-' for stdout) and exit")

    parser = argparse.ArgumentParser(prog="hdivflow", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "single solve; prints the error report",
        "convergence": "convergence study over a list of meshes",
        "tables": "reproduce the four vortex error tables",
        "check": "run the seeded property-check suite",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
    return values


def expand_config(argv):
    """Splice config-file values in front of the command-line flags."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    values = read_config(known.config)
    command = values.pop("command", None)
    rest = list(argv)
    if rest and rest[0] in COMMANDS:
        command = rest.pop(0)
    if command is None:
        raise ConfigError("no command given on the command line or in the config file")
    valid = {f.name for f in fields(RunConfig)} - {"command"}
    tokens = []
    for key, value in values.items():
        if key not in valid:
            raise ConfigError(f"unknown config key {key!r}")
        tokens += ["--" + key.replace("_", "-"), value]
    return [command] + tokens + rest


def parse_config(argv):
    """Parse ``argv`` (and any config file) into a :class:`RunConfig`."""
    parser = build_parser()
    try:
        argv = expand_config(argv)
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))
    ns = parser.parse_args(argv)
    cells = ns.N
    if ns.h_list is not None:
        cells = tuple(cells_from_h(ns.h_list))
        bad = [h for h, c in zip(ns.h_list, cells) if abs(h * c - 1) > 1e-9]
        if bad:
            parser.error(f"mesh sizes must be reciprocals of integers: {bad}")
    cfg = RunConfig(**{f.name: getattr(ns, f.name) for f in fields(RunConfig) if f.name != "N"}, N=cells)
    if cfg.problem == "shear" and cfg.command == "tables":
        parser.error("tables are defined for the vortex problem only")
    return cfg, ns.dump_config


def default_format(cfg):
    if cfg.format:
        return cfg.format
    return {"solve": "text", "check": "text"}.get(cfg.command, "csv")


# -- commands ---------------------------------------------------------------

def _problem(cfg):
    return make_problem(cfg.problem, cfg.n, cfg.sigma, cfg.profile)


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def report_text(report, fmt):
    d = report_dict(report)
    d.pop("elapsed")
    if fmt == "csv":
        keys = list(d)
        return ",".join(keys) + "\n" + ",".join(repr(d[k]) for k in keys) + "\n"
    if fmt == "markdown":
        rows = ["| quantity | value |", "|---|---|"]
        rows += [f"| {k} | {v!r} |" for k, v in d.items()]
        return "\n".join(rows) + "\n"
    return "".join(f"{k} = {v!r}\n" for k, v in d.items())


def cmd_solve(cfg):
    problem = _problem(cfg)
    cells = cfg.N[-1] if cfg.N else 10
    load = cfg.load or "exact"
    sol = solve_problem(problem, cfg.element, cells, cfg.pattern, cfg.quad, cfg.tol, load)
    if cfg.dump_mesh or cfg.dump_matrix:
        mesh = build_unit_square_mesh(cells, cfg.pattern, periodic_x=problem.periodic_x)
        if cfg.dump_mesh:
            mesh.dump(cfg.dump_mesh)
        if cfg.dump_matrix:
            vspec, pspec = ELEMENTS[cfg.element]
            assemble(FunctionSpace(mesh, vspec), FunctionSpace(mesh, pspec), problem,
                     cfg.quad, load=load).dump(cfg.dump_matrix)
    header = f"# {cfg.element}, {problem.label}, h=1/{cells}, load={load}\n"
    fmt = default_format(cfg)
    body = report_text(sol.report, fmt)
    _write(body if fmt == "csv" else header + body, cfg.out)
    print(f"wall time {sol.report.elapsed:.3f}s (local, not comparable)", file=sys.stderr)
    return EXIT_OK


def cmd_convergence(cfg):
    cells = cfg.N or (10, 20, 40, 80)
    if any(b <= a for a, b in zip(cells, cells[1:])):
        raise ConfigError("mesh list must be strictly refining (N increasing, h decreasing)")
    table = convergence_study(_problem(cfg), cfg.element, cells, cfg.pattern, cfg.quad, cfg.tol,
                              cfg.load or "exact")
    fmt = default_format(cfg)
    _write(table.to_markdown(with_time=False) if fmt == "markdown" else table.to_csv(), cfg.out)
    return EXIT_OK


def cmd_tables(cfg):
    fmt = default_format(cfg)
    if fmt == "text":
        raise ConfigError("tables are written as csv or markdown")
    which = (1, 2, 3, 4) if cfg.which == "all" else (int(cfg.which),)
    out_dir = cfg.out or "."
    os.makedirs(out_dir, exist_ok=True)
    ext = "csv" if fmt == "csv" else "md"
    for i in which:
        t0 = time.perf_counter()
        table = build_table(i, cfg.N, cfg.load or TABLE_LOAD, cfg.pattern, cfg.quad, cfg.tol)
        path = os.path.join(out_dir, f"table{i}.{ext}")
        _write(render(table, fmt, cfg.timing), path)
        print(f"wrote {path} ({time.perf_counter() - t0:.1f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_check(cfg):
    results = run_checks(cfg.seed)
    text = f"# property checks, seed {cfg.seed}\n" + "".join(r.line() + "\n" for r in results)
    _write(text, cfg.out)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failing properties: " + ", ".join(failed), file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "convergence": cmd_convergence, "tables": cmd_tables, "check": cmd_check}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, dump = parse_config(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if dump:
        _write(cfg.to_text(), None if dump == "-" else dump)
        return EXIT_OK
    try:
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, ProblemSetupError, ValueError) as exc:
        print(f"hdivflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularSystemError, ConvergenceError, StudyError) as exc:
        print(f"hdivflow: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
