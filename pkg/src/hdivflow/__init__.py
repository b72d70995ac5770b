"""Upwind H(div) mixed finite elements for linearised inviscid flow.

Solves ``div(u (x) beta) + sigma u + grad p = f`` with ``div u = 0`` and
``u.n = 0`` on the unit square, using Raviart-Thomas or BDM velocities,
discontinuous pressures and upwind facet fluxes.
"""

from .analysis import (ELEMENTS, ConvergenceTable, ErrorReport, check_rt_bdm_equivalence,
                       convergence_study, error_norms, jump_seminorm, solve_problem)
from .assembly import (ProblemSetupError, QuadConfig, SaddleSystem, apply_form, assemble,
                       convection_matrix)
from .mesh import Mesh, build_unit_square_mesh
from .problems import ProblemSpec, make_problem, shear_problem, vortex_problem, zero_flow_problem
from .quadrature import edge_rule, triangle_rule
from .solver import ConvergenceError, SingularSystemError, SolveReport, solve
from .spaces import (BDM1, P0, P1, RT0, RT1, DiscreteField, FunctionSpace, GeometryError,
                     SpaceSpec, build_dof_map, l2_project, piola_map, reference_basis,
                     rt_interpolate)

__version__ = "0.1.0"

__all__ = [
    "BDM1", "ELEMENTS", "P0", "P1", "RT0", "RT1",
    "ConvergenceError", "ConvergenceTable", "DiscreteField", "ErrorReport", "FunctionSpace",
    "GeometryError", "Mesh", "ProblemSetupError", "ProblemSpec", "QuadConfig", "SaddleSystem",
    "SingularSystemError", "SolveReport", "SpaceSpec",
    "apply_form", "assemble", "build_dof_map", "build_unit_square_mesh",
    "check_rt_bdm_equivalence", "convection_matrix", "convergence_study", "edge_rule",
    "error_norms", "jump_seminorm", "l2_project", "make_problem", "piola_map",
    "reference_basis", "rt_interpolate", "shear_problem", "solve", "solve_problem",
    "triangle_rule", "vortex_problem", "zero_flow_problem",
]
