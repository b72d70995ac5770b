"""Solve the vortex problem once with each element pair and print the errors.

Run with ``python3 demos/solve_vortex.py``.
"""

from hdivflow import solve_problem, vortex_problem

problem = vortex_problem(n=1, sigma=100.0)
for element in ("rt0p0", "bdm1p0", "rt1p1dc"):
    sol = solve_problem(problem, element, cells_per_side=20)
    r = sol.report
    print(f"{element:8s} dofs={r.n_dofs:6d}  |u-uh|/|u|={r.vel_l2_rel:.3e}  "
          f"|p-ph|/|p|={r.pres_l2_rel:.3e}  |div uh|/|uh|={r.div_rel:.1e}")
