"""Convergence of BDM1/P0 and RT1/P1dc on the vortex problem.

The two velocity columns agree to roundoff: both pairs produce the same
discretely divergence-free velocity.  Run with ``python3 demos/convergence.py``.
"""

from hdivflow import convergence_study, vortex_problem

problem = vortex_problem(n=1, sigma=100.0)
for element in ("bdm1p0", "rt1p1dc"):
    table = convergence_study(problem, element, cells=(8, 16, 32), load="interpolated")
    print(table.to_markdown(with_time=False))
