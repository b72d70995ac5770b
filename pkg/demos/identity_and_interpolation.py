"""Two structural properties of the discretisation.

1. For a divergence-free ``beta`` the upwind convection form satisfies
   ``<beta.n v^, v>_h - (v (x) beta, grad v)_h = 1/2 |v|_beta^2`` (half the weighted jump seminorm).
2. The RT interpolant commutes with the divergence and converges at
   order ``k + 1`` for RT_k.

Run with ``python3 demos/identity_and_interpolation.py``.
"""

import numpy as np

from hdivflow import RT1, BDM1, DiscreteField, FunctionSpace, QuadConfig, build_unit_square_mesh, vortex_problem
from hdivflow.analysis import interpolation_error
from hdivflow.checks import IDENTITY_QUAD_EXTRA, commuting_defect, convection_terms

rng = np.random.default_rng(0)
beta = vortex_problem(1).beta
mesh = build_unit_square_mesh(8)
for spec in (RT1, BDM1):
    V = FunctionSpace(mesh, spec)
    quad = QuadConfig.for_degree(spec.degree, IDENTITY_QUAD_EXTRA)
    v = DiscreteField(V, rng.standard_normal(V.dim))
    volume, facet, half_jump = convection_terms(v, beta, quad)
    print(f"{spec}: facet - volume = {facet - volume:.10f}   half jump = {half_jump:.10f}")

for k in (0, 1):
    errs = [interpolation_error(beta, n, k) for n in (8, 16, 32)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    print(f"RT{k} interpolation rates {np.round(rates, 3)}; commuting defect {commuting_defect(8, k):.1e}")
