"""Acceptance criteria, each at its stated tolerance.

Every test records one ``CRITERION k: PASS|FAIL - detail`` line; the
lines are printed as they are produced and again in the terminal summary.
Run on its own with ``pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest

from hdivflow.analysis import check_rt_bdm_equivalence, convergence_study, interpolation_error
from hdivflow.assembly import QuadConfig
from hdivflow.checks import IDENTITY_QUAD_EXTRA, commuting_defect, identity_defect
from hdivflow.mesh import build_unit_square_mesh
from hdivflow.problems import SHEAR_PROFILES, shear_problem, vortex_problem
from hdivflow.spaces import BDM1, RT1, DiscreteField, FunctionSpace
from hdivflow.tables import build_table

pytestmark = pytest.mark.slow

T1_VEL = [0.011, 0.0030, 0.00087, 0.00031]
T1_VEL_RATES = [1.9, 1.8, 1.5]
T1_PRES = [0.15, 0.074, 0.037, 0.019]
T2_PRES = [0.026, 0.0060, 0.0018, 0.00073]
T2_PRES_RATES = [2.1, 1.7, 1.3]
T3_BDM_VEL = [0.00087, 0.0048, 0.031, 0.21]
T4_BDM_PRES = 0.037
T4_VEL_SIGMA1 = 0.048


def record(log, k, checks):
    """``checks`` is a list of (label, ok, detail); logs one line and returns overall status."""
    ok = all(c[1] for c in checks)
    failed = [f"{label} ({detail})" for label, good, detail in checks if not good]
    detail = "; ".join(failed) if failed else "; ".join(f"{label} ({d})" for label, _, d in checks)
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    log.append(line)
    return ok


def within(values, refs, rel):
    return all(abs(v / r - 1) <= rel for v, r in zip(values, refs))


def fmt(values, spec=".3g"):
    return "[" + ", ".join(format(v, spec) for v in values) + "]"


@pytest.fixture(scope="module")
def table1():
    t0 = time.perf_counter()
    table = build_table(1)
    return table, time.perf_counter() - t0


@pytest.fixture(scope="module")
def table2():
    return build_table(2)


@pytest.fixture(scope="module")
def table3():
    return build_table(3)


@pytest.fixture(scope="module")
def table4():
    return build_table(4)


def test_criterion_1_table1(table1, acceptance_log):
    table, seconds = table1
    vel, pres = table.column("vel_l2_rel"), table.column("pres_l2_rel")
    vr, pr = table.rates("vel_l2_rel")[1:], table.rates("pres_l2_rel")[1:]
    ok = record(acceptance_log, 1, [
        ("velocity errors within 15%", within(vel, T1_VEL, 0.15), f"{fmt(vel)} vs {T1_VEL}"),
        ("velocity rates within 0.2", all(abs(a - b) <= 0.2 for a, b in zip(vr, T1_VEL_RATES)),
         f"{fmt(vr, '.2f')} vs {T1_VEL_RATES}"),
        ("pressure errors within 15%", within(pres, T1_PRES, 0.15), f"{fmt(pres)} vs {T1_PRES}"),
        ("pressure rates 1.0 +- 0.15", all(abs(r - 1) <= 0.15 for r in pr), fmt(pr, ".2f")),
        ("runtime <= 300 s", seconds <= 300, f"{seconds:.0f} s"),
    ])
    assert ok


def test_criterion_2_table2(table1, table2, acceptance_log):
    vel1, vel2 = table1[0].column("vel_l2_rel"), table2.column("vel_l2_rel")
    pres = table2.column("pres_l2_rel")
    pr = table2.rates("pres_l2_rel")[1:]
    same = max(abs(a / b - 1) for a, b in zip(vel1, vel2))
    ok = record(acceptance_log, 2, [
        ("velocity column identical to table 1", same <= 1e-8, f"max relative difference {same:.1e}"),
        ("pressure errors within 15%", within(pres, T2_PRES, 0.15), f"{fmt(pres)} vs {T2_PRES}"),
        ("pressure rates within 0.25", all(abs(a - b) <= 0.25 for a, b in zip(pr, T2_PRES_RATES)),
         f"{fmt(pr, '.2f')} vs {T2_PRES_RATES}"),
    ])
    assert ok


def test_criterion_3_rt_bdm_equivalence(acceptance_log):
    checks = []
    for n in (10, 20):
        d, scale = check_rt_bdm_equivalence(vortex_problem(1, 100.0), n)
        checks.append((f"h=1/{n}", d <= 1e-8 * scale, f"{d / scale:.1e} relative"))
    assert record(acceptance_log, 3, checks)


def test_criterion_4_discrete_incompressibility(table1, table2, acceptance_log):
    divs = [r.div_rel for t in (table1[0], table2) for r in t.reports]
    assert record(acceptance_log, 4, [
        ("||div u_h|| / ||u_h|| <= 1e-9", max(divs) <= 1e-9, f"max {max(divs):.1e} over {len(divs)} solves"),
    ])


def test_criterion_5_convection_identity(acceptance_log):
    rng = np.random.default_rng(20240605)
    mesh = build_unit_square_mesh(8)
    beta = vortex_problem(1).beta
    checks = []
    for spec in (RT1, BDM1):
        V = FunctionSpace(mesh, spec)
        quad = QuadConfig.for_degree(spec.degree, IDENTITY_QUAD_EXTRA)
        worst = max(identity_defect(DiscreteField(V, rng.standard_normal(V.dim)), beta, quad)
                    for _ in range(100))
        checks.append((f"{spec}, 100 fields", worst <= 1e-10, f"max relative defect {worst:.1e}"))
    assert record(acceptance_log, 5, checks)


def test_criterion_6_interpolation(acceptance_log):
    beta = vortex_problem(1).beta
    cells = (8, 16, 32, 64)
    checks = []
    for k, target in ((1, 2.0), (0, 1.0)):
        errs = [interpolation_error(beta, n, k) for n in cells]
        rates = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
        checks.append((f"RT{k} rates {target} +- 0.15", all(abs(r - target) <= 0.15 for r in rates),
                       fmt(rates, ".3f")))
    for k in (0, 1):
        d = commuting_defect(8, k)
        checks.append((f"commuting RT{k}", d <= 1e-10, f"{d:.1e}"))
    assert record(acceptance_log, 6, checks)


def test_criterion_7_table3(table3, acceptance_log):
    cols = {name: table3.column(name) for name in
            ("bdm_vel_l2_rel", "bdm_pres_l2_rel", "rt_vel_l2_rel", "rt_pres_l2_rel")}
    increasing = {name: all(b > a for a, b in zip(c, c[1:])) for name, c in cols.items()}
    bdm = cols["bdm_vel_l2_rel"]
    ok = record(acceptance_log, 7, [
        ("all columns increase with n", all(increasing.values()),
         ", ".join(f"{k}={fmt(v)}" for k, v in cols.items())),
        ("BDM velocity within 25%", within(bdm, T3_BDM_VEL, 0.25), f"{fmt(bdm)} vs {T3_BDM_VEL}"),
    ])
    assert ok


def test_criterion_8_table4(table4, acceptance_log):
    by_sigma = {r.value: r for r in table4.rows}
    pres = {s: by_sigma[s].bdm.pres_l2_rel for s in (10.0, 25.0, 50.0, 100.0, 1e6)}
    vel1 = by_sigma[1.0].bdm.vel_l2_rel
    rt_hi, rt_lo = by_sigma[1e6].rt.pres_l2_rel, by_sigma[100.0].rt.pres_l2_rel
    ok = record(acceptance_log, 8, [
        ("BDM pressure within 10% of 0.037", within(pres.values(), [T4_BDM_PRES] * 5, 0.10),
         ", ".join(f"sigma={s:g}: {p:.3g}" for s, p in pres.items())),
        ("velocity at sigma=1 within 25% of 0.048", abs(vel1 / T4_VEL_SIGMA1 - 1) <= 0.25, f"{vel1:.3g}"),
        ("RT pressure decreases from sigma=1e6 to 100", rt_lo < rt_hi, f"{rt_hi:.3g} -> {rt_lo:.3g}"),
    ])
    assert ok


def test_criterion_9_superconvergence(table1, acceptance_log):
    table = table1[0]
    proj = table.rates("proj_pres_error")[1:]
    pres = table.rates("pres_l2_rel")[1:]
    assert record(acceptance_log, 9, [
        ("||P0 p - p_h|| rate >= 1.3", min(proj) >= 1.3, fmt(proj, ".2f")),
        ("||p - p_h|| rate ~ 1.0", all(abs(r - 1) <= 0.15 for r in pres), fmt(pres, ".2f")),
    ])


def test_criterion_10_lowest_order(acceptance_log):
    table = convergence_study(shear_problem(SHEAR_PROFILES["sin"]), "rt0p0", (8, 16, 32, 64))
    rates = table.rates("vel_l2_rel")[1:]
    assert record(acceptance_log, 10, [
        ("RT0/P0 shear velocity rate >= 0.45", min(rates) >= 0.45, fmt(rates, ".2f")),
    ])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
