from math import factorial

import numpy as np
import pytest

from hdivflow.quadrature import MAX_EDGE_DEGREE, MAX_TRIANGLE_DEGREE, default_degrees, edge_rule, triangle_rule


def monomial_integral(a, b):
    """Exact integral of x^a y^b over the reference triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def tri_integral(rule, f):
    x, y = rule.xy.T
    return 0.5 * rule.weights @ f(x, y)


def test_degree1_area():
    r = triangle_rule(1)
    assert tri_integral(r, lambda x, y: np.ones_like(x)) == pytest.approx(0.5, abs=1e-16)


def test_degree2_x_squared():
    assert abs(tri_integral(triangle_rule(2), lambda x, y: x ** 2) - 1 / 12) < 1e-14


def test_degree8_x4y4():
    exact = factorial(4) * factorial(4) / factorial(10)
    assert abs(tri_integral(triangle_rule(8), lambda x, y: x ** 4 * y ** 4) - exact) < 1e-13


@pytest.mark.parametrize("degree", range(1, MAX_TRIANGLE_DEGREE + 1))
def test_triangle_exactness_sweep(degree):
    r = triangle_rule(degree)
    assert r.exact_degree >= degree
    assert abs(r.weights.sum() - 1) < 1e-14
    assert np.all(r.weights > 0)
    assert np.all(r.points >= -1e-15) and np.all(r.points <= 1 + 1e-15)
    np.testing.assert_allclose(r.points.sum(axis=1), 1, atol=1e-14)
    x, y = r.xy.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = 0.5 * r.weights @ (x ** a * y ** b)
            assert abs(got - monomial_integral(a, b)) < 1e-13, (a, b)


def test_triangle_rule_is_symmetric():
    r = triangle_rule(6)
    pts = {tuple(np.round(p, 12)) for p in r.points}
    for p in r.points:
        assert tuple(np.round(p[[1, 2, 0]], 12)) in pts


def test_edge_examples():
    r1 = edge_rule(1)
    assert len(r1) == 1 and r1.weights @ r1.points == 0.5
    r2 = edge_rule(3)
    assert len(r2) == 2 and abs(r2.weights @ r2.points ** 3 - 0.25) < 1e-15
    r5 = edge_rule(9)
    assert len(r5) == 5 and abs(r5.weights @ r5.points ** 9 - 0.1) < 1e-14


@pytest.mark.parametrize("degree", range(1, MAX_EDGE_DEGREE + 1))
def test_edge_exactness_sweep(degree):
    r = edge_rule(degree)
    assert np.all(r.weights > 0) and abs(r.weights.sum() - 1) < 1e-14
    assert np.all((r.points > 0) & (r.points < 1))
    for p in range(degree + 1):
        assert abs(r.weights @ r.points ** p - 1 / (p + 1)) < 1e-13


@pytest.mark.parametrize("bad", [0, -1, MAX_TRIANGLE_DEGREE + 1])
def test_triangle_bad_degree(bad):
    with pytest.raises(ValueError):
        triangle_rule(bad)


@pytest.mark.parametrize("bad", [0, MAX_EDGE_DEGREE + 1])
def test_edge_bad_degree(bad):
    with pytest.raises(ValueError):
        edge_rule(bad)


def test_default_degrees():
    assert default_degrees(0) == (6, 5)
    assert default_degrees(1) == (8, 7)


def test_rules_are_immutable():
    r = triangle_rule(3)
    with pytest.raises(ValueError):
        r.weights[0] = 1.0
