from math import factorial

import numpy as np
import pytest

from wgelastic.polymesh import gen_kuhn_tet_grid, gen_nonconvex_polygon_grid, polygon_area
from wgelastic.quadrature import (
    MAX_DEGREE,
    UnsupportedDegreeError,
    composite_rule,
    element_quadrature,
    line_quadrature,
    simplex_quadrature,
)


def simplex_monomial_integral(exps):
    """Closed form of the integral of prod x_i^a_i over the unit reference simplex."""
    d = len(exps)
    return np.prod([factorial(a) for a in exps]) / factorial(sum(exps) + d)


def monomials(d, degree):
    if d == 2:
        return [(a, b) for a in range(degree + 1) for b in range(degree + 1 - a)]
    return [(a, b, c) for a in range(degree + 1) for b in range(degree + 1 - a)
            for c in range(degree + 1 - a - b)]


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("degree", [0, 1, 2, 5, 8, 13])
def test_simplex_rule_exact_on_monomials(d, degree):
    rule = simplex_quadrature(d, degree)
    assert rule.exact_degree >= degree
    assert rule.weights.sum() == pytest.approx(1.0 / factorial(d), rel=1e-13)
    for exps in monomials(d, degree):
        vals = np.prod(rule.points ** np.array(exps), axis=1)
        assert rule.integrate(vals) == pytest.approx(simplex_monomial_integral(exps), rel=1e-12)


def test_simplex_rule_point_count_bound():
    for d in (2, 3):
        for degree in range(0, 27):
            n = simplex_quadrature(d, degree).weights.size
            assert n <= int(np.ceil((degree + 2) / 2)) ** d


def test_reference_triangle_linear():
    rule = simplex_quadrature(2, 1)
    assert rule.integrate(rule.points[:, 0]) == pytest.approx(1 / 6, abs=1e-15)


def test_reference_tet_single_point():
    rule = simplex_quadrature(3, 0)
    assert rule.weights.size == 1
    assert rule.weights[0] == pytest.approx(1 / 6, abs=1e-16)


def test_degree_26_high_monomial():
    rule = simplex_quadrature(2, 26)
    vals = rule.points[:, 0] ** 13 * rule.points[:, 1] ** 13
    exact = factorial(13) ** 2 / factorial(28)
    assert rule.integrate(vals) == pytest.approx(exact, rel=1e-12)


def test_degree_cap():
    simplex_quadrature(2, MAX_DEGREE)
    with pytest.raises(UnsupportedDegreeError):
        simplex_quadrature(2, MAX_DEGREE + 1)


@pytest.mark.parametrize("degree", [1, 4, 11])
def test_line_rule(degree):
    rule = line_quadrature(degree)
    for p in range(degree + 1):
        assert rule.integrate(rule.points[:, 0] ** p) == pytest.approx(1 / (p + 1), rel=1e-13)


def test_pentagon_weights_sum_to_area():
    mesh = gen_nonconvex_polygon_grid(1)
    for e, T in enumerate(mesh.elements):
        rule = element_quadrature(mesh, e, 0)
        area = polygon_area(mesh.vertices[list(T.vertex_ids)])
        assert rule.weights.sum() == pytest.approx(area, rel=1e-14)


def test_unit_square_as_two_triangles():
    simplices = np.array([[[0, 0], [1, 0], [1, 1]], [[0, 0], [1, 1], [0, 1]]], dtype=float)
    rule = composite_rule(simplices, 2)
    assert rule.integrate(rule.points[:, 0] ** 2) == pytest.approx(1 / 3, abs=1e-14)


def test_kuhn_tet_linear_moment():
    mesh = gen_kuhn_tet_grid(1)
    for e, T in enumerate(mesh.elements):
        rule = element_quadrature(mesh, e, 1)
        V = mesh.vertices[list(T.vertex_ids)]
        # integral of z over a tet = volume * mean z of its vertices
        assert rule.integrate(rule.points[:, 2]) == pytest.approx(T.measure * V[:, 2].mean(), abs=1e-15)
