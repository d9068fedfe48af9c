from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biharmwave.quadrature import EDGE2, EDGE3, TRI_DEG4, TRI_DEG6, collapsed_gauss_triangle, gauss_edge


def mean_monomial(a, b, c=0):
    # mean of l1^a l2^b l3^c over a triangle: 2 a! b! c! / (a + b + c + 2)!
    return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)


def apply(rule, a, b, c=0):
    p = rule.points
    return float(rule.weights @ (p[:, 0] ** a * p[:, 1] ** b * p[:, 2] ** c))


@pytest.mark.parametrize("rule", [TRI_DEG4, TRI_DEG6, collapsed_gauss_triangle(6)], ids=["deg4", "deg6", "duffy6"])
def test_triangle_rules_exact_to_degree(rule):
    for a in range(rule.degree + 1):
        for b in range(rule.degree + 1 - a):
            for c in range(rule.degree + 1 - a - b):
                assert apply(rule, a, b, c) == pytest.approx(mean_monomial(a, b, c), rel=1e-14, abs=1e-16)


@pytest.mark.parametrize("rule", [TRI_DEG4, TRI_DEG6])
def test_triangle_rules_not_exact_beyond_degree(rule):
    d = rule.degree + 1
    errs = [abs(apply(rule, a, d - a) - mean_monomial(a, d - a)) for a in range(d + 1)]
    assert max(errs) > 1e-8


def test_rule_sizes_and_barycentric_points():
    assert TRI_DEG4.size == 6 and TRI_DEG6.size == 12
    for rule in (TRI_DEG4, TRI_DEG6):
        assert np.allclose(rule.points.sum(axis=1), 1.0)
        assert np.all(rule.points > 0)
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 23))
def test_gauss_edge_exactness(npts, degree):
    rule = gauss_edge(npts)
    exact = 1.0 / (degree + 1)
    got = float(rule.weights @ rule.points**degree)
    if degree <= 2 * npts - 1:
        assert got == pytest.approx(exact, rel=1e-13)


def test_named_edge_rules():
    assert EDGE2.size == 2 and EDGE2.degree == 3
    assert EDGE3.size == 3 and EDGE3.degree == 5
