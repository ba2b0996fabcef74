import math

import numpy as np
import pytest

from ftl_haar_qmc.errors import NumericBudgetExceeded
from ftl_haar_qmc.quadrature import (
    MAX_LEVELS,
    gauss_panels,
    graded_integral,
    graded_rule,
    jacobi_rule,
    legendre_rule,
    levels_for_gap,
    refine,
)


def test_legendre_rule():
    x, w = legendre_rule(8)
    np.testing.assert_allclose(w.sum(), 1.0)
    np.testing.assert_allclose(np.dot(w, x**5), 1 / 6)
    assert ((x > 0) & (x < 1)).all()
    with pytest.raises(ValueError):
        x[0] = 0.5


def test_jacobi_rule():
    x, w = jacobi_rule(10, -0.5)
    np.testing.assert_allclose(w.sum(), 2.0)
    np.testing.assert_allclose(np.dot(w, x), 4 / 3)
    x, w = jacobi_rule(6, 0.5, -0.5)
    # int_0^1 (1-u)^(1/2) u^(-1/2) du = B(1/2, 3/2) = pi / 2
    np.testing.assert_allclose(w.sum(), math.pi / 2)


def test_graded_rule_integrates_the_weight():
    x, w = graded_rule(-0.5, 5)
    np.testing.assert_allclose(w.sum(), 2.0, rtol=1e-12)
    assert x.size == 6 * 16


def test_levels_for_gap():
    assert levels_for_gap(1.0) == 2
    assert levels_for_gap(2.0**-10) == 12
    assert levels_for_gap(0.0) == MAX_LEVELS
    np.testing.assert_array_equal(levels_for_gap([1.0, 0.25]), [2, 4])


def test_graded_integral_near_singularity():
    gaps = np.array([1e-6, 0.1, 1.0])
    values = graded_integral(lambda u, g: (1.0 + g - u) ** -0.5, 0.0, gaps, 16, gaps)
    np.testing.assert_allclose(values, 2 * (np.sqrt(1 + gaps) - np.sqrt(gaps)), rtol=1e-10)


def test_gauss_panels():
    nodes, weights, right, offsets = gauss_panels(np.array([0.0, 0.5, 1.0]), 8)
    assert nodes.size == 16
    np.testing.assert_allclose(weights.sum(), 1.0)
    np.testing.assert_allclose(np.dot(weights, nodes**3), 0.25)
    np.testing.assert_allclose(right[:8], 0.5)
    np.testing.assert_allclose(offsets, right - nodes, atol=1e-15)


def test_gauss_panels_singular_weight():
    _, weights, _, _ = gauss_panels(np.array([0.0, 0.5, 0.5, 1.0]), 8, a=-0.5)
    np.testing.assert_allclose(weights.sum(), 2 * math.sqrt(2))


def test_refine():
    value, error, n = refine(lambda n: np.dot(legendre_rule(n)[1], np.exp(legendre_rule(n)[0])), 1e-10, n0=4)
    np.testing.assert_allclose(value, math.e - 1)
    assert error <= 1e-10
    # the 4- and 8-point rules still differ by about 1e-7
    assert n == 16


def test_refine_budget():
    with pytest.raises(NumericBudgetExceeded):
        refine(lambda n: float(n), 1e-3, n0=4, max_nodes=64)
