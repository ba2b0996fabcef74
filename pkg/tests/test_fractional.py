import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma

from ftl_haar_qmc.errors import ValidationError
from ftl_haar_qmc.fractional import (
    FracFunction,
    PanelDensity,
    anchored_term,
    b_term,
    default_panels,
    delta_alpha,
    extremal_function,
    frac_discrepancy,
    frac_integral,
    kernel_K,
    kernel_Ks,
    phi_synthesize,
    phi_term,
    reflected_l2_star,
    rkhs_worst_case_error,
    rl_derivative,
    seminorm_V,
)
from ftl_haar_qmc.nets import PointSet, faure_net, van_der_corput


def single(x, b=2, precision=1):
    return PointSet(b, precision, np.array([[x]]))


def test_frac_integral_of_constant():
    np.testing.assert_allclose(frac_integral(1.0, 0.5, 0.25), 1 / math.sqrt(math.pi))
    np.testing.assert_allclose(frac_integral(2.0, 1.0, [0.0, 0.5]), [0.0, 1.0])


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9, 1.0])
def test_frac_integral_of_identity(alpha):
    x = np.array([0.1, 0.5, 1.0])
    expected = x ** (1 + alpha) / gamma(2 + alpha)
    np.testing.assert_allclose(frac_integral(lambda t: t, alpha, x), expected, rtol=1e-12)


def test_frac_integral_validation():
    with pytest.raises(ValidationError):
        frac_integral(1.0, 1.5, 0.5)
    with pytest.raises(ValidationError):
        frac_integral(1.0, 0.5, 1.5)


def test_rl_derivative_of_identity():
    for alpha in (0.25, 0.5, 0.75):
        value = rl_derivative(lambda t: t, alpha, 0.5)
        np.testing.assert_allclose(value, 0.5 ** (1 - alpha) / gamma(2 - alpha), rtol=1e-5)


def test_rl_derivative_anchoring():
    one = lambda t: np.ones_like(t)  # noqa: E731
    assert abs(rl_derivative(one, 0.5, 0.4)) < 1e-8
    np.testing.assert_allclose(rl_derivative(one, 0.5, 0.4, anchored=False), 0.4**-0.5 / gamma(0.5), rtol=1e-5)


def test_rl_derivative_validation():
    with pytest.raises(ValidationError):
        rl_derivative(lambda t: t, 1.0, 0.5)
    with pytest.raises(ValidationError):
        rl_derivative(lambda t: t, 0.5, 0.0005)


def test_panel_density():
    with pytest.raises(ValidationError):
        PanelDensity((np.array([0.0, 0.7]),), np.array([1.0]))
    with pytest.raises(ValidationError):
        PanelDensity((np.array([0.0, 0.5, 1.0]),), np.array([1.0]))
    d = PanelDensity((np.array([0.0, 0.25, 1.0]),), np.array([4.0, -2.0]))
    np.testing.assert_array_equal(d(np.array([[0.1], [0.25], [1.0]])), [4.0, -2.0, -2.0])
    np.testing.assert_allclose(d.lp_norm(1), 2.5)
    np.testing.assert_allclose(d.lp_norm(2), math.sqrt(16 * 0.25 + 4 * 0.75))
    assert d.lp_norm("inf") == 4.0


def test_panel_density_riemann_liouville():
    alpha = 0.6
    d = PanelDensity((np.array([0.0, 1.0]),), np.array([1.0]))
    x = np.array([[0.2], [0.9]])
    np.testing.assert_allclose(d.riemann_liouville(x, alpha), x[:, 0] ** alpha / alpha)
    np.testing.assert_allclose(d.riemann_liouville_integral(alpha), 1 / (alpha * (alpha + 1)))


def test_frac_function_validation():
    with pytest.raises(ValidationError):
        FracFunction(0.5, 1, {(): lambda t: t})
    with pytest.raises(ValidationError):
        FracFunction(0.5, 1, {(1,): 1.0})
    F = FracFunction.from_densities(0.5, 2, {(1,): 2.0})
    assert F.density(()) == 0.0
    assert F.density((0, 1)) == 0.0
    assert F.density([1]) == 2.0


def test_phi_synthesize_alpha_one():
    F = FracFunction(1.0, 1, {(): 2.0, (0,): 3.0})
    np.testing.assert_allclose(phi_synthesize(F, [0.4]), 3.2)
    G = FracFunction(1.0, 1, {(): 0.0, (0,): lambda t: 6 * t[:, 0]})
    np.testing.assert_allclose(G(np.array([[0.5], [1.0]])), [0.75, 3.0], rtol=1e-12)


def test_phi_term_agrees_across_density_kinds():
    alpha, x = 0.6, np.array([[0.3], [0.8]])
    expected = 2.0 * x[:, 0] ** alpha / (alpha * gamma(alpha))
    panel = PanelDensity((np.array([0.0, 0.5, 1.0]),), np.array([2.0, 2.0]))
    for density in (2.0, lambda t: np.full(len(t), 2.0), panel):
        F = FracFunction(alpha, 1, {(): 0.0, (0,): density})
        np.testing.assert_allclose(phi_term(F, (0,), x), expected, rtol=1e-10)


def test_phi_term_two_dimensional():
    F = FracFunction(1.0, 2, {(): 0.0, (0,): 0.0, (1,): 0.0, (0, 1): 1.0})
    np.testing.assert_allclose(phi_synthesize(F, [0.5, 0.4]), 0.2)
    with pytest.raises(ValidationError):
        phi_term(F, (0,), [0.5])


def test_anchored_term():
    f = lambda x: x[:, 0] * x[:, 1]  # noqa: E731
    np.testing.assert_allclose(anchored_term(f, (0, 1), [0.3, 0.7]), 0.21)
    assert anchored_term(f, (0,), [0.3, 0.7]) == 0.0
    g = lambda x: 1 + x[:, 0] + x[:, 1]  # noqa: E731
    np.testing.assert_allclose(anchored_term(g, (0,), [0.3, 0.7]), 0.3)
    np.testing.assert_allclose(anchored_term(g, (), [0.3, 0.7]), 1.0)


def test_seminorm_V():
    F = FracFunction(1.0, 1, {(): 5.0, (0,): 3.0})
    np.testing.assert_allclose(seminorm_V(F), 3.0)
    np.testing.assert_allclose(seminorm_V(F, full=True), math.sqrt(34))
    np.testing.assert_allclose(seminorm_V(F, 2, "inf", full=True), 5.0)
    G = FracFunction(1.0, 1, {(): 0.0, (0,): lambda t: t[:, 0]})
    np.testing.assert_allclose(seminorm_V(G, p=2), 1 / math.sqrt(3), rtol=1e-10)


DENSITIES = {
    "constant": lambda t: np.full(len(t), 2.0),
    "linear": lambda t: 2 + t,
    "quadratic": lambda t: 1 + t**2,
    "cosine": lambda t: np.cos(np.pi * t / 2),
    "exponential": lambda t: np.exp(-t),
}


@pytest.mark.parametrize("alpha", [0.6, pytest.param(0.75, marks=pytest.mark.slow),
                                   pytest.param(0.9, marks=pytest.mark.slow)])
@pytest.mark.parametrize("name", sorted(DENSITIES))
def test_rl_derivative_recovers_the_density(alpha, name):
    g = DENSITIES[name]
    F = FracFunction(alpha, 1, {(): 0.0, (0,): lambda t: g(t[:, 0])})
    f = lambda t: phi_synthesize(F, np.asarray(t)[:, None])  # noqa: E731
    for x in (0.3, 0.6):
        np.testing.assert_allclose(rl_derivative(f, alpha, x), g(np.array([x]))[0], atol=1e-3)


def test_kernel_K():
    assert kernel_K(1.0, 0.3, 0.6) == pytest.approx(1.3)
    np.testing.assert_allclose(kernel_K(0.75, 0.25, 0.25), 2.0)
    x, y, alpha = 0.3, 0.8, 0.75
    c, _ = quad(lambda t: (y - t) ** (alpha - 1), 0, x, weight="alg", wvar=(0.0, alpha - 1), epsabs=1e-13)
    np.testing.assert_allclose(kernel_K(alpha, x, y), 1 + c, rtol=1e-8)
    np.testing.assert_allclose(kernel_K(alpha, y, x), kernel_K(alpha, x, y), rtol=1e-12)
    np.testing.assert_allclose(kernel_Ks(alpha, [x, 0.5], [y, 0.5]), (1 + c) * kernel_K(alpha, 0.5, 0.5))
    with pytest.raises(ValidationError):
        kernel_K(0.5, 0.1, 0.2)


def test_b_term():
    x = np.array([0.0, 0.3, 1.0])
    np.testing.assert_allclose(b_term(1.0, x), x - x**2 / 2)
    alpha = 0.8
    expected, _ = quad(lambda t: (1 - t) ** alpha, 0, 0.3, weight="alg", wvar=(0.0, alpha - 1), epsabs=1e-13)
    np.testing.assert_allclose(b_term(alpha, np.array([0.3])), [expected / alpha], rtol=1e-10)


def test_delta_alpha():
    P = single(1)
    np.testing.assert_allclose(delta_alpha([0.25], (0,), P, 1.0), -0.25)
    np.testing.assert_allclose(delta_alpha([0.25], (0,), P, 0.5), 2 * math.sqrt(0.75) - 2)
    assert delta_alpha([0.5], (0,), P, 0.5) == math.inf
    assert delta_alpha([0.75], (0,), P, 0.5) == pytest.approx(2 * math.sqrt(0.25))
    with pytest.raises(ValidationError):
        delta_alpha([], (), P, 0.5)
    with pytest.raises(ValidationError):
        delta_alpha([0.5, 0.5], (0,), P, 0.5)


def test_discrepancy_of_one_point():
    result = frac_discrepancy(single(1), 1.0)
    np.testing.assert_allclose(result.value, math.sqrt(1 / 12))
    assert result.method == "warnock"


def test_warnock_matches_reflected_l2_star():
    for P in (van_der_corput(2, 3), faure_net(3, 2, 2)):
        np.testing.assert_allclose(frac_discrepancy(P, 1.0).value, reflected_l2_star(P), rtol=1e-10)


def test_methods_agree_at_alpha_one():
    P = faure_net(2, 3, 2)
    warnock = frac_discrepancy(P, 1.0).value
    np.testing.assert_allclose(frac_discrepancy(P, 1.0, method="quad").value, warnock, rtol=1e-5)
    mc = frac_discrepancy(P, 1.0, method="mc", seed=1)
    assert abs(mc.value - warnock) < 6 * mc.error_estimate + 1e-3


@pytest.mark.slow
def test_methods_agree_below_alpha_one():
    P = van_der_corput(2, 2)
    warnock = frac_discrepancy(P, 0.75).value
    quad_value = frac_discrepancy(P, 0.75, method="tensor-quad").value
    np.testing.assert_allclose(quad_value, warnock, rtol=1e-4)


@pytest.mark.slow
def test_discrepancy_methods_agree_on_a_faure_net():
    P = faure_net(2, 3, 2)
    warnock = frac_discrepancy(P, 0.75).value
    quad_result = frac_discrepancy(P, 0.75, method="quad")
    np.testing.assert_allclose(quad_result.value, warnock, atol=1e-8)
    np.testing.assert_allclose(rkhs_worst_case_error(P, 0.75), warnock, atol=1e-8)
    mc = frac_discrepancy(P, 0.75, method="mc")
    assert abs(mc.value - warnock) <= 3 * mc.error_estimate


def test_discrepancy_validation():
    P = van_der_corput(2, 2)
    with pytest.raises(ValidationError):
        frac_discrepancy(P, 1.0, method="sobol")
    with pytest.raises(ValidationError):
        frac_discrepancy(P, 1.0, 3, 2)
    with pytest.raises(ValidationError):
        frac_discrepancy(P, 0.5, 2, 2)
    with pytest.raises(ValidationError):
        frac_discrepancy(P, 0.6, "inf", 2, method="mc")
    with pytest.raises(ValidationError):
        frac_discrepancy(np.full((4, 4), 0.5), 1.0, method="quad")


def test_sup_discrepancy_at_alpha_one():
    result = frac_discrepancy(single(1), 1.0, "inf", "inf", method="quad")
    np.testing.assert_allclose(result.value, 0.5)


def test_rkhs_worst_case_error_matches_warnock():
    P = faure_net(2, 2, 2)
    np.testing.assert_allclose(rkhs_worst_case_error(P, 1.0), frac_discrepancy(P, 1.0).value, rtol=1e-10)


@pytest.mark.slow
def test_rkhs_worst_case_error_below_alpha_one():
    P = van_der_corput(2, 2)
    np.testing.assert_allclose(rkhs_worst_case_error(P, 0.8, tol=1e-7), frac_discrepancy(P, 0.8).value, rtol=1e-5)


def test_extremal_function_alpha_one():
    result = extremal_function(van_der_corput(2, 2), 1.0, panels=64)
    assert 0.99 < result.achieved_ratio <= 1 + 1e-8
    assert result.discrepancy.method == "warnock"


def test_default_panels_scale_with_the_point_count():
    assert default_panels(1) == default_panels(4) == 64
    assert default_panels(64) == 1024
    result = extremal_function(van_der_corput(2, 6), 1.0)
    assert result.panels == 1024
    assert 0.99 < result.achieved_ratio <= 1 + 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.75, 1.0])
@pytest.mark.parametrize("P", [van_der_corput(2, 6), faure_net(2, 4, 2)], ids=["vdc-64", "faure-16x2"])
def test_extremal_ratio_at_default_panels(P, alpha):
    result = extremal_function(P, alpha)
    assert 0.99 <= result.achieved_ratio <= 1 + 1e-6
    np.testing.assert_allclose(result.discrepancy.value, rkhs_worst_case_error(P, alpha), atol=1e-6)


def test_integration_error_matches_error_representation():
    P = van_der_corput(2, 2)
    result = extremal_function(P, 1.0, panels=8)
    F = result.function
    x = P.to_float()
    grid = (np.arange(4096) + 0.5) / 4096
    integral = float(np.mean(phi_synthesize(F, grid[:, None])))
    np.testing.assert_allclose(integral - float(np.mean(phi_synthesize(F, x))), result.error, atol=1e-6)


@pytest.mark.slow
def test_extremal_ratio_increases_with_panels():
    P = faure_net(2, 2, 2)
    ratios = [extremal_function(P, 0.75, panels=n, grading=8).achieved_ratio for n in (4, 16)]
    assert ratios[0] <= ratios[1] + 1e-6
    assert ratios[1] <= 1 + 1e-4


def test_extremal_function_validation():
    P = van_der_corput(2, 2)
    with pytest.raises(ValidationError):
        extremal_function(P, 0.5, p=2)
    with pytest.raises(ValidationError):
        extremal_function(P, 1.0, p="inf")
    with pytest.raises(ValidationError):
        extremal_function(P, 1.0, panels=0)
