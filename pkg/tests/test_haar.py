import math
from fractions import Fraction

import numpy as np
import pytest

from ftl_haar_qmc.errors import ValidationError
from ftl_haar_qmc.haar import (
    CoeffMap,
    Exponent,
    PiecewiseConstant,
    SpaceParams,
    Surd,
    WaveletIndex,
    Psi_eval,
    coeff_smooth,
    coefficients_pc,
    frame_check,
    haar_norm,
    inner_product_pc,
    point_evaluation_constant,
    psi_eval,
    psi_value,
    series_eval,
    synthesize_pc,
)


def half_indicator():
    return PiecewiseConstant(2, 1, np.array([0, 1]))


def test_exponent_parse_and_dual():
    assert Exponent.parse("inf").is_infinite
    assert Exponent.parse(2).dual() == Exponent.parse(2)
    assert Exponent.parse(1).dual().is_infinite
    assert Exponent.parse(4).dual().as_float() == pytest.approx(4 / 3)
    with pytest.raises(ValidationError):
        Exponent.parse(0.5)


def test_space_params():
    params = SpaceParams(2, 1, 1.0, 2, 2)
    assert params.gap == 0.5
    assert params.eval_ok
    assert not SpaceParams(2, 1, 0.5, 2, 2).eval_ok
    assert SpaceParams(2, 1, 0.5, 2, 1).eval_ok
    with pytest.raises(ValidationError):
        SpaceParams(1, 1, 1.0)


def test_psi_eval():
    np.testing.assert_allclose(psi_eval(2, 1, 0, 0, 0.25), 1 / math.sqrt(2))
    np.testing.assert_allclose(psi_eval(2, 1, 0, 0, 0.75), -1 / math.sqrt(2))
    assert psi_eval(3, 0, 0, 0, 0.3) == 1.0
    assert psi_value(2, 1, 0, 0, Fraction(1, 4)) == Surd(0, Fraction(1, 2), 2)


def test_surd_arithmetic_and_order():
    root2 = Surd(0, 1, 2)
    assert (1 + root2) * (1 - root2) == Fraction(-1)
    assert root2 * root2 == 2
    assert Surd(2, 4, 2) / 2 == Surd(1, 2, 2)
    assert Surd(0, 1, 4) == 2
    assert hash(Surd(Fraction(1, 2), 0, 2)) == hash(Fraction(1, 2))
    # mixed signs are decided by comparing a^2 with c^2 b
    assert Surd(3, -2, 2).sign() == 1
    assert Surd(1, -1, 2).sign() == -1
    assert Surd(-3, 2, 3).sign() == 1
    assert Surd(2, -1, 4).sign() == 0
    assert Surd(1, -1, 2) < 0
    assert root2 < Fraction(3, 2) and not root2 < Fraction(7, 5)
    assert abs(Surd(1, -1, 2)) == Surd(-1, 1, 2)
    np.testing.assert_allclose(float(Surd(1, -1, 2)), 1 - math.sqrt(2))
    with pytest.raises(ValidationError):
        root2 + Surd(0, 1, 3)


def test_psi_sup_norm():
    for b in (2, 3, 5):
        for j in (1, 2, 3):
            values = [abs(psi_eval(b, j, 0, 0, Fraction(n, b**j))) for n in range(b**j)]
            np.testing.assert_allclose(max(values), b ** (j / 2) * (1 - 1 / b))


def test_Psi_eval():
    zero = WaveletIndex.zero(2, 2)
    assert Psi_eval(zero, (0.3, 0.9)) == 1.0
    np.testing.assert_allclose(Psi_eval(WaveletIndex(2, (1, 1), (0, 0), (0, 0)), (0.25, 0.25)), 0.5)
    assert Psi_eval(WaveletIndex(2, (2, 0), (1, 0), (0, 0)), (0.25, 0.6)) == 0.0


def test_wavelet_index_validation():
    with pytest.raises(ValidationError):
        WaveletIndex(2, (1,), (1,), (0,))
    with pytest.raises(ValidationError):
        WaveletIndex(2, (0,), (0,), (1,))
    with pytest.raises(ValidationError):
        WaveletIndex(3, (2,), (0,), (3,))


def test_inner_product_pc():
    one = PiecewiseConstant.constant(2, 2, 2)
    assert inner_product_pc(one, WaveletIndex.zero(2, 2)) == 1
    assert inner_product_pc(one, WaveletIndex(2, (1, 2), (0, 1), (1, 0))) == 0
    f = half_indicator()
    assert inner_product_pc(f, WaveletIndex(2, (1,), (0,), (1,))) == Surd(0, Fraction(1, 4), 2)
    assert inner_product_pc(f, WaveletIndex(2, (1,), (0,), (0,))) == Surd(0, Fraction(-1, 4), 2)
    assert inner_product_pc(f, WaveletIndex.zero(2, 1)) == Fraction(1, 2)


def test_inner_product_float_path():
    f = PiecewiseConstant(2, 1, np.array([0.0, 1.0]))
    np.testing.assert_allclose(inner_product_pc(f, WaveletIndex(2, (1,), (0,), (1,))), 1 / (2 * math.sqrt(2)))


def test_coeff_smooth_linear_function():
    for b in (2, 3):
        for j in (1, 2):
            for i in range(b):
                idx = WaveletIndex(b, (j,), (0,), (i,))
                expected = 0.5 * (2 * i + 1 - b) * b ** (-1.5 * j)
                np.testing.assert_allclose(coeff_smooth(lambda x: x[:, 0], idx), expected, atol=1e-12)
    np.testing.assert_allclose(coeff_smooth(lambda x: x[:, 0], WaveletIndex.zero(3, 1)), 0.5)
    assert abs(coeff_smooth(lambda x: np.full(len(x), 2.0), WaveletIndex(2, (2, 1), (1, 0), (0, 1)))) < 1e-12


def test_haar_norm():
    params = SpaceParams(2, 1, 1.0, 2, 2)
    assert haar_norm(CoeffMap(params, {WaveletIndex.zero(2, 1): 1})) == pytest.approx(1.0)
    c = coefficients_pc(half_indicator(), params)
    assert len(c) == 3
    np.testing.assert_allclose(haar_norm(c), math.sqrt(5) / 2)
    np.testing.assert_allclose(haar_norm(c.scaled(-3)), 3 * haar_norm(c))


def test_haar_norm_infinite_exponents():
    c = coefficients_pc(half_indicator(), SpaceParams(2, 1, 1.0, "inf", "inf"))
    # level weight 2^((1 + 1/2) j); sup over levels of the sup-norms
    np.testing.assert_allclose(haar_norm(c), 2**1.5 / (2 * math.sqrt(2)))


def test_series_eval():
    params = SpaceParams(2, 1, 1.0, 2, 2)
    assert series_eval(CoeffMap(params, {WaveletIndex.zero(2, 1): 1}), (Fraction(1, 3),)) == 1
    c = coefficients_pc(half_indicator(), params)
    assert series_eval(c, (Fraction(3, 4),)) == 1
    assert series_eval(c, (Fraction(1, 4),)) == 0


def test_point_evaluation_constant():
    params = SpaceParams(2, 1, 1.0, 2, 2)
    np.testing.assert_allclose(point_evaluation_constant(params), 2.0)
    rng = np.random.default_rng(5)
    c = coefficients_pc(PiecewiseConstant(2, 3, rng.integers(-3, 4, size=8)), params)
    x = rng.random(20)
    bound = point_evaluation_constant(params) * haar_norm(c)
    assert all(abs(float(series_eval(c, (v,)))) <= bound for v in x)


@pytest.mark.parametrize("b", [2, 3, 5])
@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_frame_identities(b, j):
    for k in range(b ** (j - 1)):
        report = frame_check(b, j, k)
        assert report.exact
        assert report.sum_deviation == 0.0
        assert report.gram_deviation == 0.0


def test_gram_entries_by_hand():
    grid = [Fraction(2 * n + 1, 8) for n in range(4)]
    cross = sum((psi_value(2, 1, 0, 0, x) * psi_value(2, 1, 1, 0, x) for x in grid), Surd(0, 0, 2)) / 4
    assert cross == Fraction(-1, 2)
    grid = [Fraction(2 * n + 1, 6) for n in range(3)]
    same = sum((psi_value(3, 1, 0, 0, x) * psi_value(3, 1, 0, 0, x) for x in grid), Surd(0, 0, 3)) / 3
    assert same == Fraction(2, 3)
    for n in range(8):
        x = Fraction(n, 8)
        assert sum((psi_value(2, 2, i, 1, x) for i in range(2)), Surd(0, 0, 2)).is_zero()


def test_zero_sum_and_reconstruction():
    rng = np.random.default_rng(0)
    f = PiecewiseConstant(2, 2, rng.integers(-5, 6, size=(4, 4)))
    c = coefficients_pc(f)
    assert c.zero_sum_violation() == 0.0
    np.testing.assert_allclose(synthesize_pc(c, level=2).values, f.values.astype(float), atol=1e-12)


def test_reconstruction_base_three():
    rng = np.random.default_rng(1)
    f = PiecewiseConstant(3, 2, rng.random(9))
    c = coefficients_pc(f)
    np.testing.assert_allclose(synthesize_pc(c).values, f.values, atol=1e-12)
    for n in range(9):
        np.testing.assert_allclose(series_eval(c, ((n + 0.5) / 9,)), f.values[n], atol=1e-12)


def test_l2_l1_embedding():
    params = SpaceParams(2, 2, 1.0, 2, 2)
    rng = np.random.default_rng(2)
    C = point_evaluation_constant(params)
    for _ in range(5):
        f = PiecewiseConstant(2, 2, rng.normal(size=(4, 4)))
        c = coefficients_pc(f, params)
        g = synthesize_pc(c, level=2)
        assert g.lp_norm(2) ** 2 <= C**2 * g.lp_norm(1) * haar_norm(c) * (1 + 1e-12)


@pytest.mark.parametrize("stronger,weaker", [
    ((4, 1), (2, 2)),
    (("inf", 2), (2, 2)),
    ((2, 1), (2, "inf")),
    (("inf", 1), (1, "inf")),
])
def test_haar_norm_grows_with_p_and_shrinks_with_q(stronger, weaker):
    values = np.random.default_rng(5).integers(-4, 5, size=(9, 9))
    f = PiecewiseConstant(3, 2, values)
    strong = haar_norm(coefficients_pc(f, SpaceParams(3, 2, 0.8, *stronger)))
    weak = haar_norm(coefficients_pc(f, SpaceParams(3, 2, 0.8, *weaker)))
    assert strong >= weak * (1 - 1e-12)


def test_piecewise_constant_validation():
    with pytest.raises(ValidationError):
        PiecewiseConstant(2, 2, np.zeros((4, 3)))
    f = PiecewiseConstant.indicator(3, 2, (1, 0), (2, 0))
    assert f.integral() == Fraction(1, 3)
    assert (f + f * 2).integral() == 1
