from fractions import Fraction

import numpy as np
import pytest

from ftl_haar_qmc.errors import FormatError
from ftl_haar_qmc.formats import (
    format_coefficients,
    format_matrices,
    format_points,
    parse_coefficients,
    parse_matrices,
    parse_points,
    pc_from_bytes,
    pc_to_bytes,
    read_coefficients,
    read_pc,
    read_points,
    write_coefficients,
    write_pc,
    write_points,
)
from ftl_haar_qmc.haar import (
    CoeffMap,
    PiecewiseConstant,
    SpaceParams,
    Surd,
    WaveletIndex,
    coefficients_pc,
    synthesize_pc,
)
from ftl_haar_qmc.nets import PointSet, faure_matrices, faure_net, van_der_corput


def test_format_points():
    text = format_points(van_der_corput(2, 2))
    assert text == "2 2 1 4\n00\n10\n01\n11\n"


def test_format_points_zero_precision():
    assert format_points(van_der_corput(3, 0)) == "3 0 1 1\n0\n"
    assert parse_points("3 0 1 1\n0\n").numerators.tolist() == [[0]]


def test_parse_points():
    P = parse_points("# a comment\n3 2 2 3\n00 12\n21 02  # trailing\n\n22 22\n")
    assert P.base == 3
    assert P.numerators.tolist() == [[0, 5], [7, 2], [8, 8]]


def test_points_survive_files(tmp_path):
    P = faure_net(5, 2, 3)
    write_points(P, tmp_path / "faure.txt")
    Q = read_points(tmp_path / "faure.txt")
    np.testing.assert_array_equal(Q.numerators, P.numerators)


@pytest.mark.parametrize("text,message", [
    ("", "empty"),
    ("2 2 1\n", "expected 4 header fields"),
    ("2 2 1 2\n00\n", "announces 2 points"),
    ("2 2 1 1\n012\n", "does not have 2 digits"),
    ("2 2 1 1\n02\n", "not a base-2 digit string"),
    ("2 2 2 1\n01\n", "expected 2 coordinates"),
    ("40 1 1 1\n0\n", "bases 2..36"),
])
def test_parse_points_errors(text, message):
    with pytest.raises(FormatError, match=message):
        parse_points(text, source="pts.txt")


def test_parse_points_error_has_line_number():
    with pytest.raises(FormatError, match=r"^pts.txt:3: "):
        parse_points("2 1 1 2\n0\n2\n", source="pts.txt")


def test_matrices_text():
    G = faure_matrices(3, 3, 2)
    text = format_matrices(G)
    assert text.splitlines()[0] == "3 3 2"
    np.testing.assert_array_equal(parse_matrices(text).matrices, G.matrices)


def test_parse_matrices_errors():
    with pytest.raises(FormatError, match="expected 2 blocks"):
        parse_matrices("2 2 2\n1 0\n0 1\n")
    with pytest.raises(FormatError, match="base-2 digits"):
        parse_matrices("2 2 1\n1 2\n0 1\n")
    with pytest.raises(FormatError, match="expected 2 digits"):
        parse_matrices("2 2 1\n1\n0 1\n")


def test_coefficient_text_keeps_exact_values():
    params = SpaceParams(2, 1, 1.0)
    c = coefficients_pc(PiecewiseConstant(2, 1, np.array([0, 1])), params)
    text = format_coefficients(c)
    assert text.splitlines()[0] == "2 1"
    assert "1 0 0 0+-1/4*sqrt" in text
    back = parse_coefficients(text, params)
    assert dict(back) == dict(c)


def test_coefficients_survive_files(tmp_path):
    params = SpaceParams(2, 2, 1.0)
    f = PiecewiseConstant(2, 2, np.arange(16, dtype=np.int64).reshape(4, 4) % 3)
    write_coefficients(coefficients_pc(f, params), tmp_path / "f.coef")
    back = read_coefficients(tmp_path / "f.coef", params)
    np.testing.assert_allclose(synthesize_pc(back, level=2).values, f.values.astype(float), atol=1e-12)


def test_coefficient_values():
    params = SpaceParams(3, 1, 1.0)
    c = parse_coefficients("3 1\n0 0 0 -1/2\n1 0 2 0.25\n1 0 1 -1/3+2*sqrt\n", params)
    assert c[WaveletIndex.zero(3, 1)] == Fraction(-1, 2)
    assert c[WaveletIndex(3, (1,), (0,), (2,))] == 0.25
    assert c[WaveletIndex(3, (1,), (0,), (1,))] == Surd(Fraction(-1, 3), 2, 3)


def test_parse_coefficients_errors():
    with pytest.raises(FormatError, match="expected 4 fields"):
        parse_coefficients("2 1\n0 0 1\n")
    with pytest.raises(FormatError, match="duplicate index"):
        parse_coefficients("2 1\n1 0 1 1\n1 0 1 2\n")
    with pytest.raises(FormatError, match="malformed"):
        parse_coefficients("2 1\n1 0 x 1\n")
    with pytest.raises(FormatError, match="expected b=3"):
        parse_coefficients("2 1\n", SpaceParams(3, 1, 1.0))
    assert len(CoeffMap(SpaceParams(2, 1, 1.0))) == 0


@pytest.mark.parametrize("values", [
    np.arange(16, dtype=np.int64).reshape(4, 4) - 5,
    np.linspace(-1.0, 1.0, 9),
])
def test_piecewise_constant_binary(values, tmp_path):
    b = 2 if values.shape[0] == 4 else 3
    f = PiecewiseConstant(b, 2, values)
    data = pc_to_bytes(f)
    assert data[:4] == b"HQPC"
    write_pc(f, tmp_path / "f.bin")
    g = read_pc(tmp_path / "f.bin")
    assert (g.base, g.level, g.s) == (f.base, f.level, f.s)
    np.testing.assert_array_equal(g.values, f.values)
    assert g.values.dtype == f.values.dtype


def test_piecewise_constant_binary_errors():
    exact = PiecewiseConstant(2, 1, np.array([Fraction(1, 2), Fraction(1)], dtype=object))
    with pytest.raises(FormatError):
        pc_to_bytes(exact)
    with pytest.raises(FormatError, match="not a piecewise-constant file"):
        pc_from_bytes(b"nope")
    data = pc_to_bytes(PiecewiseConstant(2, 1, np.array([1, 2])))
    with pytest.raises(FormatError, match="unknown cell type"):
        pc_from_bytes(data[:4] + b"c" + data[5:])
    with pytest.raises(FormatError, match="expected 2 cells"):
        pc_from_bytes(data[:-1])


def test_format_points_pads_digits():
    P = PointSet(2, 3, np.array([[1, 2], [3, 4]]))
    assert format_points(P).splitlines() == ["2 3 2 2", "001 010", "011 100"]
