import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from convasym.density import (
    Piece,
    Polynomial,
    Reciprocal,
    burgess,
    dump_piecewise,
    evaluate,
    from_pieces,
    load_piecewise,
    make_density,
    moments,
    polynomial_pieces,
    quadrature_moments,
    uniform,
    validate,
)
from convasym.errors import InvalidInputError


def test_burgess_support_and_values(bd):
    assert bd.a == pytest.approx(0.25 / math.sqrt(math.e), rel=1e-15)
    assert bd.a == pytest.approx(0.1516326, abs=1e-7)
    assert bd.b == 0.25
    assert evaluate(bd, 0.25) == 8.0
    assert evaluate(bd, 0.2) == 10.0
    assert evaluate(bd, 0.1) == 0.0
    assert evaluate(bd, 0.3) == 0.0


def test_uniform_values(ud):
    assert evaluate(ud, 1.5) == 1.0
    assert moments(ud) == pytest.approx((1.5, 7.0 / 3.0), rel=1e-15)


def test_burgess_moments_closed_form(bd):
    lam, kap = 0.25, 0.25 / math.sqrt(math.e)
    d1, d2 = moments(bd)
    assert d1 == pytest.approx(2 * (lam - kap), rel=1e-15)
    assert d1 == pytest.approx((1 - math.exp(-0.5)) / 2, rel=1e-15)
    assert d2 == pytest.approx(lam**2 - kap**2, rel=1e-15)
    assert d1 == pytest.approx(0.1967347, abs=1e-7)
    # oracle: scipy adaptive quadrature, independent of both evaluators
    q1 = integrate.quad(lambda x: 2.0, kap, lam, epsabs=1e-14)[0]
    q2 = integrate.quad(lambda x: 2.0 * x, kap, lam, epsabs=1e-14)[0]
    assert d1 == pytest.approx(q1, abs=1e-13)
    assert d2 == pytest.approx(q2, abs=1e-13)


@pytest.mark.parametrize("d", [burgess(0.25), burgess(0.125), uniform(1, 2), uniform(0.5, 1.5)])
def test_quadrature_moments_match_closed_forms(d):
    mass, q1, q2 = quadrature_moments(d)
    assert abs(mass - 1) < 1e-10
    assert abs(q1 - d.d1) < 1e-10
    assert abs(q2 - d.d2) < 1e-10
    assert d.d2 - d.d1**2 > 0


def test_validate_burgess_passes(bd):
    rep = validate(bd)
    assert rep.passed
    assert rep.normalization_defect < 1e-12
    assert not rep.hypothesis_violating


def test_validate_reports_bad_normalization():
    d = from_pieces([Piece(1.0, 2.0, Polynomial((0.9,)))], strict=False)
    rep = validate(d)
    assert "normalization" in rep.failures()


def test_validate_reports_endpoint_zero():
    # 2 (2 - x) on [1, 2] has mass 1 and vanishes at b
    d = from_pieces([Piece(1.0, 2.0, Polynomial((4.0, -2.0)))], strict=False)
    rep = validate(d)
    assert rep.failures() == ["endpoint"]


def test_validate_flags_jumps():
    d = polynomial_pieces([(1.0, 1.5, 0.5), (1.5, 2.0, 1.5)])
    rep = validate(d)
    assert rep.hypothesis_violating
    assert "continuity" in rep.failures()


def test_strict_construction_rejects_bad_inputs():
    with pytest.raises(InvalidInputError):
        polynomial_pieces([(1.0, 2.0, 0.9)])
    with pytest.raises(InvalidInputError):
        polynomial_pieces([(1.0, 2.0, 3.0, -2.0)])  # negative near b
    with pytest.raises(InvalidInputError):
        uniform(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        burgess(-1.0)
    with pytest.raises(InvalidInputError):
        polynomial_pieces([(1.0, 1.5, 1.0), (1.6, 2.0, 1.0)])


def test_polynomial_file_matches_uniform(tmp_path, ud):
    path = tmp_path / "u.txt"
    path.write_text("piecewise-poly v1\n# constant\n1,2,1\n")
    d = load_piecewise(path)
    xs = np.linspace(0.5, 2.5, 101)
    assert np.array_equal(evaluate(d, xs), evaluate(ud, xs))
    assert moments(d) == pytest.approx(moments(ud), rel=1e-15)
    assert make_density(f"file:{path}").d1 == pytest.approx(1.5)


def test_file_normalize_flag(tmp_path):
    path = tmp_path / "n.txt"
    path.write_text("piecewise-poly v1\n--normalize\n1,2,5\n")
    d = load_piecewise(path)
    assert evaluate(d, 1.5) == pytest.approx(1.0)
    path.write_text("piecewise-poly v1\n1,2,5\n")
    assert evaluate(load_piecewise(path, normalize=True), 1.2) == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        load_piecewise(path)


def test_file_header_required(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1,2,1\n")
    with pytest.raises(InvalidInputError):
        load_piecewise(path)


def test_dump_roundtrip(tmp_path):
    d = polynomial_pieces([(1.0, 1.5, 0.25, 0.5), (1.5, 2.0, 1.75, -0.5)], normalize=True)
    path = tmp_path / "d.txt"
    path.write_text(dump_piecewise(d))
    assert load_piecewise(path).pieces == d.pieces


def test_make_density_grammar():
    assert make_density("burgess").b == 0.25
    assert make_density("burgess:lambda=0.125").b == 0.125
    assert make_density("uniform:a=1,b=3").d1 == pytest.approx(2.0)
    for bad in ("gauss", "uniform:a=1", "burgess:mu=1", "uniform:a=x,b=2", "file:"):
        with pytest.raises(InvalidInputError):
            make_density(bad)


def test_cumulative_closed_form(bd):
    xs = np.array([0.1, 0.2, 0.25, 1.0])
    expect = [0.0, 2 * math.log(0.2 / bd.a), 1.0, 1.0]
    assert np.allclose(bd.cumulative(xs), expect, atol=1e-15)


def test_derivatives(bd):
    assert bd.derivative(0.2) == pytest.approx(-2 / 0.04)
    assert bd.derivative(0.2, 2) == pytest.approx(4 / 0.008)
    assert Reciprocal(2.0).derivative(0.5, 3) == pytest.approx(-2 * 6 / 0.5**4)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.1, 5.0))
def test_uniform_family_invariants(a, width):
    d = uniform(a, a + width)
    mass, m1, m2 = quadrature_moments(d)
    assert abs(mass - 1) < 1e-10
    assert m1 == pytest.approx((2 * a + width) / 2, rel=1e-10)
    assert d.d2 - d.d1**2 == pytest.approx(width**2 / 12, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 10.0))
def test_burgess_family_normalized(lam):
    d = burgess(lam)
    assert validate(d).normalization_defect < 1e-12
    assert d.d1 == pytest.approx(2 * (lam - d.a), rel=1e-12)
