import csv
import io
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convasym.asymptotics import (
    compare_direct_vs_expansion,
    error_identity,
    expansion_complex,
    expansion_eval,
    fit_log_slope,
    ft_consistency,
    laplace_density,
    laplace_S1_check,
    s1_prime,
    s1_series,
)
from convasym.convolution import f_direct
from convasym.errors import DomainError, InvalidInputError, ResourceLimitError
from convasym.heathbrown import delta_burgess
from convasym.zeros import ZeroRecord

from .conftest import FIRST_ZERO


def pair(k):
    return [ZeroRecord(k, 1, 0.0, 0, "test"), ZeroRecord(-k.conjugate(), 1, 0.0, 0, "test")]


def test_empty_expansion():
    assert expansion_eval([], 2.0) == 0.5


@settings(max_examples=80, deadline=None)
@given(st.floats(0.5, 500), st.floats(-20, -0.01), st.floats(0.05, 5))
def test_pair_expansion_closed_form(re, im, x):
    k = complex(re, im)
    expect = (1 + 2 * math.exp(im * x) * math.cos(re * x)) / x
    assert expansion_eval(pair(k), x) == pytest.approx(expect, abs=1e-12)
    assert abs(expansion_complex(pair(k), x)[0].imag) < 1e-12


def test_expansion_needs_pairs():
    with pytest.raises(InvalidInputError):
        expansion_eval(pair(FIRST_ZERO)[:1], 1.0)
    with pytest.raises(InvalidInputError):
        expansion_eval([], 0.0)


def test_large_x_oscillation_amplitude(zeros_c6):
    x = np.linspace(3.0, 3.2, 50)
    dev = np.abs(x * expansion_eval(zeros_c6, x) - 1)
    assert np.all(dev <= 2 * np.exp(FIRST_ZERO.imag * x) + 1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-8, -0.5), st.floats(-3, 3))
def test_slope_fit_exact_exponential(slope, icpt):
    x = np.linspace(1, 2.5, 301)
    fit = fit_log_slope(x, np.exp(icpt + slope * x), noise=1e-30)
    assert fit.slope == pytest.approx(slope, abs=1e-9)


def test_compare_report_shape(bd, zeros_c6):
    xs = np.arange(1.0, 3.01, 0.25)
    rep = compare_direct_vs_expansion(bd, 6.0, xs, zeros=zeros_c6, fit_points=201)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["x", "f_direct", "expansion", "residual", "scaled_residual"]
    assert len(rows) == xs.size + 1
    back = np.array(rows[1:], dtype=float)
    assert np.array_equal(back[:, 1], rep.f_direct)
    assert np.allclose(rep.scaled_residual, rep.residual * np.exp(6 * xs))
    # the next zeros sit below Im = -8, so the residual decays faster than e^{-6x}
    assert rep.slope <= -6 + 0.9


def test_single_term_region_report(bd):
    rep = compare_direct_vs_expansion(bd, 2.0, [0.2, 0.25], zeros=[])
    assert rep.f_direct[0] == 10.0
    assert rep.residual[0] == pytest.approx(0.2 * 10.0 - 1.0)


def test_error_identity(bd, zeros_c6):
    xs = [1.0, 1.5, 2.0, 2.5]
    rep, E, bound = error_identity(bd, 6.0, xs, zeros=zeros_c6)
    gap = np.abs(rep.residual - E.real * np.exp(-6.0 * rep.x))
    assert np.max(gap) < 1e-6
    assert np.max(np.abs(E.imag)) < 1e-10
    assert np.all(np.abs(E) <= bound / (2 * math.pi))


def test_laplace_density_oracles(bd):
    assert laplace_density(bd, 0) == pytest.approx(1.0, abs=1e-14)
    v = laplace_density(bd, 1)
    assert 0 < v.real < 1 and v.imag == 0
    with mp.workdps(30):
        kap = mp.mpf(0.25) / mp.sqrt(mp.e)
        for s in (0.5, 2.0, 1 + 1j):
            exact = complex(mp.quad(lambda t: 2 / t * mp.exp(-mp.mpc(s) * t), [kap, 0.25]))
            assert abs(laplace_density(bd, s) - exact) < 1e-13
    for s in (0.5, 1 + 1j, 3 - 2j):
        assert ft_consistency(bd, s) < 1e-12


def test_s1_values(bd):
    assert s1_series(bd, 0.2) == pytest.approx(math.log(0.8) + 0.5, abs=1e-12)
    assert s1_series(bd, 0.25) == pytest.approx(0.5, abs=1e-12)
    assert s1_series(bd, 0.1) == 0.0


def test_s1_log_on_support(bd):
    th = np.linspace(bd.a, bd.b, 100)
    assert np.max(np.abs(s1_series(bd, th) - np.log(th / bd.a))) < 1e-6


def test_s1_equals_delta_below_twice_a(bd):
    th = np.linspace(0, 2 * bd.a, 100, endpoint=False)
    assert np.max(np.abs(s1_series(bd, th) - delta_burgess(th))) < 1e-8


def test_custom_delta_route_agrees(bd):
    th = np.linspace(0.3, 0.9, 25)
    a = s1_series(bd, th)
    b = s1_series(bd, th, delta_fn=delta_burgess)
    assert np.max(np.abs(a - b)) < 1e-10


def test_s1_nondecreasing(bd):
    th = np.linspace(0, 1.2, 400)
    assert np.all(np.diff(s1_series(bd, th)) >= -1e-9)


def test_s1_prime(bd):
    assert s1_prime(bd, 2.0) == pytest.approx(0.5 * f_direct(bd, 2.0))
    eps = 1e-3
    cd = (s1_series(bd, 2 + eps) - s1_series(bd, 2 - eps)) / (2 * eps)
    assert s1_prime(bd, 2.0) == pytest.approx(cd, abs=1e-5)
    assert s1_prime(bd, 6.0) == pytest.approx(1 / 12, abs=1e-6)
    with pytest.raises(DomainError):
        s1_prime(bd, 0.2)


@pytest.mark.parametrize("s", [1.0, 2.0])
def test_laplace_identity(bd, s):
    res = laplace_S1_check(bd, s)
    assert abs(res.lhs - res.rhs) < 1e-6 * abs(res.rhs)


def test_laplace_explicit_cutoff(bd):
    res = laplace_S1_check(bd, 2.0, theta_max=20)
    assert abs(res.lhs - res.rhs) < 1e-6


def test_laplace_region_checks(bd):
    with pytest.raises(InvalidInputError):
        laplace_S1_check(bd, -1.0)
    # Re s near 0 pushes the cutoff past the grid cap
    with pytest.raises(ResourceLimitError):
        laplace_S1_check(bd, 1e-9)
