import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from convasym.convolution import (
    GridFunction,
    default_step,
    divisions_for,
    f_direct,
    mass_defects,
    nfold,
    sample,
    trapezoid_convolve,
)
from convasym.density import evaluate, polynomial_pieces, uniform
from convasym.errors import InvalidInputError, ResourceLimitError


def pair_density_oracle(d, x):
    lo, hi = max(d.a, x - d.b), min(d.b, x - d.a)
    if hi <= lo:
        return 0.0
    return integrate.quad(lambda t: evaluate(d, t) * evaluate(d, x - t), lo, hi, epsabs=1e-14, epsrel=1e-13)[0]


def test_triangle_peak():
    d = uniform(0.5, 1.5)
    g = nfold(d, 2, 1.0 / 64)
    assert g(2.0) == pytest.approx(1.0, abs=1e-14)
    assert g.x0 == pytest.approx(1.0)
    assert g.x_end == pytest.approx(3.0)


def test_n1_samples_exact(bd):
    h = default_step(bd)
    g = nfold(bd, 1, h)
    assert np.array_equal(g.values[:-1], evaluate(bd, g.nodes[:-1]))
    assert g.values[-1] == 8.0


def test_step_must_divide(bd):
    with pytest.raises(InvalidInputError):
        nfold(bd, 2, (bd.b - bd.a) / 100.5)
    with pytest.raises(InvalidInputError):
        nfold(bd, 0)
    assert divisions_for(bd, (bd.b - bd.a) / 300) == 300


def test_resource_cap(bd, monkeypatch):
    monkeypatch.setenv("CONVASYM_MAX_GRID", "1000")
    with pytest.raises(ResourceLimitError):
        nfold(bd, 5)


def test_mass_conservation_second_order(bd):
    h = default_step(bd)
    coarse = mass_defects(bd, h, 10)
    fine = mass_defects(bd, h / 2, 10)
    assert np.all(coarse < 1e-6)
    assert np.allclose(coarse / fine, 4.0, rtol=0.01)


def test_support_exact(bd):
    g = nfold(bd, 3)
    assert g.x0 == pytest.approx(3 * bd.a)
    assert g.x_end == pytest.approx(3 * bd.b)
    assert g(3 * bd.a - 1e-3) == 0.0
    assert g(3 * bd.b + 1e-3) == 0.0


def test_pair_term_against_quadrature_oracle(bd):
    oracle = pair_density_oracle(bd, 0.35) / 2
    assert f_direct(bd, 0.35) == pytest.approx(oracle, abs=1e-6)
    assert f_direct(bd, 0.35, richardson=True) == pytest.approx(oracle, abs=1e-11)


@pytest.mark.parametrize("x", [0.33, 0.41, 0.47])
def test_off_lattice_interpolation(bd, x):
    g = nfold(bd, 2)
    assert g(x) == pytest.approx(pair_density_oracle(bd, x), abs=2e-6)


def test_single_term_region(bd):
    assert f_direct(bd, 0.2) == 10.0
    assert f_direct(bd, 0.1) == 0.0


def test_fd_bounded_and_decays(bd):
    xs = np.linspace(5 * bd.a, 40 * bd.a, 200)
    vals = xs * f_direct(bd, xs)
    assert np.all(np.isfinite(vals))
    assert abs(vals[-1] - 1) < 1e-3
    assert np.max(np.abs(vals[xs > 4] - 1)) < np.max(np.abs(vals[xs < 1.5] - 1))


def test_richardson_halving_ratio(bd):
    xs = np.linspace(2 * bd.a, 2 * bd.b, 300)
    v = [nfold(bd, 2, (bd.b - bd.a) / m)(xs) for m in (1024, 2048, 4096)]
    ratio = np.max(np.abs(v[0] - v[1])) / np.max(np.abs(v[1] - v[2]))
    assert 3.5 < ratio < 4.5


def test_fourier_duality(bd):
    from convasym.spectral import ft

    k = np.linspace(-50, 50, 11)
    g = nfold(bd, 3, (bd.b - bd.a) / 4096)
    exact = ft(bd, k) ** 3
    assert np.max(np.abs(g.fourier(k) - exact) / np.abs(exact)) < 1e-6


def test_discontinuous_density_midpoint_values():
    d = polynomial_pieces([(1.0, 1.5, 0.5), (1.5, 2.0, 1.5)])
    g = sample(d, 1.0 / 64)
    assert g(1.5, cubic=False) == pytest.approx(1.0)
    assert g.mass() == pytest.approx(1.0, abs=1e-14)


def _grid(vals, h, x0=0.0):
    return GridFunction(x0, h, np.asarray(vals, dtype=float), len(vals))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0, 10), min_size=1, max_size=40),
    st.lists(st.floats(0, 10), min_size=1, max_size=40),
)
def test_trapezoid_convolution_brute_force(f, g):
    h = 0.125
    out = trapezoid_convolve(_grid(f, h), _grid(g, h))
    F, G = np.array(f), np.array(g)
    for m in range(out.values.size):
        js = [j for j in range(F.size) if 0 <= m - j < G.size]
        vals = [F[j] * G[m - j] for j in js]
        if len(vals) == 1:
            expect = 0.0
        else:
            expect = h * (sum(vals) - 0.5 * vals[0] - 0.5 * vals[-1])
        assert out.values[m] == pytest.approx(expect, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0, 10), min_size=2, max_size=30),
    st.lists(st.floats(0, 10), min_size=2, max_size=30),
)
def test_trapezoid_convolution_commutes(f, g):
    a = trapezoid_convolve(_grid(f, 0.5), _grid(g, 0.5)).values
    b = trapezoid_convolve(_grid(g, 0.5), _grid(f, 0.5)).values
    assert np.allclose(a, b, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.0, 1.0))
def test_cubic_interpolation_reproduces_cubics(coeffs, frac):
    h = 0.1
    x = np.arange(30) * h
    g = GridFunction(0.0, h, np.polynomial.polynomial.polyval(x, coeffs), 30)
    q = 0.5 + frac * 2.0
    assert g(q) == pytest.approx(np.polynomial.polynomial.polyval(q, coeffs), abs=1e-9)


def test_fft_path_matches_direct(bd, monkeypatch):
    import convasym.convolution as conv

    h = default_step(bd)
    direct = nfold(bd, 3, h).values
    monkeypatch.setattr(conv, "_DIRECT_LIMIT", 0)
    fast = nfold(bd, 3, h).values
    assert np.max(np.abs(direct - fast)) < 1e-12 * np.max(direct)
