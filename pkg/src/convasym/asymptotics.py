"""The zero expansion of ``x F_d(x)`` checked against the direct series, and
the Laplace-side identities for the series ``S_1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import special

from .convolution import (
    GridFunction,
    default_step,
    divisions_for,
    f_direct,
    max_grid,
    nfold_ladder,
    sample,
    trapezoid_convolve,
    _sumset,
)
from .density import Density
from .errors import DomainError, InvalidInputError, OutsideRegionError, ResourceLimitError
from .quadrature import DEFAULT_QUAD, QuadratureSpec, panel_rule
from .spectral import LineSamples, error_term_E, fc_l1_bound, fc_samples, ft
from .zeros import StripSpec, ZeroRecord, enumerate_strip, mirror_defect, zero_free_radius

PAIRING_TOL = 1e-9
REALITY_TOL = 1e-10


# -- expansion ----------------------------------------------------------------


def expansion_complex(zeros: Sequence[ZeroRecord], x) -> np.ndarray:
    """``(1 + sum m(k) e^{-ikx}) / x`` before projection to the real axis."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise InvalidInputError("expansion needs x > 0")
    total = np.ones(xs.size, dtype=complex)
    for z in zeros:
        total += z.multiplicity * np.exp(-1j * z.k * xs)
    return total / xs


def expansion_eval(zeros: Sequence[ZeroRecord], x):
    """Real value of the zero expansion; requires a conjugate-closed zero list."""
    if mirror_defect(zeros) > PAIRING_TOL:
        raise InvalidInputError("zero list is not closed under k -> -conj(k)")
    val = expansion_complex(zeros, x)
    scale = np.maximum(1.0, np.abs(val))
    if np.any(np.abs(val.imag) >= REALITY_TOL * scale):
        raise InvalidInputError("expansion has a non-negligible imaginary part")
    out = val.real
    return float(out[0]) if np.ndim(x) == 0 else out


# -- slope fitting --------------------------------------------------------------


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    window: tuple[float, float]
    points: int


def fit_log_slope(x: np.ndarray, r: np.ndarray, noise: float) -> SlopeFit:
    """Least-squares slope of ``log|r|`` against ``x``.

    Only samples with ``|r| > 100 * noise`` are used, restricted to the
    longest run of such samples.  When the residual oscillates the fit uses
    the local maxima of ``|r|`` (its envelope); otherwise all samples.
    """
    x = np.asarray(x, dtype=float)
    mag = np.abs(np.asarray(r, dtype=float))
    ok = mag > 100.0 * noise
    if ok.sum() < 2:
        return SlopeFit(float("nan"), float("nan"), (float("nan"), float("nan")), 0)
    # longest contiguous run above the noise threshold
    best, start = (0, 0), None
    for i, flag in enumerate(np.append(ok, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    xs, ms = x[best[0]:best[1]], mag[best[0]:best[1]]
    peaks = np.nonzero((ms[1:-1] >= ms[:-2]) & (ms[1:-1] >= ms[2:]))[0] + 1
    if peaks.size >= 3:
        xs, ms = xs[peaks], ms[peaks]
    slope, intercept = np.polyfit(xs, np.log(ms), 1)
    return SlopeFit(float(slope), float(intercept), (float(xs[0]), float(xs[-1])), int(xs.size))


def extrapolated_mass_noise(d: Density, h: float, nmax: int) -> float:
    """Noise gauge: worst ``|mass - 1|`` of Richardson-combined lattice masses."""
    worst = 0.0
    coarse = [g.mass() for _, g in nfold_ladder(d, h, nmax)]
    fine = [g.mass() for _, g in nfold_ladder(d, h / 2, nmax)]
    for mc, mf in zip(coarse, fine):
        worst = max(worst, abs((4 * mf - mc) / 3 - 1.0))
    return worst + 1e-13


# -- report -------------------------------------------------------------------


@dataclass
class ExpansionReport:
    x: np.ndarray
    f_direct: np.ndarray
    expansion: np.ndarray
    residual: np.ndarray
    scaled_residual: np.ndarray
    c: float
    zeros: list[ZeroRecord]
    h: float
    U: float
    noise: float
    fit: SlopeFit
    meta: dict = field(default_factory=dict)

    @property
    def slope(self) -> float:
        return self.fit.slope

    def rows(self) -> list[tuple[float, float, float, float, float]]:
        return list(zip(*(map(float, col) for col in (self.x, self.f_direct, self.expansion, self.residual, self.scaled_residual))))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "f_direct", "expansion", "residual", "scaled_residual"])
        for row in self.rows():
            w.writerow([format(v, ".17g") for v in row])
        return buf.getvalue()


def strip_zeros(d: Density, c: float, R: Optional[float] = None, q: QuadratureSpec = DEFAULT_QUAD) -> list[ZeroRecord]:
    """All zeros with ``-c < Im k < 0``; ``R`` defaults to the zero-free radius."""
    R = zero_free_radius(d, c) if R is None else R
    return enumerate_strip(d, StripSpec(c=c, R=R), q)


def compare_direct_vs_expansion(
    d: Density,
    c: float,
    xs: Sequence[float],
    h: Optional[float] = None,
    zeros: Optional[Sequence[ZeroRecord]] = None,
    fit_points: int = 601,
    q: QuadratureSpec = DEFAULT_QUAD,
) -> ExpansionReport:
    """Rows ``x, F_d(x), expansion, x F - x expansion, (x F - x expansion) e^{cx}``.

    Raises :class:`LineVanishingError` when ``|1 - ft|`` is sampled below
    tolerance on ``Im k = -c``.  ``F_d`` is the Richardson-extrapolated lattice series.  The slope of
    ``log|residual|`` is fitted on a dense grid over the range of ``xs``.
    """
    xs = np.sort(np.asarray(xs, dtype=float))
    if xs.size == 0 or np.any(xs <= 0):
        raise InvalidInputError("xs must be a nonempty list of positive numbers")
    if not c > 0:
        raise InvalidInputError("c must be positive")
    h = default_step(d) if h is None else h
    divisions_for(d, h)
    # the line Im k = -c must avoid zeros; beyond the zero-free radius it does
    fc_samples(d, c, max(zero_free_radius(d, c), 1.0), q)
    zeros = strip_zeros(d, c, q=q) if zeros is None else [z for z in zeros if -c < z.k.imag < 0]
    dense = np.linspace(xs[0], xs[-1], fit_points) if xs[-1] > xs[0] else xs.copy()
    grid = np.concatenate((xs, dense))
    fd = f_direct(d, grid, h, richardson=True)
    ex = expansion_eval(zeros, grid)
    resid = grid * fd - grid * ex
    nmax = max(1, int(math.floor(xs[-1] / d.a)))
    noise = extrapolated_mass_noise(d, h, min(nmax, 40)) * float(xs[-1])
    n = xs.size
    fit = fit_log_slope(grid[n:], resid[n:], noise)
    return ExpansionReport(
        xs, fd[:n], ex[:n], resid[:n], resid[:n] * np.exp(c * xs), c, list(zeros), h, float("nan"), noise, fit,
        meta={"density": d.name},
    )


def error_identity(
    d: Density,
    c: float,
    xs: Sequence[float],
    h: Optional[float] = None,
    U: float = 2000.0,
    zeros: Optional[Sequence[ZeroRecord]] = None,
    q: QuadratureSpec = DEFAULT_QUAD,
):
    """``(report, E(c, x), ||f_c||_1)``: the pieces of ``x F - x expansion = E e^{-cx}``."""
    report = compare_direct_vs_expansion(d, c, xs, h, zeros, q=q)
    samples = fc_samples(d, c, U, q, x_max=float(np.max(report.x)))
    E = error_term_E(d, c, report.x, samples=samples)
    bound = fc_l1_bound(d, c, samples=samples)
    report.U = U
    return report, E, bound


# -- Laplace side ---------------------------------------------------------------


def laplace_density(d: Density, s, order: int = 20) -> complex:
    """``int e^{-s t} d(t) dt`` by Gauss-Legendre panels over each piece."""
    s = complex(s)
    if abs(s.real) * d.b > 700:
        raise InvalidInputError("|Re s| * b too large")
    total = 0.0 + 0.0j
    for p in d.pieces:
        panels = max(8, int(math.ceil(abs(s) * (p.hi - p.lo) / math.pi)))
        x, w = panel_rule(np.linspace(p.lo, p.hi, panels + 1), order)
        total += complex(np.sum(w * p.evaluator.value(x) * np.exp(-s * x)))
    return total


def default_delta(d: Density) -> Callable[[np.ndarray], np.ndarray]:
    """``theta -> (1/2) int_0^theta d``."""

    def delta(theta):
        return 0.5 * np.asarray(d.cumulative(theta), dtype=float)

    return delta


def _delta_grid(d: Density, h: float, delta_fn, length: int) -> GridFunction:
    m = divisions_for(d, h)
    j = np.arange(length)
    x = d.a + (d.b - d.a) * j / m
    vals = np.atleast_1d(np.asarray(delta_fn(x), dtype=float)).copy()
    # open-ended: the support continues past the stored samples
    return GridFunction(d.a, h, vals, length + 10**12)


def _series_terms(d: Density, h: float, delta_fn, theta_max: float):
    """Yield ``(n, T_n)`` with ``T_n = delta * d^{*(n-1)}`` on ``[n a, min(n b, theta_max)]``."""
    nmax = int(math.floor(theta_max / d.a + 1e-12))
    if nmax < 1:
        return
    m = divisions_for(d, h)
    length = int(math.ceil(nmax * m)) + 8
    if length > max_grid():
        raise ResourceLimitError(f"series grid of {length} nodes exceeds cap {max_grid()}")
    delta = _delta_grid(d, h, delta_fn, length)
    first = GridFunction(d.a, h, delta.values[: m + 1].copy(), m + 1, d.breakpoints.copy())
    yield 1, first
    for n_prev, g in nfold_ladder(d, h, max(nmax - 1, 1)):
        n = n_prev + 1
        if n > nmax:
            break
        top = min(n * d.b, theta_max)
        t = trapezoid_convolve(g, delta, xmax=top)
        keep = min(t.values.size, m * n + 1)
        kinks = _sumset(g.kinks, d.breakpoints, n * d.b)
        yield n, GridFunction(t.x0, h, t.values[:keep].copy(), m * n + 1, kinks)


def s1_series(d: Density, theta, h: Optional[float] = None, delta_fn=None):
    """``S_1(theta) = sum_n (delta * d^{*(n-1)})(theta) / n`` (vectorized).

    The ``n = 1`` term is ``delta(theta)`` itself; terms with ``n a > theta``
    vanish.  Beyond ``n b`` the ``n``-th convolution equals the plateau value
    ``delta(b)`` because ``d^{*(n-1)}`` has unit mass.
    """
    h = default_step(d) if h is None else h
    delta_fn = default_delta(d) if delta_fn is None else delta_fn
    scalar = np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.atleast_1d(np.asarray(delta_fn(th), dtype=float)).copy()
    out[th < 0] = 0.0
    plateau = float(delta_fn(np.array([d.b]))[0])
    tmax = float(th.max()) if th.size else 0.0
    for n, t in _series_terms(d, h, delta_fn, tmax):
        if n == 1:
            continue
        on_grid = (th >= n * d.a) & (th <= n * d.b)
        beyond = th > n * d.b
        if on_grid.any():
            out[on_grid] += t(th[on_grid]) / n
        out[beyond] += plateau / n
    return float(out[0]) if scalar else out


def s1_prime(d: Density, theta, h: Optional[float] = None, richardson: bool = False):
    """``S_1'(theta) = F_d(theta) / 2`` for ``theta > b``."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(th <= d.b):
        raise DomainError(f"S_1' is only available for theta > b = {d.b!r}")
    val = 0.5 * np.asarray(f_direct(d, th, h, richardson=richardson))
    return float(val[0]) if np.ndim(theta) == 0 else val


def laplace_theta_max(d: Density, s: complex, floor: float = 1e-9) -> float:
    """Smallest ``theta`` (on a coarse ladder) with ``e^{-Re s theta} log(theta/a) < floor``."""
    sigma = complex(s).real
    theta = max(2 * d.b, 1.0)
    while math.exp(-sigma * theta) * math.log(theta / d.a) >= floor:
        theta *= 1.05
    return theta


class LaplaceCheck(NamedTuple):
    lhs: complex
    rhs: complex
    tail_bound: float


def laplace_S1_check(
    d: Density,
    s,
    theta_max: Optional[float] = None,
    h: Optional[float] = None,
    delta_fn=None,
) -> LaplaceCheck:
    """Compare ``int_0^inf e^{-s t} S_1(t) dt`` with ``-(1/2s) log(1 - L_s(d))``.

    The left side integrates each series term on its lattice (trapezoid),
    uses the exact plateau integral beyond ``n b``, truncates at
    ``theta_max`` and adds a tail estimate from ``S_1' ~ 1/(2 theta)``.
    ``tail_bound`` is the modulus of that added tail.
    """
    s = complex(s)
    if not s.real > 0:
        raise InvalidInputError("Laplace check needs Re s > 0")
    L = laplace_density(d, s)
    if abs(L) >= 1:
        raise OutsideRegionError(f"|L_s(d)| = {abs(L):.6g} >= 1 at s = {s!r}")
    rhs = -np.log(1 - L) / (2 * s)
    h = default_step(d) if h is None else h
    delta_fn = default_delta(d) if delta_fn is None else delta_fn
    theta_max = laplace_theta_max(d, s) if theta_max is None else float(theta_max)
    plateau = float(delta_fn(np.array([d.b]))[0])
    lhs = 0.0 + 0.0j
    s1_at_max = 0.0
    for n, t in _series_terms(d, h, delta_fn, theta_max):
        x = t.nodes
        sel = x <= theta_max + 1e-12
        w = np.full(sel.sum(), h)
        w[0] *= 0.5
        w[-1] *= 0.5
        lhs += complex(np.sum(w * t.values[sel] * np.exp(-s * x[sel]))) / n
        top = n * d.b
        if top < theta_max:
            lhs += plateau * (np.exp(-s * top) - np.exp(-s * theta_max)) / s / n
            s1_at_max += plateau / n
        else:
            s1_at_max += float(t(theta_max)) / n
    tail = np.exp(-s * theta_max) * s1_at_max / s + 0.5 * special.exp1(s * theta_max) / s
    return LaplaceCheck(complex(lhs + tail), complex(rhs), float(abs(tail)))


def ft_consistency(d: Density, s, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``|L_s(d) - ft(d, i s)|``."""
    return abs(laplace_density(d, s) - ft(d, 1j * complex(s), q))
