"""Lattice computation of n-fold convolutions and the series F_d(x).

``d^{*n}`` lives on the lattice ``n*a + j*h``.  The step must divide
``b - a`` so every kink ``n*a + i*(b - a)`` lands on a node; the trapezoid
rule is then second order with a clean ``h**2, h**4, ...`` error expansion,
which :func:`f_direct` can exploit by Richardson extrapolation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy import signal

from .density import Density, evaluate
from .errors import InvalidInputError, ResourceLimitError

DEFAULT_DIVISIONS = 2048
DEFAULT_MAX_GRID = 1 << 24
_DIRECT_LIMIT = 20_000_000  # Nf * Ng above which the FFT path is used
_KINK_LIMIT = 200_000


def max_grid() -> int:
    """Grid-size cap; ``CONVASYM_MAX_GRID`` overrides the default."""
    raw = os.environ.get("CONVASYM_MAX_GRID")
    if raw is None:
        return DEFAULT_MAX_GRID
    try:
        cap = int(float(raw))
    except ValueError as exc:
        raise InvalidInputError(f"CONVASYM_MAX_GRID={raw!r} is not a number") from exc
    if cap <= 0:
        raise InvalidInputError("CONVASYM_MAX_GRID must be positive")
    return cap


def default_step(d: Density, divisions: int = DEFAULT_DIVISIONS) -> float:
    return (d.b - d.a) / divisions


def divisions_for(d: Density, h: float) -> int:
    """Number of lattice cells in ``[a, b]``; raises unless ``h`` divides ``b - a``."""
    if not h > 0:
        raise InvalidInputError("step h must be positive")
    ratio = (d.b - d.a) / h
    m = round(ratio)
    if m < 1 or abs(ratio - m) > 1e-8 * max(1.0, ratio):
        raise InvalidInputError(f"h = {h!r} does not divide b - a = {d.b - d.a!r}")
    return m


@dataclass
class GridFunction:
    """Samples ``values[j] = f(x0 + j*h)``.

    ``full_length`` is the number of nodes covering the whole support; it
    exceeds ``len(values)`` when the grid was truncated at some ``xmax``.
    ``kinks`` lists abscissae where the function may fail to be smooth.
    """

    x0: float
    h: float
    values: np.ndarray
    full_length: int
    kinks: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ResourceLimitError("non-finite values on convolution grid")

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.values.size)

    @property
    def complete(self) -> bool:
        return self.values.size == self.full_length

    @property
    def x_end(self) -> float:
        return self.x0 + self.h * (self.full_length - 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.values.size, self.h)
        w[0] *= 0.5
        if self.complete:
            w[-1] *= 0.5
        return w

    def mass(self) -> float:
        if not self.complete:
            raise InvalidInputError("mass needs the complete grid")
        return math.fsum(self.trapezoid_weights() * self.values)

    def fourier(self, k) -> np.ndarray:
        """Trapezoid approximation of ``int f(x) exp(i k x) dx`` (real or complex k)."""
        if not self.complete:
            raise InvalidInputError("fourier transform needs the complete grid")
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        wv = self.trapezoid_weights() * self.values
        x = self.nodes
        out = np.empty(k.size, dtype=complex)
        chunk = max(1, 4_000_000 // x.size)
        for s in range(0, k.size, chunk):
            out[s:s + chunk] = np.exp(1j * np.outer(k[s:s + chunk], x)) @ wv
        return out

    def __call__(self, x, cubic: bool = True) -> np.ndarray:
        """Interpolate; zero outside the support.

        With ``cubic`` a four-point Lagrange stencil is used whose nodes never
        straddle a kink, so accuracy stays O(h**4) away from and at kinks.
        Otherwise linear interpolation, O(h**2).
        """
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        last = self.values.size - 1
        t = (x - self.x0) / self.h
        inside = (t >= -1e-9) & (t <= self.full_length - 1 + 1e-9)
        if np.any(inside & (t > last + 1e-9)):
            raise InvalidInputError("query beyond the truncated grid")
        ti = np.clip(t[inside], 0.0, last)
        if not cubic or last < 3:
            i = np.minimum(np.floor(ti).astype(int), max(last - 1, 0))
            frac = ti - i
            v = self.values
            out[inside] = v[i] * (1 - frac) + v[np.minimum(i + 1, last)] * frac
            return float(out[0]) if scalar else out
        lo_idx, hi_idx = self._smooth_segment(ti)
        start = np.floor(ti).astype(int) - 1
        start = np.minimum(np.maximum(start, lo_idx), hi_idx - 3)
        narrow = hi_idx - lo_idx < 3
        start = np.where(narrow, np.clip(np.floor(ti).astype(int) - 1, 0, last - 3), start)
        s = ti - start
        v = self.values
        v0, v1, v2, v3 = (v[np.clip(start + j, 0, last)] for j in range(4))
        res = (
            -v0 * (s - 1) * (s - 2) * (s - 3) / 6
            + v1 * s * (s - 2) * (s - 3) / 2
            - v2 * s * (s - 1) * (s - 3) / 2
            + v3 * s * (s - 1) * (s - 2) / 6
        )
        out[inside] = res
        return float(out[0]) if scalar else out

    def _smooth_segment(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        last = self.values.size - 1
        if self.kinks is None or self.kinks.size == 0:
            return np.zeros(t.size, dtype=int), np.full(t.size, last)
        kidx = np.round((self.kinks - self.x0) / self.h)
        kidx = np.unique(np.clip(kidx, 0, last)).astype(int)
        bounds = np.concatenate(([0], kidx[(kidx > 0) & (kidx < last)], [last]))
        pos = np.searchsorted(bounds, t, side="right") - 1
        pos = np.clip(pos, 0, bounds.size - 2)
        return bounds[pos], bounds[pos + 1]


# -- samples and convolution -----------------------------------------------


def sample(d: Density, h: float, xmax: Optional[float] = None) -> GridFunction:
    """``d`` on the lattice ``a + j*h``; nodes on interior breakpoints take the mean of both sides."""
    m = divisions_for(d, h)
    j = np.arange(m + 1)
    x = d.a + (d.b - d.a) * j / m
    x[-1] = d.b
    vals = np.asarray(evaluate(d, x), dtype=float)
    vals[-1] = d.value_at_b
    for left, right in zip(d.pieces, d.pieces[1:]):
        idx = (left.hi - d.a) / h
        if abs(idx - round(idx)) < 1e-8:
            i = int(round(idx))
            vals[i] = 0.5 * (float(left.evaluator.value(left.hi)) + float(right.evaluator.value(right.lo)))
    g = GridFunction(d.a, h, vals, m + 1, kinks=d.breakpoints.copy())
    return truncate(g, xmax)


def truncate(g: GridFunction, xmax: Optional[float]) -> GridFunction:
    if xmax is None:
        return g
    keep = int(math.floor((xmax - g.x0) / g.h + 1e-9)) + 4  # room for the cubic stencil
    keep = max(1, min(keep, g.values.size))
    if keep == g.values.size:
        return g
    return GridFunction(g.x0, g.h, g.values[:keep].copy(), g.full_length, g.kinks)


def _sumset(a: Optional[np.ndarray], b: Optional[np.ndarray], scale: float) -> Optional[np.ndarray]:
    if a is None or b is None or a.size * b.size > _KINK_LIMIT:
        return None
    s = np.sort((a[:, None] + b[None, :]).ravel())
    keep = np.concatenate(([True], np.diff(s) > 1e-9 * scale))
    return s[keep]


def trapezoid_convolve(f: GridFunction, g: GridFunction, xmax: Optional[float] = None) -> GridFunction:
    """``(f*g)(x) = int f(t) g(x - t) dt`` by the trapezoid rule on the common lattice.

    Both inputs must share ``h``; the output origin is ``f.x0 + g.x0``.  The
    integrand is supported on an interval whose ends are lattice nodes, so
    the plain discrete convolution is corrected by halving the two end terms.
    """
    if not math.isclose(f.h, g.h, rel_tol=1e-12):
        raise InvalidInputError("convolution needs a common lattice step")
    h = f.h
    nf, ng = f.full_length, g.full_length
    full_out = nf + ng - 1
    x0 = f.x0 + g.x0
    m_out = full_out
    if xmax is not None:
        m_out = min(full_out, max(1, int(math.floor((xmax - x0) / h + 1e-9)) + 4))
    if m_out > max_grid():
        raise ResourceLimitError(f"convolution grid of {m_out} nodes exceeds cap {max_grid()}")
    need_f = min(nf, m_out)
    need_g = min(ng, m_out)
    if f.values.size < need_f or g.values.size < need_g:
        raise InvalidInputError("input grid truncated below the requested range")
    fv = f.values[:need_f]
    gv = g.values[:need_g]
    if fv.size * gv.size <= _DIRECT_LIMIT:
        raw = np.convolve(fv, gv)[:m_out]
    else:
        raw = signal.oaconvolve(fv, gv)[:m_out]
    m = np.arange(m_out)
    jlo = np.maximum(0, m - (ng - 1))
    jhi = np.minimum(nf - 1, m)
    fvals = np.concatenate((fv, [0.0]))
    gvals = np.concatenate((gv, [0.0]))
    # indices beyond the stored arrays only occur for truncated grids where the term is interior
    lo_term = fvals[np.minimum(jlo, need_f)] * gvals[np.minimum(m - jlo, need_g)]
    hi_term = fvals[np.minimum(jhi, need_f)] * gvals[np.minimum(m - jhi, need_g)]
    out = h * (raw - 0.5 * lo_term - 0.5 * hi_term)
    kinks = _sumset(f.kinks, g.kinks, max(abs(x0), 1.0))
    return GridFunction(x0, h, out, full_out, kinks)


# -- n-fold ladder -----------------------------------------------------------


def nfold_ladder(d: Density, h: float, nmax: int, xmax: Optional[float] = None) -> Iterator[tuple[int, GridFunction]]:
    """Yield ``(n, d^{*n})`` for ``n = 1..nmax`` keeping one grid in memory."""
    m = divisions_for(d, h)
    if nmax * m > max_grid():
        raise ResourceLimitError(f"n*(b-a)/h = {nmax * m} exceeds grid cap {max_grid()}")
    base = sample(d, h)
    current = truncate(base, xmax)
    yield 1, current
    for n in range(2, nmax + 1):
        current = trapezoid_convolve(current, base, xmax=xmax)
        yield n, current


def nfold(d: Density, n: int, h: Optional[float] = None, xmax: Optional[float] = None) -> GridFunction:
    """``d^{*n}`` on the lattice over ``[n a, n b]`` (truncated at ``xmax`` if given)."""
    if n < 1 or int(n) != n:
        raise InvalidInputError("n must be a positive integer")
    h = default_step(d) if h is None else h
    for k, g in nfold_ladder(d, h, int(n), xmax):
        if k == n:
            return g
    raise AssertionError("unreachable")


def f_direct(d: Density, x, h: Optional[float] = None, richardson: bool = False, cubic: bool = True):
    """``F_d(x) = sum_{n <= x/a} d^{*n}(x) / n`` from lattice convolutions.

    Vectorized over ``x``.  The ``n = 1`` term uses ``d`` itself.  With
    ``richardson`` the result is ``(4 F_{h/2} - F_h) / 3``.
    """
    h = default_step(d) if h is None else h
    if richardson:
        coarse = f_direct(d, x, h, richardson=False, cubic=cubic)
        fine = f_direct(d, x, h / 2, richardson=False, cubic=cubic)
        return (4.0 * fine - coarse) / 3.0
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.asarray(evaluate(d, xs), dtype=float).copy()
    xmax = float(xs.max()) if xs.size else 0.0
    nmax = int(math.floor(xmax / d.a + 1e-12)) if xmax > 0 else 0
    if nmax >= 2:
        for n, g in nfold_ladder(d, h, nmax, xmax):
            if n == 1:
                continue
            sel = xs >= n * d.a
            if sel.any():
                out[sel] += g(xs[sel], cubic=cubic) / n
    return float(out[0]) if scalar else out


def mass_defects(d: Density, h: Optional[float] = None, nmax: int = 10) -> np.ndarray:
    """``|mass(d^{*n}) - 1|`` for ``n = 1..nmax`` (an O(h**2) noise gauge)."""
    h = default_step(d) if h is None else h
    return np.array([abs(g.mass() - 1.0) for _, g in nfold_ladder(d, h, nmax)])
