"""Characteristic function of a density and the integrals built on it.

Transforms use composite Gauss-Legendre panels whose width keeps the phase
of ``exp(i k x)`` below ``QuadratureSpec.max_phase_per_panel``; query points
are grouped by ``|k|`` so each group shares one node set.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .density import Density
from .errors import InvalidInputError, LineVanishingError, OverflowRangeError
from .quadrature import DEFAULT_QUAD, QuadratureSpec, graded_edges, panel_rule, uniform_edges

EXP_LIMIT = 700.0
LINE_VANISHING_TOL = 1e-6
_CHUNK = 2_000_000


def _check_range(k: np.ndarray, b: float) -> None:
    worst = float(np.max(np.abs(k.imag))) * b if k.size else 0.0
    if worst > EXP_LIMIT:
        raise OverflowRangeError(f"|Im k| * b = {worst:.4g} exceeds {EXP_LIMIT}")


def _nodes(d: Density, panels_per_span: int, order: int):
    """Nodes and weights with ``panels_per_span`` panels across ``[a, b]`` (split by piece)."""
    xs, ws = [], []
    span = d.b - d.a
    for p in d.pieces:
        share = (p.hi - p.lo) / span
        n = max(int(math.ceil(8 * share)), int(math.ceil(panels_per_span * share)))
        x, w = panel_rule(np.linspace(p.lo, p.hi, n + 1), order)
        xs.append(x)
        ws.append(w * p.evaluator.value(x))
    return np.concatenate(xs), np.concatenate(ws)


def _buckets(k: np.ndarray, d: Density, q: QuadratureSpec) -> np.ndarray:
    """Panel count per query, rounded up to a coarse geometric ladder."""
    need = np.maximum(np.ceil(np.abs(k) * (d.b - d.a) / q.max_phase_per_panel), 8.0)
    ladder = 8.0 * 1.25 ** np.ceil(np.log(need / 8.0) / math.log(1.25) - 1e-12)
    return np.ceil(ladder).astype(np.int64)


def _transform(d: Density, k, q: QuadratureSpec, kinds: tuple[str, ...]):
    k = np.atleast_1d(np.asarray(k, dtype=complex)).ravel()
    _check_range(k, d.b)
    outs = [np.empty(k.size, dtype=complex) for _ in kinds]
    bucket = _buckets(k, d, q)
    for size in np.unique(bucket):
        idx = np.nonzero(bucket == size)[0]
        x, wd = _nodes(d, int(size), q.panel_order)
        wx = wd * (1j * x)
        step = max(1, _CHUNK // x.size)
        for s in range(0, idx.size, step):
            sel = idx[s:s + step]
            em1 = np.expm1(1j * np.outer(k[sel], x))
            base = em1 @ wd
            for out, kind in zip(outs, kinds):
                if kind == "one_minus":
                    out[sel] = -base
                elif kind == "ft":
                    out[sel] = base + math.fsum(wd)
                else:
                    out[sel] = em1 @ wx + math.fsum(wx.imag) * 1j
    return outs


def _unwrap(k, outs):
    return complex(outs[0][0]) if np.ndim(k) == 0 else outs[0]


def ft(d: Density, k, q: QuadratureSpec = DEFAULT_QUAD):
    """``int d(x) exp(i k x) dx`` for real or complex ``k`` (vectorized)."""
    return _unwrap(k, _transform(d, k, q, ("ft",)))


def ft_derivative(d: Density, k, q: QuadratureSpec = DEFAULT_QUAD):
    """``int i x d(x) exp(i k x) dx``."""
    return _unwrap(k, _transform(d, k, q, ("deriv",)))


def one_minus_ft(d: Density, k, q: QuadratureSpec = DEFAULT_QUAD):
    """``1 - ft(d, k)`` without cancellation near ``k = 0``."""
    return _unwrap(k, _transform(d, k, q, ("one_minus",)))


def one_minus_ft_and_derivative(d: Density, k, q: QuadratureSpec = DEFAULT_QUAD):
    """``(1 - ft(d, k), ft_derivative(d, k))`` sharing one exponential matrix."""
    om, dp = _transform(d, k, q, ("one_minus", "deriv"))
    if np.ndim(k) == 0:
        return complex(om[0]), complex(dp[0])
    return om, dp


def ft_tail_approx(d: Density, k):
    """Leading large-``k`` term ``(d(b) e^{ikb} - d(a) e^{ika}) / (ik)``.

    The neglected part is ``O(|k|^-2 exp(|Im k| b))``.
    """
    scalar = np.ndim(k) == 0
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    if np.any(k == 0):
        raise InvalidInputError("tail approximation needs k != 0")
    _check_range(k, d.b)
    val = (d.value_at_b * np.exp(1j * k * d.b) - d.value_at_a * np.exp(1j * k * d.a)) / (1j * k)
    return complex(val[0]) if scalar else val


def small_k_expansion(d: Density, k):
    """``1 + i d1 k - d2 k^2 / 2``."""
    k = np.asarray(k, dtype=complex)
    return 1 + 1j * d.d1 * k - 0.5 * d.d2 * k * k


# -- inversion integrals ----------------------------------------------------


def _frequency_edges(U: float, freq: float, q: QuadratureSpec, graded: bool) -> np.ndarray:
    width = q.max_phase_per_panel / max(freq, 1e-300)
    edges = uniform_edges(0.0, U, width)
    if graded:
        first = graded_edges(0.0, edges[1], levels=40)
        edges = np.concatenate((first[:-1], edges[1:]))
    return edges


def log_inversion_fd(d: Density, x, U: float = 5000.0, q: QuadratureSpec = DEFAULT_QUAD):
    """``F_d(x) - d(x)`` as ``-(1/2 pi) int_{-U}^{U} (log(1 - ft) + ft) e^{-ikx} dk``.

    Real densities give a Hermitian integrand, so the integral is twice the
    real part over ``(0, U]``.  ``Re(1 - ft) > 0`` on the real axis keeps the
    principal log continuous; the log singularity at 0 is integrable and
    handled by panels graded toward 0.  Truncation error is ``O(1/U)``.
    Vectorized over ``x``.
    """
    if not U > 0:
        raise InvalidInputError("truncation U must be positive")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    freq = 2 * d.b + float(np.max(np.abs(xs)))
    nodes, weights = panel_rule(_frequency_edges(U, freq, q, graded=True), q.panel_order)
    om = one_minus_ft(d, nodes, q)
    g = (np.log(om) + (1.0 - om)) * weights
    out = np.empty(xs.size)
    for i, xv in enumerate(xs):
        out[i] = -np.real(np.exp(-1j * nodes * xv) @ g) / math.pi
    return float(out[0]) if scalar else out


class LineSamples(NamedTuple):
    """``f_c`` sampled on quadrature nodes along ``Im k = -c``."""

    u: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    min_modulus: float


def fc_samples(d: Density, c: float, U: float, q: QuadratureSpec = DEFAULT_QUAD, x_max: float = 0.0) -> LineSamples:
    """``f_c(u) = ft'(u-ic) ft(u-ic) / (1 - ft(u-ic))`` on ``[-U, U]``.

    Raises :class:`LineVanishingError` if the sampled minimum of
    ``|1 - ft|`` on the line falls below ``LINE_VANISHING_TOL``; this is a
    heuristic check, not a certificate.
    """
    if not c > 0:
        raise InvalidInputError("c must be positive")
    if not U > 0:
        raise InvalidInputError("truncation U must be positive")
    freq = 2 * d.b + abs(x_max)
    half = _frequency_edges(U, freq, q, graded=False)
    edges = np.concatenate((-half[:0:-1], half))
    u, w = panel_rule(edges, q.panel_order)
    k = u - 1j * c
    om, dp = one_minus_ft_and_derivative(d, k, q)
    mins = float(np.min(np.abs(om)))
    if mins < LINE_VANISHING_TOL:
        raise LineVanishingError(f"|1 - ft| = {mins:.3e} on the line Im k = -{c}; move c")
    return LineSamples(u, w, dp * (1.0 - om) / om, mins)


def error_term_E(d: Density, c: float, x, U: float = 2000.0, q: QuadratureSpec = DEFAULT_QUAD, samples: LineSamples | None = None):
    """``(1/2 pi i) int_{-U}^{U} f_c(u) e^{-iux} du`` (complex; real up to truncation).

    Vectorized over ``x``.  The integrand decays like ``u^-2`` so the
    truncation error is ``O(1/U)``.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if samples is None:
        samples = fc_samples(d, c, U, q, x_max=float(np.max(np.abs(xs))))
    fw = samples.values * samples.weights
    out = np.array([np.exp(-1j * samples.u * xv) @ fw for xv in xs]) / (2j * math.pi)
    return complex(out[0]) if scalar else out


def fc_l1_bound(d: Density, c: float, U: float = 2000.0, q: QuadratureSpec = DEFAULT_QUAD, samples: LineSamples | None = None) -> float:
    """``||f_c||_1`` over ``[-U, U]`` plus the tail majorant ``2 B / U``.

    ``B = max |f_c(u)| u^2`` over ``U/2 <= |u| <= U``, an empirically fitted
    envelope for the ``u^-2`` decay.
    """
    if samples is None:
        samples = fc_samples(d, c, U, q)
    mod = np.abs(samples.values)
    body = math.fsum(mod * samples.weights)
    au = np.abs(samples.u)
    U_eff = float(au.max())
    band = au >= U_eff / 2
    envelope = float(np.max(mod[band] * au[band] ** 2))
    return body + 2.0 * envelope / U_eff


def tail_envelope(d: Density, c: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``A`` with ``|ft(u - ic)| <= A e^{cb} / |u|`` fitted on ``|u|`` in [100, 200]."""
    u = np.concatenate((np.linspace(100, 200, 801), -np.linspace(100, 200, 801)))
    vals = np.abs(ft(d, u - 1j * c, q)) * np.abs(u) * math.exp(-c * d.b)
    return float(vals.max())
