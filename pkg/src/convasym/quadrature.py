"""Gauss-Legendre panel quadrature.

Two entry points:

* :func:`panel_rule` builds a fixed composite rule on a set of panel edges.
  The spectral code uses it with panels sized so the oscillation
  ``exp(i k x)`` turns by at most a bounded phase per panel.
* :func:`adaptive_integrate` bisects panels until a local error estimate
  (whole panel vs. its two halves) meets the tolerance.  The integrand is
  evaluated on whole arrays of nodes at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import InvalidInputError, ResourceLimitError


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for oscillation-aware panel quadrature.

    ``max_phase_per_panel`` bounds ``|k| * width`` for each panel (radians).
    ``abs_tol`` is the target absolute error for adaptive integrals.
    """

    panel_order: int = 16
    max_phase_per_panel: float = math.pi
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.panel_order < 4:
            raise InvalidInputError("panel_order must be >= 4")
        if not 0 < self.max_phase_per_panel <= math.pi:
            raise InvalidInputError("max_phase_per_panel must lie in (0, pi]")
        if not self.abs_tol > 0:
            raise InvalidInputError("abs_tol must be positive")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite rule on consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    gx, gw = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def uniform_edges(lo: float, hi: float, max_width: float) -> np.ndarray:
    n = max(1, int(math.ceil((hi - lo) / max_width - 1e-12)))
    return np.linspace(lo, hi, n + 1)


def graded_edges(lo: float, hi: float, levels: int = 40) -> np.ndarray:
    """Edges refining geometrically toward ``lo`` (for endpoint singularities)."""
    width = hi - lo
    inner = lo + width * 2.0 ** -np.arange(levels, 0, -1, dtype=float)
    return np.concatenate(([lo], inner, [hi]))


def adaptive_integrate(
    fn: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    order: int = 16,
    tol: float = 1e-12,
    max_panels: int = 2_000_000,
    max_levels: int = 40,
) -> tuple[complex, float]:
    """Integrate ``fn`` over ``[edges[0], edges[-1]]``.

    ``fn`` maps a 1-D array of nodes to values (real or complex).  Returns
    ``(integral, error_estimate)``.  Each panel is accepted once
    ``|I(panel) - I(left) - I(right)|`` drops below its share of ``tol``
    (proportional to width); the refined sum is kept for accepted panels.
    """
    edges = np.asarray(edges, dtype=float)
    total_width = edges[-1] - edges[0]
    if total_width <= 0:
        return 0.0, 0.0
    gx, gw = gauss_legendre(order)

    lo, hi = edges[:-1], edges[1:]
    whole = _panel_sums(fn, lo, hi, gx, gw)
    total = 0.0 + 0.0j
    err_total = 0.0
    for _level in range(max_levels):
        mid = 0.5 * (lo + hi)
        left = _panel_sums(fn, lo, mid, gx, gw)
        right = _panel_sums(fn, mid, hi, gx, gw)
        refined = left + right
        err = np.abs(whole - refined)
        budget = tol * (hi - lo) / total_width
        ok = err <= np.maximum(budget, 64 * np.finfo(float).eps * np.abs(refined))
        total += _pairwise(refined[ok])
        err_total += float(np.sum(err[ok]))
        if ok.all():
            break
        bad = ~ok
        lo = np.concatenate((lo[bad], mid[bad]))
        hi = np.concatenate((mid[bad], hi[bad]))
        whole = np.concatenate((left[bad], right[bad]))
        if lo.size > max_panels:
            raise ResourceLimitError(f"adaptive quadrature exceeded {max_panels} panels")
    else:
        total += _pairwise(refined[~ok])
        err_total += float(np.sum(err[~ok]))
    return total, err_total


def _panel_sums(fn, lo, hi, gx, gw, chunk: int = 4096) -> np.ndarray:
    out = np.empty(lo.size, dtype=complex)
    for s in range(0, lo.size, chunk):
        l, h = lo[s:s + chunk], hi[s:s + chunk]
        half = 0.5 * (h - l)
        nodes = 0.5 * (h + l)[:, None] + half[:, None] * gx[None, :]
        vals = np.asarray(fn(nodes.ravel())).reshape(nodes.shape)
        out[s:s + chunk] = half * (vals @ gw)
    return out


def _pairwise(values: np.ndarray) -> complex:
    # numpy's sum is pairwise for contiguous arrays
    if values.size == 0:
        return 0.0
    return complex(np.sum(np.ascontiguousarray(values)))
