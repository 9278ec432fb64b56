"""Zeros of ``f(k) = ft(d, k) - 1`` in a strip of the lower half-plane.

Seeds come from the fixed-point iteration ``z -> log(alpha z) + 2 pi i n``;
every zero reported is certified by argument-principle counts over a
quadtree of rectangles, with Newton refinement inside cells that contain
exactly one zero.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .density import Density
from .errors import (
    BoundaryTooCloseError,
    ConvAsymError,
    IncompleteEnumerationError,
    InvalidInputError,
    OverflowRangeError,
    RefinementFailedError,
    ResourceLimitError,
)
from .quadrature import DEFAULT_QUAD, QuadratureSpec, panel_rule
from .spectral import one_minus_ft_and_derivative

MIN_BOUNDARY_MODULUS = 1e-8
MAX_PHASE_STEP = math.pi / 3
DEDUP_RADIUS = 1e-6
MULTIPLICITY_RADIUS = 1e-3
RESIDUAL_LIMIT = 1e-9

Rect = tuple[float, float, float, float]  # (re_lo, re_hi, im_lo, im_hi)


@dataclass(frozen=True)
class StripSpec:
    """Search region ``{-c <= Im k <= -guard_eps, |Re k| <= R}``.

    ``cell_cap`` bounds the quadtree depth.
    """

    c: float
    R: float
    guard_eps: float = 1e-3
    cell_cap: int = 30

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidInputError("strip depth c must be positive")
        if not self.R > 0:
            raise InvalidInputError("strip half-width R must be positive")
        if not 0 < self.guard_eps < self.c:
            raise InvalidInputError("guard_eps must lie in (0, c)")
        if self.cell_cap < 1:
            raise InvalidInputError("cell_cap must be >= 1")

    @property
    def rect(self) -> Rect:
        return (-self.R, self.R, -self.c, -self.guard_eps)


@dataclass(frozen=True)
class ZeroRecord:
    k: complex
    multiplicity: int
    residual: float
    newton_iterations: int
    provenance: str  # "bootstrap-seed" or "subdivision"

    def as_dict(self) -> dict:
        return {
            "re": self.k.real,
            "im": self.k.imag,
            "multiplicity": self.multiplicity,
            "residual": self.residual,
            "newton_iterations": self.newton_iterations,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ZeroRecord":
        try:
            return cls(
                complex(float(obj["re"]), float(obj["im"])),
                int(obj.get("multiplicity", 1)),
                float(obj.get("residual", 0.0)),
                int(obj.get("newton_iterations", 0)),
                str(obj.get("provenance", "subdivision")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad zero record {obj!r}") from exc

    def mirrored(self) -> "ZeroRecord":
        return ZeroRecord(-self.k.conjugate(), self.multiplicity, self.residual, self.newton_iterations, self.provenance)


# -- asymptotic seeds -------------------------------------------------------


def bootstrap_alpha(d: Density) -> float:
    bd = d.b * d.value_at_b
    if bd == 0:
        raise InvalidInputError("d(b) must be nonzero")
    return 1.0 / bd


def bootstrap_seed(d: Density, n: int, iterations: int = 8) -> complex:
    """Seed for the ``n``-th zero after ``iterations`` fixed-point steps.

    Negative ``n`` gives the mirror image ``-conj(seed(-n))``.
    """
    if n == 0:
        raise InvalidInputError("n must be nonzero")
    if n < 0:
        return -bootstrap_seed(d, -n, iterations).conjugate()
    alpha = bootstrap_alpha(d)
    shift = 2j * math.pi * n
    z = shift
    for _ in range(iterations):
        # alpha z stays in the upper half-plane, where the principal log is continuous
        z = cmath.log(alpha * z) + shift
    return z / (1j * d.b)


def asymptotic_zero_estimate(d: Density, n: int) -> complex:
    """``(pi/b)(2n + 1/2) - (i/b) log(2 pi n / (b d(b)))``; mirrored for ``n < 0``."""
    if n == 0:
        raise InvalidInputError("n must be nonzero")
    if n < 0:
        return -asymptotic_zero_estimate(d, -n).conjugate()
    return complex(
        math.pi / d.b * (2 * n + 0.5),
        -math.log(2 * math.pi * n * bootstrap_alpha(d)) / d.b,
    )


def zero_free_radius(d: Density, c: float) -> float:
    """``|Re k|`` beyond which ``|ft(d, k)| <= 1/2`` for ``-c <= Im k <= 0``.

    Two integrations by parts give ``|ft| <= A/|k| + B/|k|^2`` with
    ``A`` from jumps of ``d`` and ``B`` from jumps of ``d'`` plus the
    integral of ``|d''| e^{cx}``; each weighted by ``e^{cx}``.
    """
    pts = d.breakpoints
    A = 0.0
    B = 0.0
    for i, x in enumerate(pts):
        w = math.exp(c * x)
        left = d.pieces[i - 1] if i > 0 else None
        right = d.pieces[i] if i < len(d.pieces) else None
        v_l = float(left.evaluator.value(x)) if left else 0.0
        v_r = float(right.evaluator.value(x)) if right else 0.0
        g_l = float(left.evaluator.derivative(x, 1)) if left else 0.0
        g_r = float(right.evaluator.derivative(x, 1)) if right else 0.0
        A += abs(v_r - v_l) * w
        B += abs(g_r - g_l) * w
    for p in d.pieces:
        x, wq = panel_rule(np.linspace(p.lo, p.hi, 33), 16)
        B += float(np.sum(wq * np.abs(p.evaluator.derivative(x, 2)) * np.exp(c * x)))
    return A + math.sqrt(A * A + 2 * B)


# -- argument principle -----------------------------------------------------


def _rect_path(rect: Rect):
    x0, x1, y0, y1 = rect
    corners = np.array([complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)])

    def path(t: np.ndarray) -> np.ndarray:
        i = np.minimum(np.floor(t).astype(int), 3)
        s = t - i
        return corners[i] + s * (corners[i + 1] - corners[i])

    return path, 4.0, [abs(corners[i + 1] - corners[i]) for i in range(4)]


def _contour_winding(
    fn: Callable[[np.ndarray], tuple[np.ndarray, Optional[np.ndarray]]],
    path: Callable[[np.ndarray], np.ndarray],
    t: np.ndarray,
    min_modulus: float = MIN_BOUNDARY_MODULUS,
    max_points: int = 400_000,
) -> int:
    """Count zeros inside a closed path by tracking ``arg fn`` along it.

    ``fn`` returns values and (optionally) derivatives.  A segment is
    bisected while its phase step exceeds ``MAX_PHASE_STEP`` or, when the
    derivative is known, while ``|f'/f| * |dz|`` exceeds one radian.
    """
    t = np.asarray(t, dtype=float)
    z = path(t)
    f, fp = fn(z)
    while True:
        mod = np.abs(f)
        if not np.all(np.isfinite(f)) or mod.min() < min_modulus:
            raise BoundaryTooCloseError(f"|f| = {mod.min():.3e} on the contour")
        dphi = np.angle(f[1:] / f[:-1])
        bad = np.abs(dphi) > MAX_PHASE_STEP
        if fp is not None:
            rate = np.abs(fp / f)
            bad |= np.maximum(rate[1:], rate[:-1]) * np.abs(np.diff(z)) > 1.0
        if not bad.any():
            break
        seg = np.nonzero(bad)[0]
        if np.min(np.diff(t)[seg]) < 1e-13:
            raise BoundaryTooCloseError("phase tracking failed to resolve the contour")
        if t.size + seg.size > max_points:
            raise BoundaryTooCloseError("phase tracking exceeded its sample budget")
        tm = 0.5 * (t[seg] + t[seg + 1])
        zm = path(tm)
        fm, fpm = fn(zm)
        order = np.argsort(np.concatenate((t, tm)), kind="stable")
        t = np.concatenate((t, tm))[order]
        z = np.concatenate((z, zm))[order]
        f = np.concatenate((f, fm))[order]
        if fp is not None:
            fp = np.concatenate((fp, fpm))[order]
    total = float(np.sum(dphi)) / (2 * math.pi)
    count = round(total)
    if abs(total - count) >= 0.25:
        raise BoundaryTooCloseError(f"winding {total:.3f} is not close to an integer")
    return int(count)


def _rect_samples(rect: Rect, spacing: float) -> np.ndarray:
    _, _, lengths = _rect_path(rect)
    parts = []
    for i, L in enumerate(lengths):
        n = max(8, int(math.ceil(L / spacing)))
        parts.append(i + np.arange(n) / n)
    parts.append(np.array([4.0]))
    return np.concatenate(parts)


def _check_rect(rect: Rect) -> Rect:
    x0, x1, y0, y1 = (float(v) for v in rect)
    if not (x1 > x0 and y1 > y0):
        raise InvalidInputError(f"degenerate rectangle {rect!r}")
    return x0, x1, y0, y1


def winding_number_fn(
    fn: Callable[[np.ndarray], np.ndarray],
    rect: Rect,
    spacing: float = 0.25,
    dfn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> int:
    """Zeros (with multiplicity) of an analytic ``fn`` inside ``rect``."""
    rect = _check_rect(rect)
    path, _, _ = _rect_path(rect)

    def both(z):
        return np.asarray(fn(z), dtype=complex), None if dfn is None else np.asarray(dfn(z), dtype=complex)

    return _contour_winding(both, path, _rect_samples(rect, spacing))


def _f_and_deriv(d: Density, q: QuadratureSpec):
    def both(z):
        try:
            om, dp = one_minus_ft_and_derivative(d, z, q)
        except OverflowRangeError as exc:
            raise BoundaryTooCloseError(str(exc)) from exc
        return -om, dp

    return both


def winding_number(d: Density, rect: Rect, q: QuadratureSpec = DEFAULT_QUAD) -> int:
    """Zeros of ``ft(d, k) - 1`` inside ``rect = (re_lo, re_hi, im_lo, im_hi)``."""
    rect = _check_rect(rect)
    path, _, _ = _rect_path(rect)
    return _contour_winding(_f_and_deriv(d, q), path, _rect_samples(rect, 0.5 / d.b))


def circle_winding(d: Density, center: complex, radius: float, q: QuadratureSpec = DEFAULT_QUAD) -> int:
    def path(t):
        return center + radius * np.exp(2j * math.pi * t)

    return _contour_winding(_f_and_deriv(d, q), path, np.linspace(0.0, 1.0, 33))


# -- Newton -----------------------------------------------------------------


def _newton(d: Density, seed: complex, tol: float, max_iter: int, q: QuadratureSpec):
    f_and_d = _f_and_deriv(d, q)
    k = complex(seed)
    best = None
    for it in range(max_iter + 1):
        try:
            f, fp = f_and_d(np.array([k]))
        except BoundaryTooCloseError as exc:
            raise RefinementFailedError(f"Newton left the representable range: {exc}") from exc
        f, fp = complex(f[0]), complex(fp[0])
        r = abs(f)
        if best is None or r < best[1]:
            best = (k, r, it)
        if r <= tol:
            return k, r, it
        if fp == 0 or not math.isfinite(r):
            break
        step = f / fp
        k = k - step
        if abs(step) <= 4e-16 * max(1.0, abs(k)):
            # stagnation at the rounding floor
            return best
    if best is not None and best[1] <= RESIDUAL_LIMIT:
        return best
    raise RefinementFailedError(f"Newton from {seed!r} did not converge (|f| = {best[1] if best else float('nan'):.3e})")


def multiplicity(d: Density, k: complex, radius: float = MULTIPLICITY_RADIUS, q: QuadratureSpec = DEFAULT_QUAD) -> int:
    return circle_winding(d, k, radius, q)


def refine_zero(
    d: Density,
    seed: complex,
    tol: float = 1e-12,
    max_iter: int = 50,
    radius: float = MULTIPLICITY_RADIUS,
    provenance: str = "subdivision",
    q: QuadratureSpec = DEFAULT_QUAD,
) -> ZeroRecord:
    """Newton iteration on ``ft - 1`` from ``seed``; multiplicity by a small circle winding.

    Stops once ``|f| <= tol``; a stagnated iteration is accepted when the
    residual is below ``RESIDUAL_LIMIT``.  Raises
    :class:`RefinementFailedError` otherwise.
    """
    seed = complex(seed)
    if not seed.imag < 0:
        raise InvalidInputError("seed must lie in the lower half-plane")
    k, r, it = _newton(d, seed, tol, max_iter, q)
    try:
        m = multiplicity(d, k, radius, q)
    except BoundaryTooCloseError:
        m = multiplicity(d, k, radius / 4, q)
    if m < 1:
        raise RefinementFailedError(f"no zero inside the circle around {k!r}")
    return ZeroRecord(k, m, r, it, provenance)


def dedup_key(k: complex, radius: float = DEDUP_RADIUS) -> tuple[int, int]:
    return (round(k.real / radius), round(k.imag / radius))


# -- strip enumeration ------------------------------------------------------


_JITTER = (0.5, 0.46, 0.54, 0.41, 0.59, 0.37, 0.63)


def _split(rect: Rect, frac: float) -> tuple[Rect, Rect]:
    x0, x1, y0, y1 = rect
    if (x1 - x0) >= (y1 - y0):
        xm = x0 + frac * (x1 - x0)
        return (x0, xm, y0, y1), (xm, x1, y0, y1)
    ym = y0 + frac * (y1 - y0)
    return (x0, x1, y0, ym), (x0, x1, ym, y1)


def _inside(k: complex, rect: Rect) -> bool:
    x0, x1, y0, y1 = rect
    return x0 < k.real < x1 and y0 < k.imag < y1


class _Enumerator:
    def __init__(self, d: Density, strip: StripSpec, q: QuadratureSpec, seeds: Sequence[complex]):
        self.d, self.strip, self.q = d, strip, q
        self.seeds = list(seeds)
        self.found: dict[tuple[int, int], ZeroRecord] = {}
        self.incomplete = False

    def wind(self, rect: Rect) -> int:
        return winding_number(self.d, rect, self.q)

    def try_newton(self, rect: Rect, count: int) -> Optional[ZeroRecord]:
        x0, x1, y0, y1 = rect
        centre = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        candidates = [(s, "bootstrap-seed") for s in self.seeds if _inside(s, rect)]
        candidates.append((centre, "subdivision"))
        for seed, origin in candidates:
            try:
                k, r, it = _newton(self.d, seed, 1e-12, 50, self.q)
            except RefinementFailedError:
                continue
            if _inside(k, rect):
                return ZeroRecord(k, count, r, it, origin)
        return None

    def children(self, rect: Rect, count: int) -> list[tuple[Rect, int]]:
        for frac in _JITTER:
            a, b = _split(rect, frac)
            try:
                wa, wb = self.wind(a), self.wind(b)
            except BoundaryTooCloseError:
                continue
            if wa + wb == count and wa >= 0 and wb >= 0:
                return [(a, wa), (b, wb)]
        raise BoundaryTooCloseError(f"could not split {rect!r} consistently")

    def run(self, rect: Rect, count: int) -> None:
        stack = [(rect, count, 0)]
        while stack:
            cell, n, depth = stack.pop()
            if n == 0:
                continue
            if n == 1:
                rec = self.try_newton(cell, 1)
                if rec is not None:
                    self.found.setdefault(dedup_key(rec.k), rec)
                    continue
            x0, x1, y0, y1 = cell
            if n > 1 and max(x1 - x0, y1 - y0) < 1e-7:
                # a cluster that no split separates: one zero of multiplicity n
                rec = self.try_newton(cell, n)
                if rec is not None:
                    self.found.setdefault(dedup_key(rec.k), rec)
                    continue
            if depth >= self.strip.cell_cap:
                self.incomplete = True
                continue
            for child, wc in self.children(cell, n):
                stack.append((child, wc, depth + 1))


def _columns(lo: float, hi: float, width: float) -> list[tuple[float, float]]:
    n = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n + 1)
    return list(zip(edges[:-1], edges[1:]))


def enumerate_strip(
    d: Density,
    strip: StripSpec,
    q: QuadratureSpec = DEFAULT_QUAD,
    use_seeds: bool = True,
) -> list[ZeroRecord]:
    """All zeros of ``ft - 1`` in ``strip.rect``, sorted by ``Re k``.

    The two half-planes ``Re k < 0`` and ``Re k > 0`` are searched
    independently so the mirror symmetry of the result is a check, not an
    assumption.  Raises :class:`IncompleteEnumerationError` (with the
    partial list) if the depth cap is hit or the counts do not reconcile.
    """
    guard = (-strip.R, strip.R, -strip.guard_eps, strip.guard_eps)
    if winding_number(d, guard, q) != 1:
        raise ConvAsymError("guard band around the real axis holds zeros other than k = 0; shrink guard_eps")
    total = winding_number(d, strip.rect, q)

    seeds: list[complex] = []
    if use_seeds:
        n = 1
        while True:
            s = bootstrap_seed(d, n)
            if abs(s.real) > strip.R + math.pi / d.b:
                break
            seeds += [s, -s.conjugate(), asymptotic_zero_estimate(d, n), asymptotic_zero_estimate(d, -n)]
            n += 1
            if n > 100_000:
                raise ResourceLimitError("too many asymptotic seeds")

    _, _, y0, y1 = strip.rect
    width = math.pi / d.b
    columns = _columns(-strip.R, 0.0, width) + _columns(0.0, strip.R, width)
    en = _Enumerator(d, strip, q, seeds)
    counted = 0
    for cx0, cx1 in columns:
        cell = (cx0, cx1, y0, y1)
        w = en.wind(cell)
        counted += w
        en.run(cell, w)
    records = sorted(en.found.values(), key=lambda r: (r.k.real, r.k.imag))
    # multiplicity circles must not contain neighbours
    final = []
    for rec in records:
        others = [abs(rec.k - o.k) for o in records if o is not rec]
        radius = min(MULTIPLICITY_RADIUS, 0.25 * min(others)) if others else MULTIPLICITY_RADIUS
        m = multiplicity(d, rec.k, radius, q)
        final.append(ZeroRecord(rec.k, m, rec.residual, rec.newton_iterations, rec.provenance))
    if en.incomplete:
        raise IncompleteEnumerationError(f"cell depth cap {strip.cell_cap} reached", final)
    if counted != total or sum(r.multiplicity for r in final) != total:
        raise IncompleteEnumerationError(
            f"counts do not reconcile: strip winding {total}, column sum {counted}, "
            f"multiplicity sum {sum(r.multiplicity for r in final)}",
            final,
        )
    return final


def mirror_defect(records: Sequence[ZeroRecord]) -> float:
    """Largest distance from a record to the nearest mirror image ``-conj(k)``."""
    if not records:
        return 0.0
    ks = np.array([r.k for r in records])
    mirrors = -np.conj(ks)
    return float(max(np.min(np.abs(ks - m)) for m in mirrors))


def is_conjugate_closed(records: Sequence[ZeroRecord], tol: float = 1e-9) -> bool:
    return mirror_defect(records) <= tol
