"""Compactly supported probability densities on [a, b] with a > 0.

A :class:`Density` is an ordered tuple of pieces tiling its support.  Each
piece carries an analytic evaluator (reciprocal ``c/x``, constant, or
polynomial) so values, derivatives, moments and the cumulative integral are
all available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidInputError
from .quadrature import panel_rule, uniform_edges

NORMALIZATION_TOL = 1e-10


# -- piece evaluators -------------------------------------------------------


@dataclass(frozen=True)
class Reciprocal:
    """``coefficient / x``."""

    coefficient: float

    def value(self, x):
        return self.coefficient / x

    def derivative(self, x, order: int = 1):
        # d^m/dx^m (c/x) = c (-1)^m m! / x^(m+1)
        return self.coefficient * (-1) ** order * math.factorial(order) / x ** (order + 1)

    def power_integral(self, lo: float, hi: float, m: int) -> float:
        """Integral of ``x**m * value(x)`` over [lo, hi]."""
        if m == 0:
            return self.coefficient * math.log(hi / lo)
        return self.coefficient * (hi**m - lo**m) / m

    def mass_from(self, lo: float, x: np.ndarray) -> np.ndarray:
        return self.coefficient * np.log(x / lo)


@dataclass(frozen=True)
class Uniform:
    height: float

    def value(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.height) if np.ndim(x) else float(self.height)

    def derivative(self, x, order: int = 1):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    def power_integral(self, lo: float, hi: float, m: int) -> float:
        return self.height * (hi ** (m + 1) - lo ** (m + 1)) / (m + 1)

    def mass_from(self, lo: float, x: np.ndarray) -> np.ndarray:
        return self.height * (x - lo)


@dataclass(frozen=True)
class Polynomial:
    """``sum_j coefficients[j] * x**j``."""

    coefficients: tuple[float, ...]

    def value(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def derivative(self, x, order: int = 1):
        c = np.polynomial.polynomial.polyder(self.coefficients, order)
        return np.polynomial.polynomial.polyval(x, c)

    def power_integral(self, lo: float, hi: float, m: int) -> float:
        return math.fsum(
            c * (hi ** (j + m + 1) - lo ** (j + m + 1)) / (j + m + 1)
            for j, c in enumerate(self.coefficients)
        )

    def mass_from(self, lo: float, x: np.ndarray) -> np.ndarray:
        anti = np.polynomial.polynomial.polyint(self.coefficients)
        return np.polynomial.polynomial.polyval(x, anti) - np.polynomial.polynomial.polyval(lo, anti)

    def minimum(self, lo: float, hi: float) -> float:
        crit = np.polynomial.polynomial.polyroots(
            np.polynomial.polynomial.polyder(self.coefficients)
        ) if len(self.coefficients) > 2 else np.array([])
        pts = [lo, hi] + [r.real for r in np.atleast_1d(crit) if abs(r.imag) < 1e-12 and lo < r.real < hi]
        return float(min(self.value(p) for p in pts))


Evaluator = Union[Reciprocal, Uniform, Polynomial]


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    evaluator: Evaluator


# -- density ----------------------------------------------------------------


@dataclass(frozen=True)
class Density:
    """Piecewise-analytic probability density supported on ``[a, b]``.

    Construct through :func:`make_density`, :func:`from_pieces` or
    :func:`load_piecewise`; those validate normalization and positivity.
    """

    pieces: tuple[Piece, ...]
    name: str = "piecewise"
    d1: float = field(init=False, repr=False, compare=False)
    d2: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.pieces:
            raise InvalidInputError("density needs at least one piece")
        if not self.pieces[0].lo > 0:
            raise InvalidInputError("support must lie in (0, inf)")
        for p in self.pieces:
            if not p.hi > p.lo:
                raise InvalidInputError(f"empty or reversed piece [{p.lo}, {p.hi}]")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.hi != right.lo:
                raise InvalidInputError("pieces must tile the support without gaps or overlaps")
        object.__setattr__(self, "d1", self.power_integral(1))
        object.__setattr__(self, "d2", self.power_integral(2))

    @property
    def a(self) -> float:
        return self.pieces[0].lo

    @property
    def b(self) -> float:
        return self.pieces[-1].hi

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([p.lo for p in self.pieces] + [self.b])

    @property
    def value_at_a(self) -> float:
        return float(self.pieces[0].evaluator.value(self.a))

    @property
    def value_at_b(self) -> float:
        return float(self.pieces[-1].evaluator.value(self.b))

    def power_integral(self, m: int) -> float:
        return math.fsum(p.evaluator.power_integral(p.lo, p.hi, m) for p in self.pieces)

    def __call__(self, x):
        return evaluate(self, x)

    def derivative(self, x, order: int = 1):
        """One-sided derivative from inside the support (zero outside)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for i, p in enumerate(self.pieces):
            last = i == len(self.pieces) - 1
            mask = (x >= p.lo) & ((x <= p.hi) if last else (x < p.hi))
            if mask.any():
                out[mask] = p.evaluator.derivative(x[mask], order)
        return out if out.ndim else float(out)

    def cumulative(self, x):
        """``int_0^x d(t) dt`` in closed form."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        done = 0.0
        for p in self.pieces:
            inside = (x > p.lo) & (x < p.hi)
            if inside.any():
                out[inside] = done + p.evaluator.mass_from(p.lo, x[inside])
            done += p.evaluator.power_integral(p.lo, p.hi, 0)
            out[x >= p.hi] = done
        return float(out[0]) if scalar else out

    def quadrature_nodes(self, panels_per_piece: int = 8, order: int = 16):
        """Composite Gauss-Legendre nodes/weights on the support, weights * d(x)."""
        xs, ws = [], []
        for p in self.pieces:
            edges = np.linspace(p.lo, p.hi, panels_per_piece + 1)
            x, w = panel_rule(edges, order)
            xs.append(x)
            ws.append(w * p.evaluator.value(x))
        return np.concatenate(xs), np.concatenate(ws)


def evaluate(d: Density, x):
    """d(x) on the support and 0 outside; vectorized."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    n = len(d.pieces)
    for i, p in enumerate(d.pieces):
        mask = (x >= p.lo) & ((x <= p.hi) if i == n - 1 else (x < p.hi))
        if mask.any():
            out[mask] = p.evaluator.value(x[mask])
    return float(out[0]) if scalar else out


def moments(d: Density) -> tuple[float, float]:
    """Closed-form first and second moments ``(d1, d2)``."""
    return d.d1, d.d2


def quadrature_moments(d: Density, order: int = 20, max_width: float | None = None) -> tuple[float, float, float]:
    """``(mass, d1, d2)`` by Gauss-Legendre panels; independent of the closed forms."""
    mass = m1 = m2 = 0.0
    for p in d.pieces:
        width = max_width or (p.hi - p.lo) / 16
        x, w = panel_rule(uniform_edges(p.lo, p.hi, width), order)
        v = w * evaluate(d, x)
        mass += math.fsum(v)
        m1 += math.fsum(v * x)
        m2 += math.fsum(v * x * x)
    return mass, m1, m2


# -- validation -------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check]
    normalization_defect: float
    endpoint_values: tuple[float, float]
    variance: float
    hypothesis_violating: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "normalization_defect": self.normalization_defect,
            "endpoint_values": list(self.endpoint_values),
            "variance": self.variance,
            "hypothesis_violating": self.hypothesis_violating,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def _piece_minimum(p: Piece) -> float:
    ev = p.evaluator
    if isinstance(ev, Polynomial):
        return ev.minimum(p.lo, p.hi)
    if isinstance(ev, Reciprocal):
        return min(ev.value(p.lo), ev.value(p.hi))
    return float(ev.height)


def validate(d: Density) -> ValidationReport:
    """Check the standing hypotheses; failures are reported, never raised."""
    mass = d.power_integral(0)
    defect = abs(mass - 1.0)
    da, db = d.value_at_a, d.value_at_b
    variance = d.d2 / mass - (d.d1 / mass) ** 2 if mass > 0 else float("nan")
    checks = [
        Check("normalization", defect < NORMALIZATION_TOL, f"|mass - 1| = {defect:.3e}"),
        Check("endpoint", da != 0.0 and db != 0.0, f"d(a) = {da!r}, d(b) = {db!r}"),
        Check("nonnegative", min(_piece_minimum(p) for p in d.pieces) >= 0.0),
        Check("variance", variance > 0, f"d2 - d1^2 = {variance:.6e}"),
    ]
    jumps = []
    for left, right in zip(d.pieces, d.pieces[1:]):
        gap = abs(float(left.evaluator.value(left.hi)) - float(right.evaluator.value(right.lo)))
        if gap > 1e-12 * max(1.0, abs(float(left.evaluator.value(left.hi)))):
            jumps.append(f"jump {gap:.3e} at x = {left.hi!r}")
    checks.append(Check("continuity", not jumps, "; ".join(jumps)))
    # discontinuous inputs are allowed for exploration but break the C^2 hypothesis
    return ValidationReport(checks, defect, (da, db), variance, hypothesis_violating=bool(jumps))


# -- construction -----------------------------------------------------------


def from_pieces(pieces: Iterable[Piece], name: str = "piecewise", strict: bool = True) -> Density:
    """Build a density; with ``strict`` raise unless normalized and nonnegative."""
    d = Density(tuple(pieces), name=name)
    if strict:
        report = validate(d)
        bad = [f for f in report.failures() if f in ("normalization", "nonnegative")]
        if bad:
            detail = "; ".join(c.detail for c in report.checks if c.name in bad)
            raise InvalidInputError(f"density fails {', '.join(bad)} ({detail})")
    return d


def burgess(lam: float = 0.25) -> Density:
    """``2/x`` on ``[lam/sqrt(e), lam]``; the only reciprocal density there."""
    if not lam > 0:
        raise InvalidInputError("lambda must be positive")
    kappa = lam / math.sqrt(math.e)
    return from_pieces([Piece(kappa, lam, Reciprocal(2.0))], name=f"burgess:lambda={lam!r}")


def uniform(a: float, b: float) -> Density:
    if not (a > 0 and b > a):
        raise InvalidInputError("uniform density needs 0 < a < b")
    return from_pieces([Piece(a, b, Uniform(1.0 / (b - a)))], name=f"uniform:a={a!r},b={b!r}")


def polynomial_pieces(rows: Sequence[Sequence[float]], normalize: bool = False, name: str = "piecewise") -> Density:
    """Rows of ``(lo, hi, c0, c1, ...)``; ``normalize`` rescales to unit mass."""
    pieces = []
    for row in rows:
        if len(row) < 3:
            raise InvalidInputError(f"piece row needs lo, hi and at least one coefficient: {row!r}")
        lo, hi, *coeffs = (float(v) for v in row)
        pieces.append(Piece(lo, hi, Polynomial(tuple(coeffs))))
    if normalize:
        raw = Density(tuple(pieces))
        mass = raw.power_integral(0)
        if not mass > 0:
            raise InvalidInputError("density is not normalizable (mass <= 0)")
        pieces = [Piece(p.lo, p.hi, Polynomial(tuple(c / mass for c in p.evaluator.coefficients))) for p in pieces]
    return from_pieces(pieces, name=name)


def load_piecewise(path: Union[str, Path], normalize: bool = False) -> Density:
    """Read the ``piecewise-poly v1`` text format."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != "piecewise-poly v1":
        raise InvalidInputError(f"{path}: missing 'piecewise-poly v1' header")
    rows = []
    for ln in lines[1:]:
        if ln == "--normalize":
            normalize = True
            continue
        try:
            rows.append([float(v) for v in ln.split(",")])
        except ValueError as exc:
            raise InvalidInputError(f"{path}: bad row {ln!r}") from exc
    return polynomial_pieces(rows, normalize=normalize, name=f"file:{path}")


def dump_piecewise(d: Density) -> str:
    out = ["piecewise-poly v1"]
    for p in d.pieces:
        ev = p.evaluator
        if isinstance(ev, Polynomial):
            coeffs = ev.coefficients
        elif isinstance(ev, Uniform):
            coeffs = (ev.height,)
        else:
            raise InvalidInputError("reciprocal pieces have no polynomial form")
        out.append(",".join(format(v, ".17g") for v in (p.lo, p.hi, *coeffs)))
    return "\n".join(out) + "\n"


def make_density(spec: str, normalize: bool = False) -> Density:
    """Parse ``burgess[:lambda=f]``, ``uniform:a=f,b=f`` or ``file:path``."""
    family, _, params = spec.partition(":")
    family = family.strip().lower()
    if family == "file":
        if not params:
            raise InvalidInputError("file: density needs a path")
        return load_piecewise(params, normalize=normalize)
    kv = {}
    if params:
        for item in params.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise InvalidInputError(f"bad density parameter {item!r}")
            try:
                kv[key.strip().lower()] = float(val)
            except ValueError as exc:
                raise InvalidInputError(f"bad number in {item!r}") from exc
    if family == "burgess":
        unknown = set(kv) - {"lambda"}
        if unknown:
            raise InvalidInputError(f"burgess takes only lambda, got {sorted(unknown)}")
        return burgess(kv.get("lambda", 0.25))
    if family == "uniform":
        if set(kv) != {"a", "b"}:
            raise InvalidInputError("uniform needs a=<f>,b=<f>")
        return uniform(kv["a"], kv["b"])
    raise InvalidInputError(f"unknown density family {family!r}")
