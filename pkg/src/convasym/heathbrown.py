"""The reciprocal density ``2/x`` on ``[lambda/sqrt(e), lambda]`` and the
entire function ``H(z) = (2/z) int_{e^{-1/2}}^1 (1 - e^{-zu}) du/u``.

For ``lambda = 1/4`` the two are tied by ``H(-ik/4) = (4i/k)(1 - ft(d, k))``,
so zeros of ``ft - 1`` map to zeros of ``H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .density import Density, burgess
from .errors import InvalidInputError, OverflowRangeError
from .quadrature import panel_rule
from .spectral import one_minus_ft
from .zeros import ZeroRecord

SMALL_Z = 0.05
U_LO = math.exp(-0.5)
H_ZERO = 2.0 * (1.0 - math.exp(-0.5))


@dataclass(frozen=True)
class BurgessCase:
    lambda_: float = 0.25
    kappa: float = field(init=False)
    density: Density = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.lambda_ <= 0.25:
            raise InvalidInputError("lambda must lie in (0, 1/4]")
        object.__setattr__(self, "kappa", self.lambda_ / math.sqrt(math.e))
        object.__setattr__(self, "density", burgess(self.lambda_))

    def delta(self, theta):
        return delta_burgess(theta, self.lambda_)


def delta_burgess(theta, lam: float = 0.25):
    """0 below ``kappa``, ``log(theta/kappa)`` on ``[kappa, lambda]``, 1/2 above."""
    scalar = np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(th < 0):
        raise InvalidInputError("theta must be nonnegative")
    kappa = lam / math.sqrt(math.e)
    out = np.zeros_like(th)
    mid = (th > kappa) & (th < lam)
    out[mid] = np.log(th[mid] / kappa)
    out[th >= lam] = 0.5
    return float(out[0]) if scalar else out


def _series(z: np.ndarray, derivative: bool = False) -> np.ndarray:
    # H(z) = 2 sum_{m>=1} (-z)^(m-1) (1 - e^{-m/2}) / (m m!)
    out = np.zeros(z.shape, dtype=complex)
    power = np.ones(z.shape, dtype=complex)  # (-z)^(m-1), or its derivative factor
    for m in range(1, 40):
        coeff = 2.0 * (1.0 - math.exp(-m / 2)) / (m * math.factorial(m))
        if derivative:
            if m >= 2:
                term = -coeff * (m - 1) * power
                power = power * (-z)
                out += term
        else:
            term = coeff * power
            power = power * (-z)
            out += term
        if m > 2 and coeff * np.max(np.abs(z)) ** (m - 1) * m < 1e-14:
            break
    return out


def _quad(z: np.ndarray, derivative: bool = False) -> np.ndarray:
    width = 1.0 - U_LO
    panels = max(4, int(math.ceil(float(np.max(np.abs(z))) * width / math.pi)))
    u, w = panel_rule(np.linspace(U_LO, 1.0, panels + 1), 20)
    zu = np.outer(z, u)
    integral = (-np.expm1(-zu)) @ (w / u)
    H = 2.0 * integral / z
    if not derivative:
        return H
    # H' = -H/z + (2/z) int e^{-zu} du
    return -H / z + 2.0 * (np.exp(-zu) @ w) / z


def _h(z, derivative: bool):
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z.real) > 700):
        raise OverflowRangeError("|Re z| > 700")
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < SMALL_Z
    if small.any():
        out[small] = _series(z[small], derivative)
    if (~small).any():
        out[~small] = _quad(z[~small], derivative)
    return complex(out[0]) if scalar else out


def h_eval(z):
    """``H(z)``; series below ``|z| = 0.05``, Gauss-Legendre panels above."""
    return _h(z, derivative=False)


def h_derivative(z):
    return _h(z, derivative=True)


def mapping_residual(k) -> float:
    """``|H(-ik/4) - (4i/k)(1 - ft(d, k))|`` with ``d`` the ``lambda = 1/4`` density."""
    k = complex(k)
    if k == 0:
        raise InvalidInputError("mapping identity needs k != 0")
    d = burgess(0.25)
    lhs = h_eval(-1j * k / 4)
    rhs = 4j / k * one_minus_ft(d, k)
    return abs(lhs - rhs)


def h_image(k):
    """Point ``-ik/4`` where a zero ``k`` of ``ft - 1`` lands in the ``H`` plane."""
    return -1j * np.asarray(k, dtype=complex) / 4


def burgess_zero_rescale(lambda_: float, reference_zeros: Sequence[ZeroRecord]) -> list[ZeroRecord]:
    """Zeros for ``lambda`` from the ``lambda = 1/4`` zeros: ``k -> k / (4 lambda)``."""
    if not 0 < lambda_ <= 0.25:
        raise InvalidInputError("lambda must lie in (0, 1/4]")
    s = 4.0 * lambda_
    return [ZeroRecord(z.k / s, z.multiplicity, z.residual, z.newton_iterations, z.provenance) for z in reference_zeros]
