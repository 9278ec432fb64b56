"""Exact finite-p computations with quadratic nonresidues."""

from __future__ import annotations

import io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import ConvAsymError, InvalidInputError, ResourceLimitError

SPJ_CAP = 10**7
PSI_CAP = 10**8
INCEXC_CAP = 10**5


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    f = 3
    while f <= r:
        if n % f == 0:
            return False
        f += 2
    return True


def primes_upto(n: int) -> np.ndarray:
    """Primes ``<= n`` by the sieve of Eratosthenes."""
    if n < 2:
        return np.array([], dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for q in range(3, math.isqrt(n) + 1, 2):
        if sieve[q]:
            sieve[q * q::2 * q] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def limit_from(p: int, theta: float | None = None, xmax: float | None = None) -> int:
    """``floor(p**theta)`` (tolerant of rounding) or ``floor(xmax)``."""
    if (theta is None) == (xmax is None):
        raise InvalidInputError("give exactly one of theta and xmax")
    if xmax is not None:
        if xmax < 0:
            raise InvalidInputError("xmax must be nonnegative")
        return int(math.floor(xmax))
    if theta < 0:
        raise InvalidInputError("theta must be nonnegative")
    return int(math.floor(p**theta * (1 + 1e-12)))


@dataclass(frozen=True)
class PrimeContext:
    """An odd prime with its Legendre-symbol table."""

    p: int
    table: np.ndarray = field(init=False, repr=False, compare=False)
    nonresidue_prefix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = int(self.p)
        if p < 3 or not is_prime(p):
            raise InvalidInputError(f"{p} is not an odd prime")
        table = np.full(p, -1, dtype=np.int8)
        table[0] = 0
        k = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
        table[(k * k) % p] = 1
        table.setflags(write=False)
        prefix = np.concatenate(([0], np.cumsum(table == -1)))
        prefix.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "nonresidue_prefix", prefix)
        self._check()

    def _check(self) -> None:
        p = self.p
        if int(np.sum(self.table == -1)) != (p - 1) // 2:
            raise ConvAsymError("Legendre table does not split evenly")
        rng = random.Random(p)
        for _ in range(100):
            m, n = rng.randrange(p), rng.randrange(p)
            if self.table[(m * n) % p] != self.table[m] * self.table[n]:
                raise ConvAsymError("Legendre table is not multiplicative")

    def symbol(self, n):
        return self.table[np.asarray(n, dtype=np.int64) % self.p]


def legendre(n: int, ctx: PrimeContext) -> int:
    return int(ctx.table[int(n) % ctx.p])


def euler_criterion(n: int, p: int) -> int:
    """Legendre symbol by modular exponentiation (independent of the table)."""
    r = pow(int(n) % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else int(r)


def n0(ctx: PrimeContext) -> int:
    """Least quadratic nonresidue; checked to be prime."""
    idx = int(np.argmax(ctx.table[2:] == -1)) + 2
    if not is_prime(idx):
        raise ConvAsymError(f"least nonresidue {idx} mod {ctx.p} is not prime")
    return idx


def count_nonresidues(ctx: PrimeContext, X: float) -> int:
    """``#{1 <= n <= X : (n|p) = -1}``."""
    if X < 0:
        raise InvalidInputError("X must be nonnegative")
    N = int(math.floor(X))
    full, rem = divmod(N, ctx.p)
    return full * (ctx.p - 1) // 2 + int(ctx.nonresidue_prefix[rem + 1])


# -- multiplicative sieves -----------------------------------------------------


class _Factors(NamedTuple):
    omega: np.ndarray  # distinct prime factors
    omega_nr: np.ndarray  # distinct nonresidue prime factors
    squarefree: np.ndarray
    nr_square_free: np.ndarray  # no q^2 | n with (q|p) = -1


def _factor_sieve(ctx: PrimeContext, N: int) -> _Factors:
    omega = np.zeros(N + 1, dtype=np.int8)
    omega_nr = np.zeros(N + 1, dtype=np.int8)
    sqfree = np.ones(N + 1, dtype=bool)
    nr_sqfree = np.ones(N + 1, dtype=bool)
    primes = primes_upto(N)
    nonres = ctx.table[primes % ctx.p] == -1
    for q, bad in zip(primes.tolist(), nonres.tolist()):
        omega[q::q] += 1
        if bad:
            omega_nr[q::q] += 1
        if q * q <= N:
            sqfree[q * q::q * q] = False
            if bad:
                nr_sqfree[q * q::q * q] = False
    return _Factors(omega, omega_nr, sqfree, nr_sqfree)


def _k_set(f: _Factors) -> np.ndarray:
    """Mask of ``k > 1``, squarefree, every prime factor a nonresidue."""
    mask = f.squarefree & (f.omega == f.omega_nr) & (f.omega > 0)
    mask[:2] = False
    return mask


def s_pj(ctx: PrimeContext, j: int, theta: float | None = None, xmax: float | None = None, exact: bool = False) -> Union[float, Fraction]:
    """``sum 1/k`` over squarefree ``k <= p**theta`` with ``j`` prime factors, all nonresidues."""
    if j < 1:
        raise InvalidInputError("j must be >= 1")
    N = limit_from(ctx.p, theta, xmax)
    if N > SPJ_CAP:
        raise ResourceLimitError(f"p^theta = {N} exceeds cap {SPJ_CAP}")
    if N < 2:
        return Fraction(0) if exact else 0.0
    f = _factor_sieve(ctx, N)
    ks = np.nonzero(_k_set(f) & (f.omega == j))[0]
    if exact:
        return sum((Fraction(1, int(k)) for k in ks), Fraction(0))
    return math.fsum(1.0 / ks.astype(float))


def psi_p(ctx: PrimeContext, x: float) -> float:
    """``sum_{n <= x} Lambda(n) (n|p)`` over prime powers."""
    if x > PSI_CAP:
        raise ResourceLimitError(f"x = {x} exceeds cap {PSI_CAP}")
    N = int(math.floor(x))
    if N < 2:
        return 0.0
    primes = primes_upto(N)
    logs = np.log(primes.astype(float))
    terms = [logs * ctx.table[primes % ctx.p]]
    for q, lq in zip(primes[primes <= math.isqrt(N)].tolist(), logs.tolist()):
        qm = q * q
        while qm <= N:
            terms.append(np.array([lq * ctx.table[qm % ctx.p]]))
            qm *= q
    return math.fsum(np.concatenate(terms))


def chebyshev_psi(x: float) -> float:
    """``sum_{n <= x} Lambda(n)``: the trivial majorant of ``|psi_p|``."""
    N = int(math.floor(x))
    if N < 2:
        return 0.0
    terms = []
    for q in primes_upto(N).tolist():
        e, qm = 0, q
        while qm <= N:
            e += 1
            qm *= q
        terms.append(e * math.log(q))
    return math.fsum(terms)


# -- inclusion-exclusion ----------------------------------------------------------


class IdentityResult(NamedTuple):
    lhs: int
    rhs: int

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def inclusion_exclusion_identity(ctx: PrimeContext, theta: float | None = None, xmax: float | None = None) -> IdentityResult:
    """Signed pair count against ``|N_1|``.

    ``lhs`` sums ``(-1)^(omega(k)+1)`` over pairs ``(m, k)`` with ``k > 1``
    squarefree built from nonresidue primes, ``mk <= X``,
    ``(m|p) = -(k|p)`` and no nonresidue prime squared dividing ``mk``.
    ``rhs`` counts nonresidues ``n <= X`` with that square condition.
    """
    X = limit_from(ctx.p, theta, xmax)
    if X > INCEXC_CAP:
        raise ResourceLimitError(f"X = {X} exceeds cap {INCEXC_CAP}")
    if X < 2:
        return IdentityResult(0, 0)
    f = _factor_sieve(ctx, X)
    leg = ctx.symbol(np.arange(X + 1))
    rhs = int(np.sum((leg == -1) & f.nr_square_free))
    lhs = 0
    for k in np.nonzero(_k_set(f))[0].tolist():
        m = np.arange(1, X // k + 1)
        ok = (leg[m] == -leg[k]) & f.nr_square_free[m * k]
        sign = 1 if f.omega[k] % 2 == 1 else -1  # (-1)^(omega+1)
        lhs += sign * int(ok.sum())
    return IdentityResult(lhs, rhs)


def inclusion_exclusion_profile(ctx: PrimeContext, xmax: int) -> tuple[np.ndarray, np.ndarray]:
    """``(lhs[X], rhs[X])`` for every integer ``0 <= X <= xmax`` in one pass.

    Each admissible pair contributes its sign at ``n = mk``; prefix sums give
    the pair sums for all cut-offs at once.
    """
    X = int(xmax)
    if X > INCEXC_CAP:
        raise ResourceLimitError(f"X = {X} exceeds cap {INCEXC_CAP}")
    if X < 2:
        return np.zeros(X + 1, dtype=np.int64), np.zeros(X + 1, dtype=np.int64)
    f = _factor_sieve(ctx, X)
    leg = ctx.symbol(np.arange(X + 1))
    rhs = np.cumsum((leg == -1) & f.nr_square_free).astype(np.int64)
    contrib = np.zeros(X + 1, dtype=np.int64)
    for k in np.nonzero(_k_set(f))[0].tolist():
        m = np.arange(1, X // k + 1)
        n = m * k
        ok = (leg[m] == -leg[k]) & f.nr_square_free[n]
        contrib[n[ok]] += 1 if f.omega[k] % 2 == 1 else -1
    return np.cumsum(contrib), rhs


# -- ordered prime tuples -----------------------------------------------------------


def r_j_bruteforce(ctx: PrimeContext, k: int, j: int, primes: Sequence[int] | None = None) -> int:
    """Ordered ``j``-tuples of nonresidue primes with product ``k`` (by enumeration)."""
    if primes is None:
        primes = [q for q in primes_upto(k).tolist() if legendre(q, ctx) == -1]
    primes = [q for q in primes if k % q == 0]
    count = 0
    for tup in product(primes, repeat=j):
        if math.prod(tup) == k:
            count += 1
    return count


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    q = 2
    while q * q <= n:
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
        q += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def r_j_formula(ctx: PrimeContext, k: int, j: int) -> int:
    """Multinomial count ``j! / prod(e_i!)`` when ``k`` is built from nonresidue primes with ``Omega(k) = j``."""
    fac = factorize(k)
    if k < 2 or any(legendre(q, ctx) != -1 for q in fac) or sum(fac.values()) != j:
        return 0
    return math.factorial(j) // math.prod(math.factorial(e) for e in fac.values())


# -- density profile -----------------------------------------------------------------


@dataclass
class NonresidueStats:
    p: int
    n0: int
    theta: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# p={self.p},n0={self.n0}\n")
        buf.write("theta,count,density\n")
        for t, c, dns in zip(self.theta, self.counts, self.density):
            buf.write(f"{float(t):.17g},{int(c)},{float(dns):.17g}\n")
        return buf.getvalue()


def density_profile(ctx: PrimeContext, theta_grid: Sequence[float], cap: int = SPJ_CAP * 100) -> NonresidueStats:
    """``|N_p(p^theta)| / p^theta`` on a grid of exponents."""
    th = np.asarray(theta_grid, dtype=float)
    counts, dens = [], []
    for t in th:
        X = ctx.p ** float(t)
        if X > cap:
            raise ResourceLimitError(f"p^theta = {X:.4g} exceeds cap {cap}")
        c = count_nonresidues(ctx, X)
        counts.append(c)
        dens.append(c / X if X > 0 else 0.0)
    return NonresidueStats(ctx.p, n0(ctx), th, np.array(counts, dtype=np.int64), np.array(dens))


def primes_near(center: int, count: int) -> list[int]:
    """The ``count`` odd primes nearest ``center`` (ties to the smaller)."""
    found: list[int] = []
    lo, hi = center, center + 1
    while len(found) < count:
        if lo >= 3 and is_prime(lo):
            found.append(lo)
        if len(found) < count and is_prime(hi):
            found.append(hi)
        lo -= 1
        hi += 1
    return sorted(found)
