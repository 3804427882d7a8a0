"""Integer factorization, multiplicative-function sieves and Ramanujan sums.

Everything downstream leans on two workhorses here: ``sieve_dk`` (tables of
the generalised divisor function d_k, built by iterated Dirichlet-convolution
sieve passes) and ``ramanujan_sum`` (the closed form via mu and phi; the
defining exponential sum is used only as a test oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import CapacityError

# Cap on sieve table length; guards against accidental huge allocations.
SIEVE_CAPACITY = 10**8

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _check_capacity(n: int, cap: int | None = None) -> None:
    limit = SIEVE_CAPACITY if cap is None else cap
    if n < 1:
        raise ValueError(f"table limit must be positive, got {n}")
    if n > limit:
        raise CapacityError(f"table limit {n} exceeds capacity {limit}")


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond the 2^62 input cap."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """Brent's cycle variant; n must be odd, composite, not a prime power hit
    by trial division.  Deterministic: the polynomial increment is swept in
    a fixed order."""
    for c in range(1, 100):
        f = lambda x: (x * x + c) % n
        x, y, d = 2, 2, 1
        while d == 1:
            x = f(x)
            y = f(f(y))
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
    raise ArithmeticError(f"rho failed on {n}")  # unreachable for n <= 2^62


@dataclass(frozen=True)
class FactoredInt:
    """Canonical factorization: primes strictly increasing, exponents >= 1."""

    value: int
    factors: tuple[tuple[int, int], ...]

    def divisors(self) -> list[int]:
        divs = [1]
        for p, e in self.factors:
            divs = [d * p**j for d in divs for j in range(e + 1)]
        return sorted(divs)

    @property
    def radical(self) -> int:
        return math.prod(p for p, _ in self.factors)


@lru_cache(maxsize=200_000)
def factorize(n: int) -> FactoredInt:
    if not 1 <= n <= 2**62:
        raise ValueError(f"factorize expects 1 <= n <= 2^62, got {n}")
    if n == 1:
        return FactoredInt(1, ())
    factors: dict[int, int] = {}
    rest = n
    for p in _MR_BASES:
        while rest % p == 0:
            factors[p] = factors.get(p, 0) + 1
            rest //= p
    # finish small trial division up to 2^10 before handing to rho
    p = 41
    while p * p <= rest and p < 1024:
        while rest % p == 0:
            factors[p] = factors.get(p, 0) + 1
            rest //= p
        p += 2
    stack = [rest] if rest > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_prime(m):
            factors[m] = factors.get(m, 0) + 1
            continue
        root = math.isqrt(m)
        if root * root == m:
            stack.extend((root, root))
            continue
        d = _pollard_rho(m)
        stack.extend((d, m // d))
    assert math.prod(p**e for p, e in factors.items()) == n
    return FactoredInt(n, tuple(sorted(factors.items())))


def mobius_of(n: int) -> int:
    mu = 1
    for _, e in factorize(n).factors:
        if e >= 2:
            return 0
        mu = -mu
    return mu


def phi_of(n: int) -> int:
    phi = 1
    for p, e in factorize(n).factors:
        phi *= p ** (e - 1) * (p - 1)
    return phi


def is_squarefree(n: int) -> bool:
    return mobius_of(n) != 0


@dataclass(frozen=True)
class DivisorTable:
    """values[n] = d_k(n) for 1 <= n <= limit (index 0 unused)."""

    k: int
    limit: int
    values: np.ndarray

    def __getitem__(self, n: int) -> int:
        if not 1 <= n <= self.limit:
            raise IndexError(f"n={n} outside table range 1..{self.limit}")
        return int(self.values[n])


def sieve_dk(k: int, limit: int, cap: int | None = None) -> DivisorTable:
    """d_k table by k-1 successive Dirichlet convolutions with 1.

    d_k(n) counts ordered k-tuples of positive integers with product n;
    d_1 is identically 1.
    """
    if not 1 <= k <= 8:
        raise ValueError(f"sieve_dk supports 1 <= k <= 8, got {k}")
    _check_capacity(limit, cap)
    vals = np.ones(limit + 1, dtype=np.int64)
    vals[0] = 0
    for _ in range(k - 1):
        out = np.zeros(limit + 1, dtype=np.int64)
        _kernels.dirichlet_pass_int64(vals, out)
        vals = out
    if k > 1 and limit >= 1:
        peak = int(vals.max())
        if peak >= 2**62:  # pragma: no cover - unreachable for the k,N caps
            raise OverflowError("d_k table exceeds checked 64-bit range")
    return DivisorTable(k, limit, vals)


def mobius_sieve(limit: int, cap: int | None = None) -> np.ndarray:
    _check_capacity(limit, cap)
    return _kernels.mobius_sieve(limit)


def phi_sieve(limit: int, cap: int | None = None) -> np.ndarray:
    _check_capacity(limit, cap)
    return _kernels.phi_sieve(limit)


def spf_sieve(limit: int, cap: int | None = None) -> np.ndarray:
    _check_capacity(limit, cap)
    return _kernels.spf_sieve(limit)


@lru_cache(maxsize=200_000)
def ramanujan_sum(d: int, h: int) -> int:
    """c_d(h) = mu(d/(d,h)) * phi(d) / phi(d/(d,h)).

    Always an integer; h = 0 gives phi(d).  The exponential-sum definition
    is deliberately not used here (it is the independent test oracle).
    """
    if d < 1:
        raise ValueError(f"modulus must be positive, got {d}")
    g = math.gcd(d, abs(h))
    m = d // g
    mu = mobius_of(m)
    if mu == 0:
        return 0
    return mu * (phi_of(d) // phi_of(m))


def ramanujan_row(limit: int, h: int, mu: np.ndarray | None = None,
                  phi: np.ndarray | None = None) -> np.ndarray:
    """c_d(h) for all 1 <= d <= limit as an int64 array (index 0 is zero)."""
    _check_capacity(limit)
    if mu is None:
        mu = mobius_sieve(limit)
    if phi is None:
        phi = phi_sieve(limit)
    d = np.arange(limit + 1, dtype=np.int64)
    g = np.gcd(d, abs(h))
    g[0] = 1
    m = d // g
    out = mu[m].astype(np.int64) * (phi // np.maximum(phi[m], 1))
    out[0] = 0
    return out


def gcd_infty(d1: int, d2: int) -> int:
    """Largest divisor of d1 supported on the primes dividing d2.

    Equivalently gcd(d1, d2^t) for any t with d2^t saturating d1's prime
    powers; the exponent always comes from the first argument.
    """
    if d1 < 1 or d2 < 1:
        raise ValueError("gcd_infty expects positive arguments")
    out = 1
    g = math.gcd(d1, d2)
    while g > 1:
        out *= g
        d1 //= g
        g = math.gcd(d1, g)
    return out
