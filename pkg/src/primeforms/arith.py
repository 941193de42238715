"""Exact elementary arithmetic kernels: sieve, phi, mu, valuations,
radicals and Ramanujan sums. Everything here is integer arithmetic."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


class PrimeTable:
    """Primes up to ``limit`` with O(1) membership lookup.

    Immutable after construction; safe for concurrent shared reads.
    """

    __slots__ = ("limit", "primes", "_mask")

    def __init__(self, limit: int, primes: tuple[int, ...], mask: bytes):
        self.limit = limit
        self.primes = primes
        self._mask = mask

    def is_prime(self, n: int) -> bool:
        if n < 0 or n > self.limit:
            raise ValueError(f"{n} outside sieve range [0, {self.limit}]")
        return self._mask[n] == 1

    def __len__(self) -> int:
        return len(self.primes)

    def __repr__(self) -> str:
        return f"PrimeTable(limit={self.limit}, count={len(self.primes)})"


def sieve_primes(limit: int) -> PrimeTable:
    """Eratosthenes sieve over a flat byte array; limit < 2 gives an empty table."""
    if limit < 0:
        raise ValueError("limit must be non-negative")
    if limit < 2:
        return PrimeTable(limit, (), bytes(limit + 1))
    mask = np.ones(limit + 1, dtype=np.uint8)
    mask[:2] = 0
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = 0
    primes = tuple(int(p) for p in np.flatnonzero(mask))
    return PrimeTable(limit, primes, mask.tobytes())


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division, {p: exponent}. n >= 1."""
    if n < 1:
        raise ValueError("n must be positive")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def euler_phi(n: int) -> int:
    """Count of 1 <= k <= n coprime to n."""
    if n < 1:
        raise ValueError("n must be positive")
    result = n
    for p in factorize(n):
        result -= result // p
    return result


def moebius(n: int) -> int:
    if n < 1:
        raise ValueError("n must be positive")
    fac = factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def p_adic_valuation(p: int, n: int) -> int:
    """Largest e with p^e | n; n must be non-zero."""
    if n == 0:
        raise ValueError("valuation of 0 is undefined")
    if p < 2:
        raise ValueError("p must be a prime >= 2")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def radical(n: int) -> int:
    """Product of the distinct prime divisors; radical(1) = 1."""
    if n < 1:
        raise ValueError("n must be positive")
    out = 1
    for p in factorize(n):
        out *= p
    return out


def _ramanujan_prime_power(p: int, l: int, r: int) -> int:
    # c_{p^l}(r): 0 unless p^(l-1) | r; -p^(l-1) if exactly; phi(p^l) if p^l | r.
    pl1 = p ** (l - 1)
    if r % pl1 != 0:
        return 0
    if r % (pl1 * p) != 0:
        return -pl1
    return pl1 * (p - 1)


def ramanujan_sum(q: int, r: int) -> int:
    """c_q(r), the sum of e(a r / q) over reduced residues a mod q.

    Evaluated multiplicatively over the prime powers of q; the direct
    root-of-unity sum is kept as a test oracle only.
    """
    if q < 1:
        raise ValueError("q must be positive")
    out = 1
    for p, l in factorize(q).items():
        out *= _ramanujan_prime_power(p, l, r)
        if out == 0:
            return 0
    return out


@lru_cache(maxsize=None)
def _shared_table(limit: int) -> PrimeTable:
    # Process-wide sieve cache for the hot callers (counting, experiments).
    return sieve_primes(limit)


def primes_up_to(limit: int) -> tuple[int, ...]:
    return _shared_table(int(limit)).primes
