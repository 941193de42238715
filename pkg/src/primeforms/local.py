"""Local solvability of a1 p1 + ... + a4 p4 = 0, unit-tuple densities
rho_a(p^l), the local factors sigma(a, Q), the truncated singular series,
and the archimedean (cone volume) singular integral.

Rationals are exact ``fractions.Fraction`` values; floats only enter in
the Monte Carlo estimator and the log-derived modulus parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import euler_phi, factorize, sieve_primes


def validate_coeffs(a) -> tuple[int, int, int, int]:
    """Check that a is a primitive 4-tuple of non-zero integers."""
    t = tuple(int(x) for x in a)
    if len(t) != 4:
        raise ValueError("coefficient tuple must have exactly 4 entries")
    if any(x == 0 for x in t):
        raise ValueError("coefficient entries must be non-zero")
    if math.gcd(*t) != 1:
        raise ValueError("coefficient tuple must be primitive (gcd 1)")
    return t


def lambda_count(a, p: int) -> int:
    """Number of coordinates of a divisible by the prime p."""
    return sum(1 for x in a if x % p == 0)


def rho_prime_power(a, p: int, l: int) -> int:
    """Number of unit tuples b mod p^l with <a, b> = 0 mod p^l.

    Closed form (phi(p^l)^4 + (p-1) phi(p^l)^lam (-p^(l-1))^(4-lam)) / p^l
    with lam the number of coordinates divisible by p; always a
    non-negative integer.
    """
    a = validate_coeffs(a)
    if l < 1:
        raise ValueError("l must be >= 1")
    lam = lambda_count(a, p)
    phi = euler_phi(p**l)
    num = phi**4 + (p - 1) * phi**lam * (-(p ** (l - 1))) ** (4 - lam)
    q, r = divmod(num, p**l)
    if r:
        raise AssertionError("rho closed form must be divisible by p^l")
    return q


def sigma_prime_power(a, p: int, l: int = 1) -> Fraction:
    """sigma(a, p^l) = 1 + (p-1) (-p^(l-1)/phi(p^l))^(4-lam); independent of l."""
    a = validate_coeffs(a)
    if l < 1:
        raise ValueError("l must be >= 1")
    lam = lambda_count(a, p)
    return 1 + (p - 1) * Fraction(-1, p - 1) ** (4 - lam)


def sigma(a, Q: int) -> Fraction:
    """Local density sigma(a, Q) = Q/phi(Q)^4 * #{b in ((Z/Q)^*)^4 : Q | <a,b>}.

    Evaluated multiplicatively over the prime powers of Q (CRT);
    sigma(a, 1) = 1.
    """
    a = validate_coeffs(a)
    if Q < 1:
        raise ValueError("Q must be positive")
    out = Fraction(1)
    for p in factorize(Q):
        out *= sigma_prime_power(a, p)
        if out == 0:
            return Fraction(0)
    return out


@dataclass(frozen=True)
class Modulus:
    """Smoothing parameters for a counting cutoff B: alpha = log B,
    w = loglog B / logloglog B, and W = prod_{p<=w} p^(ceil(log w/log p)+1).

    ``factors`` records W's construction so later code never factors the
    (possibly enormous) integer W.
    """

    B: float
    alpha: float
    w: float
    W: int
    factors: tuple[tuple[int, int], ...]

    @property
    def rad_W(self) -> int:
        out = 1
        for p, _ in self.factors:
            out *= p
        return out

    @property
    def W_over_rad(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p ** (e - 1)
        return out


def _prime_exponent(p: int, w: float) -> int:
    # ceil(log w / log p) as the least e with p^e >= w, avoiding float division.
    e = 1
    pe = p
    while pe < w:
        pe *= p
        e += 1
    return e + 1


def modulus_from_w(B: float, w: float) -> Modulus:
    """Build the modulus for an explicitly given smoothing cutoff w."""
    alpha = math.log(B)
    if w < 2:
        return Modulus(B, alpha, w, 1, ())
    primes = sieve_primes(int(math.floor(w))).primes
    factors = tuple((p, _prime_exponent(p, w)) for p in primes)
    W = 1
    for p, e in factors:
        W *= p**e
    return Modulus(B, alpha, w, W, factors)


def modulus_params(B: float) -> Modulus:
    """Modulus parameters at cutoff B >= 3.

    For loglog B <= 1 (B <= e^e, where the defining quotient degenerates)
    the product is empty and W = 1.
    """
    if B < 3:
        raise ValueError("B must be >= 3")
    t = math.log(math.log(B))
    w = 0.0 if t <= 1.0 else t / math.log(t)
    return modulus_from_w(B, w)


@dataclass(frozen=True)
class LocalSolvability:
    solvable: bool
    witness: str | int | None


def is_locally_solvable(a) -> LocalSolvability:
    """Mixed signs, even divisibility count at 2, and divisibility count
    at most 2 at every odd prime dividing a coordinate.

    The witness is "same-sign" or the first offending prime.
    """
    a = validate_coeffs(a)
    if all(x > 0 for x in a) or all(x < 0 for x in a):
        return LocalSolvability(False, "same-sign")
    if lambda_count(a, 2) % 2 == 1:
        return LocalSolvability(False, 2)
    odd_primes = set()
    for x in a:
        for p in factorize(abs(x)):
            if p > 2:
                odd_primes.add(p)
    for p in sorted(odd_primes):
        if lambda_count(a, p) >= 3:
            return LocalSolvability(False, p)
    return LocalSolvability(True, None)


def singular_series(a, B: float) -> Fraction:
    """Truncated singular series sigma(a, W) at the modulus W of B."""
    a = validate_coeffs(a)
    mod = modulus_params(B)
    out = Fraction(1)
    for p, _ in mod.factors:
        out *= sigma_prime_power(a, p)
        if out == 0:
            return Fraction(0)
    return out


def delta_ratio(a) -> Fraction:
    """min |a_i| / max |a_i|, in (0, 1]."""
    mags = [abs(int(x)) for x in a]
    if any(m == 0 for m in mags):
        raise ValueError("entries must be non-zero")
    return Fraction(min(mags), max(mags))


def singular_integral_lower_bound(a, gamma: float) -> float:
    """delta^3 * min(gamma*delta, 1), with delta = min|a_i|/max|a_i|.

    Returns 0 for same-sign tuples (no positive-orthant solutions).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    t = tuple(int(x) for x in a)
    if all(x > 0 for x in t) or all(x < 0 for x in t):
        return 0.0
    d = float(delta_ratio(t))
    return d**3 * min(gamma * d, 1.0)


@dataclass(frozen=True)
class TauEstimate:
    value: float
    std_error: float
    samples: int
    seed: int


_MC_BLOCK = 1 << 18


def tau_monte_carlo(a, gamma: float, samples: int, seed: int) -> TauEstimate:
    """Monte Carlo estimate of gamma * vol({u in unit ball, u >= 0 :
    |<a,u>| <= ||a|| ||u|| / (2 gamma)}).

    Uniform points of [0,1]^4 are Bernoulli trials for (in ball) and
    (in cone); the estimate gamma * p_hat is unbiased with binomial
    standard error. Counter-based PRNG (Philox), block-seeded, so the
    result depends only on (samples, seed).
    """
    a = tuple(int(x) for x in a)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if samples < 10**4:
        raise ValueError("need at least 10^4 samples")
    avec = np.array(a, dtype=np.float64)
    na2 = float(np.dot(avec, avec))
    four_g2 = 4.0 * gamma * gamma
    hits = 0
    done = 0
    block_idx = 0
    while done < samples:
        n = min(_MC_BLOCK, samples - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, block_idx]))
        u = rng.random((n, 4))
        r2 = np.sum(u * u, axis=1)
        ip = u @ avec
        ok = (r2 <= 1.0) & (four_g2 * ip * ip <= na2 * r2)
        hits += int(np.count_nonzero(ok))
        done += n
        block_idx += 1
    p = hits / samples
    se = math.sqrt(p * (1.0 - p) / samples)
    return TauEstimate(gamma * p, gamma * se, samples, seed)


@dataclass(frozen=True)
class LocalProfile:
    """Per-prime divisibility data and sigma factors for a coefficient tuple."""

    a: tuple[int, int, int, int]
    solvable: bool
    witness: str | int | None
    factors: tuple[tuple[int, Fraction, int], ...]  # (p, sigma_p, lambda)

    def to_json(self) -> str:
        return json.dumps(
            {
                "a": list(self.a),
                "solvable": self.solvable,
                "witness": self.witness,
                "factors": [
                    {
                        "p": p,
                        "l_independent_sigma": f"{s.numerator}/{s.denominator}",
                        "lambda": lam,
                    }
                    for p, s, lam in self.factors
                ],
            }
        )


def local_profile(a) -> LocalProfile:
    """Profile over p = 2 and every odd prime dividing a coordinate."""
    a = validate_coeffs(a)
    sol = is_locally_solvable(a)
    primes = {2}
    for x in a:
        primes.update(factorize(abs(x)))
    factors = tuple(
        (p, sigma_prime_power(a, p), lambda_count(a, p)) for p in sorted(primes)
    )
    return LocalProfile(a, sol.solvable, sol.witness, factors)
