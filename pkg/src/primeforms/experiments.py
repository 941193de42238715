"""Desk-scale experiments: the primitive-tuple counts #L(A), the locally
solvable counts #L^loc(A), the odd-coprime family L'(A) with its series
constant, coprimality counting lemmas, and the size-bound fraction
rho(A) driven by the minimal-solution search."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._orbits import expand_sign_classes, iter_sorted_multisets
from .arith import factorize, moebius, primes_up_to
from .errors import BudgetExceededError
from .local import is_locally_solvable
from .solver import bound_threshold, min_prime_solution, sup_norm

ENUMERATION_A_CAP = 300.0


def _check_A(A: float, minimum: float = 2.0):
    if A < minimum:
        raise ValueError(f"A must be >= {minimum}")
    if A > ENUMERATION_A_CAP:
        raise BudgetExceededError(f"A = {A} exceeds enumeration cap {ENUMERATION_A_CAP}")


def enumerate_L(A: float) -> int:
    """#{a in Z^4, entries non-zero, gcd 1, ||a|| <= A}, exactly.

    Moebius over the common divisor d, with the d-term counted through
    the convolution of the two-coordinate norm histogram; pure integer
    arithmetic throughout.
    """
    _check_A(A)
    a2 = int(math.floor(A * A))
    top = math.isqrt(max(a2 - 3, 0))
    vals = np.arange(1, top + 1, dtype=np.int64)
    sq = vals * vals
    pair_norm = (sq[:, None] + sq[None, :]).ravel()
    g2 = np.bincount(pair_norm, minlength=a2 + 1)[: a2 + 1] * 4
    cum = np.cumsum(g2)

    def count4(m: int) -> int:
        if m < 4:
            return 0
        s = np.nonzero(g2[: m + 1])[0]
        return int(np.sum(g2[s] * cum[m - s]))

    total = 0
    for d in range(1, int(math.floor(A / 2)) + 1):
        mu = moebius(d)
        if mu:
            total += mu * count4(a2 // (d * d))
    return total


def iter_L(A: float):
    """Generator over L(A); intended for small A (oracle tests)."""
    _check_A(A)
    a2 = int(math.floor(A * A))
    top = math.isqrt(max(a2 - 3, 0))
    rng = [v for s in range(1, top + 1) for v in (s, -s)]
    for x1 in rng:
        for x2 in rng:
            if x1 * x1 + x2 * x2 + 2 > a2:
                continue
            for x3 in rng:
                n3 = x1 * x1 + x2 * x2 + x3 * x3
                if n3 + 1 > a2:
                    continue
                g3 = math.gcd(math.gcd(abs(x1), abs(x2)), abs(x3))
                for x4 in rng:
                    if n3 + x4 * x4 <= a2 and math.gcd(g3, abs(x4)) == 1:
                        yield (x1, x2, x3, x4)


def _is_pow2(arr: np.ndarray) -> np.ndarray:
    return (arr & (arr - 1)) == 0


def _positive_counts(A: float) -> tuple[int, int]:
    """Over positive tuples with ||a|| <= A: (#primitive, #primitive with
    the divisibility pattern of a locally solvable tuple).

    The pattern is: an even number of even coordinates, and no odd prime
    dividing three coordinates, i.e. every three-coordinate gcd is a
    power of two.
    """
    a2 = int(math.floor(A * A))
    top = math.isqrt(max(a2 - 3, 0))
    if top < 1:
        return 0, 0
    vals = np.arange(1, top + 1, dtype=np.int64)
    m3, m4 = np.meshgrid(vals, vals, indexing="ij")
    sq34 = m3 * m3 + m4 * m4
    g34 = np.gcd(m3, m4)
    par34 = (m3 & 1 == 0).astype(np.int8) + (m4 & 1 == 0).astype(np.int8)
    t34_cache: dict[int, np.ndarray] = {}
    n_prim = 0
    n_ok = 0
    for v1 in range(1, top + 1):
        rem1 = a2 - v1 * v1
        if rem1 < 3:
            break
        t134 = _is_pow2(np.gcd(np.gcd(v1, m3), m4))
        e1 = 1 - (v1 & 1)
        for v2 in range(1, math.isqrt(rem1 - 2) + 1):
            rem = rem1 - v2 * v2
            inball = sq34 <= rem
            g12 = math.gcd(v1, v2)
            prim = inball & (np.gcd(g12, g34) == 1)
            c_prim = int(np.count_nonzero(prim))
            if c_prim == 0:
                continue
            n_prim += c_prim
            t234 = t34_cache.get(v2)
            if t234 is None:
                t234 = _is_pow2(np.gcd(np.gcd(v2, m3), m4))
                t34_cache[v2] = t234
            parity_ok = ((e1 + (1 - (v2 & 1)) + par34) & 1) == 0
            arith = (
                parity_ok
                & _is_pow2(np.gcd(g12, m3))
                & _is_pow2(np.gcd(g12, m4))
                & t134
                & t234
            )
            n_ok += int(np.count_nonzero(prim & arith))
    return n_prim, n_ok


def enumerate_L_loc(A: float) -> int:
    """#{a in L(A) : locally solvable}, exactly.

    Signs and magnitudes decouple: each admissible magnitude pattern
    carries exactly 14 mixed-sign assignments out of 16.
    """
    _check_A(A)
    return 14 * _positive_counts(A)[1]


def iter_L_loc(A: float):
    for a in iter_L(A):
        if is_locally_solvable(a).solvable:
            yield a


def enumerate_L_prime(A: float) -> int:
    """#{a in N^4 : max a_i <= A (sup norm), all a_i odd,
    gcd(a1 a2, a3) = gcd(a1 a2, a4) = 1}, exactly."""
    if A < 1:
        raise ValueError("A must be >= 1")
    _check_A(A, minimum=1.0)
    top = int(math.floor(A))
    odds = np.arange(1, top + 1, 2, dtype=np.int64)
    if odds.size == 0:
        return 0
    cop_cache: dict[int, int] = {}
    total = 0
    for v1 in odds:
        for v2 in odds:
            m = int(v1 * v2)
            c = cop_cache.get(m)
            if c is None:
                c = int(np.count_nonzero(np.gcd(odds, m) == 1))
                cop_cache[m] = c
            total += c * c
    return total


def iter_L_prime(A: float):
    top = int(math.floor(A))
    for a1 in range(1, top + 1, 2):
        for a2 in range(1, top + 1, 2):
            m = a1 * a2
            for a3 in range(1, top + 1, 2):
                if math.gcd(m, a3) != 1:
                    continue
                for a4 in range(1, top + 1, 2):
                    if math.gcd(m, a4) == 1:
                        yield (a1, a2, a3, a4)


@dataclass(frozen=True)
class SeriesConstant:
    value: float
    tail_estimate: float
    truncation: int


def _odd_squarefree_data(limit: int):
    """Arrays (n, mu(n), theta(n)) over odd squarefree n <= limit, where
    theta(n) = prod_{p|n} (2 - 1/p) is the divisor sum of phi(l)/l."""
    ns, mus, thetas = [], [], []
    for n in range(1, limit + 1, 2):
        fac = factorize(n)
        if any(e > 1 for e in fac.values()):
            continue
        ns.append(n)
        mus.append(-1 if len(fac) % 2 else 1)
        th = 1.0
        for p in fac:
            th *= 2.0 - 1.0 / p
        thetas.append(th)
    return (
        np.array(ns, dtype=np.int64),
        np.array(mus, dtype=np.float64),
        np.array(thetas, dtype=np.float64),
    )


def _series_partial(truncation: int) -> float:
    ns, mus, thetas = _odd_squarefree_data(truncation)
    theta_by_n = np.zeros(truncation + 1)
    theta_by_n[ns] = thetas
    psi = mus * thetas / (ns.astype(np.float64) ** 2)
    total = 0.0
    chunk = 256
    for lo in range(0, ns.size, chunk):
        d = ns[lo : lo + chunk]
        g = np.gcd(d[:, None], ns[None, :])
        term = (psi[lo : lo + chunk, None] * psi[None, :]) * (
            g.astype(np.float64) / theta_by_n[g]
        )
        total += float(np.sum(term))
    return total / 16.0


def lprime_series_constant(truncation: int) -> SeriesConstant:
    """Truncated double series for the leading density of L'(A): one
    sixteenth of sum over odd squarefree d, k <= truncation of
    mu(d) mu(k) / (dk)^2 * (d;k) * sum_{l | dk/(d;k)} phi(l)/l.

    The tail estimate compares against the half-truncation partial sum
    and adds a 1/truncation completion term.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    value = _series_partial(truncation)
    half = _series_partial(max(truncation // 2, 1))
    tail = abs(value - half) + 16.0 / truncation
    return SeriesConstant(value, tail, truncation)


def coprime_count(X: float, q: int) -> int:
    """Exact #{1 <= n <= X : gcd(n, q) = 1} by inclusion-exclusion over
    the prime divisors of q."""
    if X < 1:
        raise ValueError("X must be >= 1")
    if q < 1:
        raise ValueError("q must be positive")
    x = int(math.floor(X))
    primes = list(factorize(q))
    total = 0
    for mask in range(1 << len(primes)):
        d = 1
        bits = 0
        for i, p in enumerate(primes):
            if mask >> i & 1:
                d *= p
                bits += 1
        total += (-1) ** bits * (x // d)
    return total


def odd_pair_divisibility_count(X: float, q: int) -> int:
    """Exact #{n, m <= X odd : q | n m}; zero for even q."""
    if X < 1:
        raise ValueError("X must be >= 1")
    if q < 1:
        raise ValueError("q must be positive")
    if q % 2 == 0:
        return 0
    x = int(math.floor(X))
    n = np.arange(1, x + 1, 2, dtype=np.int64)
    k = q // np.gcd(n, q)
    inner = (x // k + 1) // 2
    return int(np.sum(inner))


@dataclass(frozen=True)
class DensityReport:
    A: float
    count_L: int
    count_L_loc: int
    count_L_prime: int
    ratio_loc: Fraction
    lprime_over_A4: float
    C_truncated: float

    CSV_HEADER = "A,count_L,count_L_loc,count_L_prime,ratio_loc,lprime_over_A4,C_truncated"

    def csv_row(self) -> str:
        return ",".join(
            [
                format(self.A, ".12g"),
                str(self.count_L),
                str(self.count_L_loc),
                str(self.count_L_prime),
                f"{self.ratio_loc.numerator}/{self.ratio_loc.denominator}",
                format(self.lprime_over_A4, ".12g"),
                format(self.C_truncated, ".12g"),
            ]
        )

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "count_L": self.count_L,
            "count_L_loc": self.count_L_loc,
            "count_L_prime": self.count_L_prime,
            "ratio_loc": f"{self.ratio_loc.numerator}/{self.ratio_loc.denominator}",
            "lprime_over_A4": self.lprime_over_A4,
            "C_truncated": self.C_truncated,
        }


def density_report(A: float, series_truncation: int = 10**4) -> DensityReport:
    """Counts of L(A), L^loc(A) (Euclidean ball) and L'(A) (sup-norm box),
    with the truncated series constant for comparison."""
    _check_A(A)
    n_prim, n_ok = _positive_counts(A)
    count_l = 16 * n_prim
    convolution_count = enumerate_L(A)
    if convolution_count != count_l:
        raise AssertionError(
            f"primitive-count cross-check failed: {convolution_count} != {count_l}"
        )
    count_loc = 14 * n_ok
    count_p = enumerate_L_prime(A)
    c = lprime_series_constant(series_truncation)
    return DensityReport(
        A=A,
        count_L=count_l,
        count_L_loc=count_loc,
        count_L_prime=count_p,
        ratio_loc=Fraction(count_loc, count_l),
        lprime_over_A4=count_p / float(A) ** 4,
        C_truncated=c.value,
    )


# ---------------------------------------------------------------------------
# rho(A): the fraction of locally solvable tuples whose minimal solution
# satisfies the size bound.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RhoReport:
    A: float
    fraction: float
    undecided: int
    runtime_ms: int
    solvable_count: int
    bound_count: int
    rep_count: int

    CSV_HEADER = "A,fraction,undecided,runtime_ms"

    def csv_row(self) -> str:
        return ",".join(
            [
                format(self.A, ".12g"),
                format(self.fraction, ".12g"),
                str(self.undecided),
                str(self.runtime_ms),
            ]
        )

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "fraction": self.fraction,
            "undecided": self.undecided,
            "runtime_ms": self.runtime_ms,
            "solvable_count": self.solvable_count,
            "bound_count": self.bound_count,
            "rep_count": self.rep_count,
        }


def _arith_ok_multisets(mags: np.ndarray) -> np.ndarray:
    """Local solvability pattern on sorted magnitude rows: even count of
    even entries, every triple gcd a power of two."""
    evens = np.sum((mags & 1) == 0, axis=1)
    ok = (evens & 1) == 0
    m = mags.astype(np.int64)
    for tri in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        g = np.gcd(np.gcd(m[:, tri[0]], m[:, tri[1]]), m[:, tri[2]])
        ok &= _is_pow2(g)
    return ok


class _StageSweep:
    """Batched staged meet-in-the-middle over all representatives at once.

    For each stage prime q_s, a bit table over pair-sum values c p + d p'
    (p, p' <= q_s) answers "does a1 p1 + a2 p2 = -(a3 p3 + a4 p4) have a
    solution with all primes <= q_s" as a bitwise AND of two rows. The
    first stage with a hit gives the minimal solution max-coordinate.
    """

    def __init__(self, A_int: int, primes: tuple[int, ...]):
        self.A = A_int
        self.primes = primes
        self.side = 2 * A_int + 1
        vmax = 2 * A_int * primes[-1] if primes else 1
        self.offset = vmax
        self.words = (2 * vmax + 64) // 64
        self.table = None
        self.used_rows = None

    def encode(self, c: np.ndarray, d: np.ndarray) -> np.ndarray:
        return (c + self.A) * self.side + (d + self.A)

    def prepare(self, used: np.ndarray):
        self.used_rows = np.zeros(self.side * self.side, dtype=bool)
        self.used_rows[used] = True
        self.row_of = np.full(self.side * self.side, -1, dtype=np.int64)
        idx = np.nonzero(self.used_rows)[0]
        self.row_of[idx] = np.arange(idx.size)
        self.table = np.zeros((idx.size, self.words), dtype=np.uint64)
        self.cd = np.stack([idx // self.side - self.A, idx % self.side - self.A], axis=1)

    def add_stage(self, s: int):
        """Set the bits for pair sums that first appear with prime q_s."""
        q = self.primes[s]
        older = np.array(self.primes[:s], dtype=np.int64)
        c = self.cd[:, 0][:, None]
        d = self.cd[:, 1][:, None]
        parts = [c * q + d * q]
        if older.size:
            parts.append(c * q + d * older[None, :])
            parts.append(c * older[None, :] + d * q)
        vals = np.concatenate(parts, axis=1) + self.offset
        rows = np.repeat(
            np.arange(self.table.shape[0], dtype=np.int64), vals.shape[1]
        )
        flat = rows * self.words + (vals.ravel() >> 6)
        bits = np.uint64(1) << (vals.ravel().astype(np.uint64) & np.uint64(63))
        np.bitwise_or.at(self.table.reshape(-1), flat, bits)

    def window(self, s: int) -> tuple[int, int]:
        q = self.primes[s]
        vmax = 2 * self.A * q
        lo = (self.offset - vmax) >> 6
        hi = ((self.offset + vmax) >> 6) + 1
        return lo, hi

    def hits(self, rows12: np.ndarray, rows34: np.ndarray, s: int) -> np.ndarray:
        lo, hi = self.window(s)
        out = np.empty(rows12.shape[0], dtype=bool)
        chunk = max(1, (1 << 24) // max(hi - lo, 1))
        for b in range(0, rows12.shape[0], chunk):
            t12 = self.table[rows12[b : b + chunk], lo:hi]
            t34 = self.table[rows34[b : b + chunk], lo:hi]
            out[b : b + chunk] = np.any(t12 & t34, axis=1)
        return out


def _collect_solvable_reps(A: float):
    """Canonical mixed-sign representatives of L^loc(A) with weights."""
    reps_parts, w_parts = [], []
    for mags, bits in iter_sorted_multisets(A):
        ok = _arith_ok_multisets(mags)
        if not np.any(ok):
            continue
        reps, weights = expand_sign_classes(mags[ok], bits[ok], mixed_only=True)
        reps_parts.append(reps)
        w_parts.append(weights)
    if not reps_parts:
        return np.empty((0, 4), dtype=np.int32), np.empty(0, dtype=np.int64)
    return np.concatenate(reps_parts), np.concatenate(w_parts)


def rho_of_A(
    A: float,
    fixed_bmax: int | None = None,
    ledger_path: str | None = None,
) -> RhoReport:
    """Fraction of locally solvable ||a|| <= A whose minimal prime solution
    m satisfies m^3 <= |a| (log|a|)^4 (loglog|a|).

    The default per-tuple search bound is the ceiling of the bound's cube
    root, so every tuple is decided (undecided = 0 by construction); a
    fixed_bmax below a tuple's threshold leaves it undecided. Tuples with
    |a| <= 15 fail the bound by convention and are not searched (the
    ledger records them with the |a| = 16 search cap).
    """
    if A < 16:
        raise ValueError("A must be >= 16")
    _check_A(A)
    t0 = time.monotonic()
    reps, weights = _collect_solvable_reps(A)
    sups = np.max(np.abs(reps), axis=1).astype(np.int64)
    thresholds = np.full(reps.shape[0], -1.0)
    big = sups >= 16
    if np.any(big):
        s = sups[big].astype(np.float64)
        lg = np.log(s)
        thresholds[big] = s * lg**4 * np.log(lg)
    bmax = np.zeros(reps.shape[0], dtype=np.int64)
    bmax[big] = np.ceil(np.cbrt(thresholds[big])).astype(np.int64)
    if fixed_bmax is not None:
        bmax = np.minimum(bmax, fixed_bmax)
    max_b = int(bmax.max()) if reps.shape[0] else 0
    primes = primes_up_to(max_b) if max_b >= 2 else ()
    m_found = np.full(reps.shape[0], -1, dtype=np.int64)
    if primes:
        sweep = _StageSweep(int(math.floor(A)), primes)
        a = reps.astype(np.int64)
        rows12_code = sweep.encode(a[:, 0], a[:, 1])
        rows34_code = sweep.encode(-a[:, 2], -a[:, 3])
        sweep.prepare(np.concatenate([rows12_code, rows34_code]))
        rows12 = sweep.row_of[rows12_code]
        rows34 = sweep.row_of[rows34_code]
        prime_arr = np.array(primes, dtype=np.int64)
        stage_cap = np.searchsorted(prime_arr, bmax, side="right")
        active = np.nonzero(stage_cap > 0)[0]
        for s in range(len(primes)):
            if active.size == 0:
                break
            sweep.add_stage(s)
            cur = active[stage_cap[active] > s]
            if cur.size == 0:
                break
            hit = sweep.hits(rows12[cur], rows34[cur], s)
            m_found[cur[hit]] = primes[s]
            active = cur[~hit]
    bound_holds = (m_found > 0) & big
    if np.any(bound_holds):
        sel = np.nonzero(bound_holds)[0]
        ok = m_found[sel].astype(np.float64) ** 3 <= thresholds[sel]
        bound_holds[sel[~ok]] = False
    undecided = 0
    if fixed_bmax is not None:
        undecided_mask = big & (m_found < 0) & (bmax < np.ceil(np.cbrt(thresholds)))
        undecided = int(np.sum(weights[undecided_mask]))
    solvable_total = int(np.sum(weights))
    bound_total = int(np.sum(weights[bound_holds]))
    if ledger_path is not None:
        _write_rho_ledger(ledger_path, reps, weights, m_found, bound_holds, bmax)
    runtime_ms = int((time.monotonic() - t0) * 1000)
    return RhoReport(
        A=A,
        fraction=bound_total / solvable_total if solvable_total else 0.0,
        undecided=undecided,
        runtime_ms=runtime_ms,
        solvable_count=solvable_total,
        bound_count=bound_total,
        rep_count=int(reps.shape[0]),
    )


def _write_rho_ledger(path, reps, weights, m_found, bound_holds, bmax):
    """One JSONL row per canonical representative, with its orbit weight.

    The minimal solution is recomputed with the staged single-tuple
    search to attach a witness, and cross-checked against the sweep.
    """
    with open(path, "w") as fh:
        for i in range(reps.shape[0]):
            a = tuple(int(v) for v in reps[i])
            cap = int(bmax[i]) if bmax[i] >= 2 else 10
            rec = min_prime_solution(a, cap)
            m_sweep = int(m_found[i])
            if bmax[i] >= 2 and (rec.m or -1) != (m_sweep if m_sweep > 0 else -1):
                raise AssertionError(
                    f"sweep/staged-search mismatch at {a}: {rec.m} vs {m_sweep}"
                )
            row = {
                "a": list(a),
                "weight": int(weights[i]),
                "solvable": True,
                "m_or_inf": rec.m if rec.m is not None else "inf",
                "bound_holds": bool(bound_holds[i]),
                "witness": list(rec.witness) if rec.witness else None,
            }
            fh.write(json.dumps(row) + "\n")


def rho_trend(A_values, **kwargs) -> list[RhoReport]:
    return [rho_of_A(a, **kwargs) for a in A_values]
