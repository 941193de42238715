"""Counting functions for a1 p1 + ... + a4 p4 = 0: the global count
N_a(B), the local model N_a^loc(B), the pair statistics E(B), F(B) and
l(X, Y, Delta), the slab/ball volume functionals with their closed-form
leading terms, and the second-moment decomposition of the variance
V(A,B) = D - 2 D_mix + D_loc + K.

Counts stay exact integers until the final (log B)^k scaling. Fourfold
sums are evaluated as hash/sorted-array joins of two twofold sums,
never as quadruple loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._orbits import expand_sign_classes, iter_sorted_multisets
from .arith import primes_up_to
from .errors import BudgetExceededError
from .lattice import kernel_lattice, kernel_lattice_multi, points_in_region
from .local import Modulus, modulus_params, validate_coeffs

PAIR_SUM_PRIME_CAP = 64  # pi(B) cap for O(pi(B)^8)-pair statistics
MOMENT_A_CAP = 150.0


@dataclass(frozen=True)
class PrimeGrid:
    """The tuple space P(B): all 4-tuples of primes <= B (sup-norm box)."""

    B: float
    primes: tuple[int, ...]

    @property
    def tuple_count(self) -> int:
        return len(self.primes) ** 4


def prime_grid(B: float) -> PrimeGrid:
    if B < 2:
        return PrimeGrid(B, ())
    return PrimeGrid(B, primes_up_to(int(math.floor(B))))


@lru_cache(maxsize=32)
def _modulus(B: float) -> Modulus:
    return modulus_params(B)


@dataclass(frozen=True)
class NaResult:
    value: float
    count: int


def n_a(a, B: float) -> NaResult:
    """(log B)^4 times the exact number of prime tuples x in P(B) with
    <a, x> = 0, by a hash join on a1 p1 + a2 p2."""
    a = validate_coeffs(a)
    if B < 2:
        raise ValueError("B must be >= 2")
    primes = prime_grid(B).primes
    if not primes:
        return NaResult(0.0, 0)
    a1, a2, a3, a4 = a
    h: dict[int, int] = {}
    for p in primes:
        for q in primes:
            s = a1 * p + a2 * q
            h[s] = h.get(s, 0) + 1
    count = 0
    for p in primes:
        for q in primes:
            count += h.get(-(a3 * p + a4 * q), 0)
    return NaResult(math.log(B) ** 4 * count, count)


def n_a_loc(a, B: float) -> float:
    """Local counting function: (log B)^4 (alpha W / ||a||) times the sum of
    1/||x|| over x in P(B) with W | <a, x> and x in the cone of aperture
    alpha around a's orthogonal hyperplane.

    Congruences are exact integer arithmetic; the cone test is the squared
    comparison 4 alpha^2 <a,x>^2 <= ||a||^2 ||x||^2.
    """
    a = validate_coeffs(a)
    if B < 3:
        raise ValueError("B must be >= 3")
    mod = _modulus(B)
    primes = prime_grid(B).primes
    a1, a2, a3, a4 = a
    na2 = sum(x * x for x in a)
    alpha = mod.alpha
    W = mod.W
    zero_only = W > (abs(a1) + abs(a2) + abs(a3) + abs(a4)) * B
    four_a2 = 4.0 * alpha * alpha
    h: dict[int, list[tuple[int, int]]] = {}
    for p in primes:
        for q in primes:
            s = a1 * p + a2 * q
            key = s if zero_only else s % W
            h.setdefault(key, []).append((s, p * p + q * q))
    total = 0.0
    for p in primes:
        for q in primes:
            s34 = a3 * p + a4 * q
            key = -s34 if zero_only else (-s34) % W
            for s12, n12 in h.get(key, ()):
                t = s12 + s34
                n = n12 + p * p + q * q
                if four_a2 * t * t <= na2 * float(n):
                    total += 1.0 / math.sqrt(n)
    return math.log(B) ** 4 * (alpha * float(W) / math.sqrt(na2)) * total


def delta_pair(x, y) -> float:
    """||x|| ||y|| / det(Zx + Zy); at least 1, by Cauchy-Schwarz."""
    x = tuple(int(v) for v in x)
    y = tuple(int(v) for v in y)
    nx = sum(v * v for v in x)
    ny = sum(v * v for v in y)
    ip = sum(u * v for u, v in zip(x, y))
    det2 = nx * ny - ip * ip
    if det2 == 0:
        raise ValueError("x and y must be linearly independent")
    return math.sqrt(nx * ny / det2)


def _box_tuples(B: float) -> np.ndarray:
    primes = prime_grid(B).primes
    if len(primes) > PAIR_SUM_PRIME_CAP:
        raise BudgetExceededError(
            f"pi({B}) = {len(primes)} exceeds pair-sum cap {PAIR_SUM_PRIME_CAP}"
        )
    if not primes:
        return np.empty((0, 4), dtype=np.int64)
    p = np.array(primes, dtype=np.int64)
    grids = np.meshgrid(p, p, p, p, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _canonical_x_side(tuples: np.ndarray):
    canon = np.sort(tuples, axis=1)
    uniq, counts = np.unique(canon, axis=0, return_counts=True)
    return uniq, counts


def _pair_geometry(x: np.ndarray, Y: np.ndarray, ny2: np.ndarray):
    """det(Zx+Zy)^2 and the minors gcd G(x,y) for one x against all rows of Y."""
    nx2 = int(np.dot(x, x))
    inner = Y @ x
    det2 = nx2 * ny2 - inner * inner
    g = None
    for i in range(4):
        for j in range(i + 1, 4):
            m = np.abs(x[i] * Y[:, j] - x[j] * Y[:, i])
            g = m if g is None else np.gcd(g, m)
    return det2, g


def E_of_B(B: float) -> float:
    """(log B)^8 times the sum of 1/d2(x,y) over ordered pairs of distinct,
    linearly independent prime tuples in P(B).

    The x side is reduced to sorted representatives (the summand is
    invariant under simultaneous coordinate permutation); proportional
    pairs (both constant tuples) have no rank-2 d2 and are skipped.
    """
    if B < 2:
        raise ValueError("B must be >= 2")
    Y = _box_tuples(B)
    if Y.shape[0] == 0:
        return 0.0
    ny2 = np.sum(Y * Y, axis=1)
    X, mult = _canonical_x_side(Y)
    total = 0.0
    for x, m in zip(X, mult):
        det2, g = _pair_geometry(x, Y, ny2)
        mask = det2 > 0
        contrib = np.sum(g[mask] / np.sqrt(det2[mask].astype(np.float64)))
        total += float(m) * float(contrib)
    return math.log(B) ** 8 * total


def calE_pair(x, y, B: float) -> float:
    """Pair weight min(1, Delta(x,y)^2/alpha^2) + [G(x,y) does not divide
    W/rad(W)]."""
    if B < 3:
        raise ValueError("B must be >= 3")
    mod = _modulus(B)
    x = tuple(int(v) for v in x)
    y = tuple(int(v) for v in y)
    d = delta_pair(x, y)
    g = 0
    for i in range(4):
        for j in range(i + 1, 4):
            g = math.gcd(g, abs(x[i] * y[j] - x[j] * y[i]))
    ind = 0.0 if g and mod.W_over_rad % g == 0 else 1.0
    return min(1.0, d * d / (mod.alpha * mod.alpha)) + ind


def F_of_B(B: float) -> float:
    """E(B)-style sum weighted by calE_pair."""
    if B < 3:
        raise ValueError("B must be >= 3")
    mod = _modulus(B)
    alpha2 = mod.alpha * mod.alpha
    w_over_rad = mod.W_over_rad
    Y = _box_tuples(B)
    if Y.shape[0] == 0:
        return 0.0
    ny2 = np.sum(Y * Y, axis=1)
    X, mult = _canonical_x_side(Y)
    total = 0.0
    for x, m in zip(X, mult):
        nx2 = int(np.dot(x, x))
        det2, g = _pair_geometry(x, Y, ny2)
        mask = det2 > 0
        det2m = det2[mask].astype(np.float64)
        gm = g[mask]
        minterm = np.minimum(1.0, (float(nx2) * ny2[mask] / det2m) / alpha2)
        ind = np.ones(gm.shape[0])
        for gv in np.unique(gm):
            if w_over_rad % int(gv) == 0:
                ind[gm == gv] = 0.0
        contrib = np.sum((minterm + ind) * gm / np.sqrt(det2m))
        total += float(m) * float(contrib)
    return math.log(B) ** 8 * total


def _ball_tuples(R: float) -> np.ndarray:
    arr = _box_tuples(R)
    if arr.shape[0] == 0:
        return arr
    n2 = np.sum(arr * arr, axis=1)
    return arr[n2 <= R * R]


def l_count(X: float, Y: float, Delta: float) -> int:
    """Exact number of ordered pairs of prime-coordinate 4-vectors with
    ||x|| <= X, ||y|| <= Y, spanning a plane, and d2(x,y) <= Delta."""
    if min(X, Y, Delta) < 2:
        raise ValueError("X, Y, Delta must all be >= 2")
    PX = _ball_tuples(X)
    PY = _ball_tuples(Y)
    if PX.shape[0] == 0 or PY.shape[0] == 0:
        return 0
    ny2 = np.sum(PY * PY, axis=1)
    Xc, mult = _canonical_x_side(PX)
    d2cap = Delta * Delta
    total = 0
    for x, m in zip(Xc, mult):
        det2, g = _pair_geometry(x, PY, ny2)
        mask = det2 > 0
        ok = det2[mask].astype(np.float64) <= d2cap * (g[mask].astype(np.float64) ** 2)
        total += int(m) * int(np.count_nonzero(ok))
    return total


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class VolEstimate:
    value: float
    std_error: float
    samples: int
    seed: int


def _delta_wz(w: np.ndarray, z: np.ndarray) -> float:
    nw = float(np.dot(w, w))
    nz = float(np.dot(z, z))
    ip = float(np.dot(w, z))
    return nw * nz - ip * ip


_MC_BLOCK = 1 << 18


def vol_I(w, z, mode: str = "formula", samples: int = 10**6, seed: int = 0):
    """Volume of {t in w-perp : |<z,t>| <= ||t|| <= 1}.

    formula: the leading term 2 (N-2)/(N-1) V_{N-2} ||w|| / delta^(1/2).
    monte_carlo: seeded estimate of the exact volume, sampled in an
    orthonormal frame of w-perp.
    """
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n = w.shape[0]
    if n < 3:
        raise ValueError("need ambient dimension >= 3")
    delta = _delta_wz(w, z)
    if delta <= 0:
        raise ValueError("w and z must be linearly independent")
    if mode == "formula":
        nw = math.sqrt(float(np.dot(w, w)))
        return 2.0 * (n - 2) / (n - 1) * unit_ball_volume(n - 2) * nw / math.sqrt(delta)
    if mode != "monte_carlo":
        raise ValueError(f"unknown mode {mode!r}")
    basis = np.eye(n)
    mat = np.column_stack([w[:, None], basis])
    q, _ = np.linalg.qr(mat)
    frame = q[:, 1:n]  # orthonormal basis of w-perp
    zc = frame.T @ z
    hits = 0
    done = 0
    block = 0
    d = n - 1
    while done < samples:
        m = min(_MC_BLOCK, samples - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, block]))
        c = rng.uniform(-1.0, 1.0, (m, d))
        r2 = np.sum(c * c, axis=1)
        ip = c @ zc
        ok = (r2 <= 1.0) & (ip * ip <= r2)
        hits += int(np.count_nonzero(ok))
        done += m
        block += 1
    p = hits / samples
    se = math.sqrt(p * (1.0 - p) / samples)
    scale = 2.0**d
    return VolEstimate(scale * p, scale * se, samples, seed)


def vol_J(w, z, mode: str = "formula", samples: int = 10**6, seed: int = 0):
    """Volume of {t : |<w,t>|, |<z,t>| <= ||t|| <= 1}.

    formula: the leading term 4 (N-2)/N V_{N-2} / delta^(1/2).
    """
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n = w.shape[0]
    if n < 3:
        raise ValueError("need ambient dimension >= 3")
    delta = _delta_wz(w, z)
    if delta <= 0:
        raise ValueError("w and z must be linearly independent")
    if mode == "formula":
        return 4.0 * (n - 2) / n * unit_ball_volume(n - 2) / math.sqrt(delta)
    if mode != "monte_carlo":
        raise ValueError(f"unknown mode {mode!r}")
    hits = 0
    done = 0
    block = 0
    while done < samples:
        m = min(_MC_BLOCK, samples - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, block]))
        t = rng.uniform(-1.0, 1.0, (m, n))
        r2 = np.sum(t * t, axis=1)
        ipw = t @ w
        ipz = t @ z
        ok = (r2 <= 1.0) & (ipw * ipw <= r2) & (ipz * ipz <= r2)
        hits += int(np.count_nonzero(ok))
        done += m
        block += 1
    p = hits / samples
    se = math.sqrt(p * (1.0 - p) / samples)
    scale = 2.0**n
    return VolEstimate(scale * p, scale * se, samples, seed)


class _PairJoin:
    """Meet-in-the-middle engine over P(B): per coefficient pair (c, d),
    cached sorted arrays of the two-fold sums c p + d q, keyed either by
    exact value (huge-W regime, only <a,x> = 0 survives) or by residue
    mod W.
    """

    def __init__(self, B: float, A_hint: float):
        mod = _modulus(B)
        primes = prime_grid(B).primes
        if len(primes) > PAIR_SUM_PRIME_CAP:
            raise BudgetExceededError(
                f"pi({B}) = {len(primes)} exceeds pair-sum cap {PAIR_SUM_PRIME_CAP}"
            )
        self.mod = mod
        p = np.array(primes, dtype=np.int64)
        self.pair_norm = (p[:, None] ** 2 + p[None, :] ** 2).ravel()
        self.p1 = np.repeat(p, len(p))
        self.p2 = np.tile(p, len(p))
        self.zero_only = mod.W > 4 * A_hint * B
        self.full_cross = mod.W == 1
        self.W = mod.W
        self._cache: dict[tuple[int, int], tuple] = {}

    def _entry(self, c: int, d: int):
        key = (c, d)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        v = c * self.p1 + d * self.p2
        if self.full_cross:
            entry = (v, self.pair_norm)
        elif self.zero_only:
            order = np.argsort(v, kind="stable")
            entry = (v[order], self.pair_norm[order])
        else:
            r = v % self.W
            order = np.argsort(r, kind="stable")
            entry = (r[order], v[order], self.pair_norm[order])
        self._cache[key] = entry
        return entry

    def matches(self, a1: int, a2: int, a3: int, a4: int):
        """Arrays (t, n) over all x in P(B) with W | <a, x>: the exact inner
        product t = <a, x> and the squared norm n = ||x||^2."""
        if self.full_cross:
            v12, n12 = self._entry(a1, a2)
            v34n, n34 = self._entry(-a3, -a4)
            t = (v12[:, None] - v34n[None, :]).ravel()
            n = (n12[:, None] + n34[None, :]).ravel()
            return t, n
        if self.zero_only:
            v12, n12 = self._entry(a1, a2)
            v34n, n34 = self._entry(-a3, -a4)
            i_idx, j_idx = _equal_range_join(v12, v34n)
            t = np.zeros(i_idx.shape[0], dtype=np.int64)
            n = n12[i_idx] + n34[j_idx]
            return t, n
        r12, v12, n12 = self._entry(a1, a2)
        r34n, v34n, n34 = self._entry(-a3, -a4)
        i_idx, j_idx = _equal_range_join(r12, r34n)
        t = v12[i_idx] - v34n[j_idx]
        n = n12[i_idx] + n34[j_idx]
        return t, n


def _equal_range_join(sorted_keys: np.ndarray, queries: np.ndarray):
    left = np.searchsorted(sorted_keys, queries, side="left")
    right = np.searchsorted(sorted_keys, queries, side="right")
    cnt = right - left
    nz = np.nonzero(cnt)[0]
    if nz.size == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e
    cnt_nz = cnt[nz]
    total = int(cnt_nz.sum())
    j_idx = np.repeat(nz, cnt_nz)
    starts = np.repeat(left[nz], cnt_nz)
    offs = np.concatenate(([0], np.cumsum(cnt_nz)[:-1]))
    i_idx = np.arange(total, dtype=np.int64) - np.repeat(offs, cnt_nz) + starts
    return i_idx, j_idx


@dataclass(frozen=True)
class MomentReport:
    """Aggregates of the variance decomposition at (A, B).

    V, D, D_mix, D_loc, K satisfy V = D - 2 D_mix + D_loc + K up to float
    summation error, recorded as identity_gap_rel (relative to the largest
    aggregate magnitude).
    """

    A: float
    B: float
    V: float
    D: float
    D_mix: float
    D_loc: float
    K: float
    E_B: float | None
    F_B: float | None
    sum_N: float
    sum_N_loc: float
    tuple_count: int
    identity_gap_rel: float

    @property
    def normalized(self) -> float:
        return self.V / (self.A * self.A * self.B**6)

    CSV_HEADER = "A,B,V,D,D_mix,D_loc,K,E_B,F_B,V_normalized"

    def csv_row(self) -> str:
        def fmt(x):
            return "" if x is None else format(x, ".12g")

        cells = [
            fmt(self.A),
            fmt(self.B),
            fmt(self.V),
            fmt(self.D),
            fmt(self.D_mix),
            fmt(self.D_loc),
            fmt(self.K),
            fmt(self.E_B),
            fmt(self.F_B),
            fmt(self.normalized),
        ]
        return ",".join(cells)

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "V": self.V,
            "D": self.D,
            "D_mix": self.D_mix,
            "D_loc": self.D_loc,
            "K": self.K,
            "E_B": self.E_B,
            "F_B": self.F_B,
            "sum_N": self.sum_N,
            "sum_N_loc": self.sum_N_loc,
            "tuple_count": self.tuple_count,
            "V_normalized": self.normalized,
            "identity_gap_rel": self.identity_gap_rel,
        }


def moment_decomposition(A: float, B: float, include_pair_stats: bool = True) -> MomentReport:
    """Direct summation of V, D, D_mix, D_loc, K over all primitive
    non-zero-entry tuples with ||a|| <= A (non-strict), one canonical
    orbit representative at a time.

    K is the diagonal restoration term sum((log B)^4 N_a - 2 Delta_mix_a
    + Delta_loc_a), which makes V = D - 2 D_mix + D_loc + K an algebraic
    identity.
    """
    if A < 2:
        raise ValueError("A must be >= 2")
    if B < 3:
        raise ValueError("B must be >= 3")
    if A > MOMENT_A_CAP:
        raise BudgetExceededError(f"A = {A} exceeds moment cap {MOMENT_A_CAP}")
    join = _PairJoin(B, A)
    mod = join.mod
    alpha = mod.alpha
    Wf = float(mod.W)
    c4 = math.log(B) ** 4
    c8 = c4 * c4
    four_a2 = 4.0 * alpha * alpha
    agg_V = agg_D = agg_mix = agg_loc = agg_K = 0.0
    sum_N = sum_N_loc = 0.0
    n_tuples = 0
    for mags, bits in iter_sorted_multisets(A):
        reps, weights = expand_sign_classes(mags, bits, mixed_only=False)
        na2s = np.sum(reps.astype(np.int64) ** 2, axis=1)
        for row, wgt, na2 in zip(reps, weights, na2s):
            a1, a2, a3, a4 = (int(v) for v in row)
            na2 = float(na2)
            t, n = join.matches(a1, a2, a3, a4)
            nf = n.astype(np.float64)
            cone = (four_a2 * t.astype(np.float64) ** 2) <= na2 * nf
            inv_sqrt = 1.0 / np.sqrt(nf)
            zero = t == 0
            cnt = int(np.count_nonzero(zero))
            s_mix = float(np.sum(inv_sqrt[zero]))
            s_loc1 = float(np.sum(inv_sqrt[cone]))
            s_loc2 = float(np.sum(1.0 / nf[cone]))
            na = math.sqrt(na2)
            N = c4 * cnt
            L = c4 * (alpha * Wf / na) * s_loc1
            d_mix = c8 * (alpha * Wf / na) * s_mix
            d_loc = c8 * (alpha * alpha * Wf * Wf / na2) * s_loc2
            w = float(wgt)
            agg_V += w * (N - L) ** 2
            agg_D += w * (N * N - c4 * N)
            agg_mix += w * (N * L - d_mix)
            agg_loc += w * (L * L - d_loc)
            agg_K += w * (c4 * N - 2.0 * d_mix + d_loc)
            sum_N += w * N
            sum_N_loc += w * L
            n_tuples += int(wgt)
    rhs = agg_D - 2.0 * agg_mix + agg_loc + agg_K
    scale = max(abs(agg_V), abs(agg_D), 2.0 * abs(agg_mix), abs(agg_loc), abs(agg_K), 1e-300)
    gap = abs(agg_V - rhs) / scale
    e_b = E_of_B(B) if include_pair_stats else None
    f_b = F_of_B(B) if include_pair_stats else None
    return MomentReport(
        A=A,
        B=B,
        V=agg_V,
        D=agg_D,
        D_mix=agg_mix,
        D_loc=agg_loc,
        K=agg_K,
        E_B=e_b,
        F_B=f_b,
        sum_N=sum_N,
        sum_N_loc=sum_N_loc,
        tuple_count=n_tuples,
        identity_gap_rel=gap,
    )


def d_from_pair_sum(A: float, B: float) -> float:
    """D(A, B) evaluated in the opposite order: (log B)^8 times the number
    of (pair in Omega(B), primitive non-zero-entry a <= A) incidences with
    a orthogonal to both tuples. Exact lattice enumeration per pair; the
    diagonal-removal cross-check for moment_decomposition.
    """
    Y = _box_tuples(B)
    nrows = Y.shape[0]
    total = 0
    for i in range(nrows):
        x = tuple(int(v) for v in Y[i])
        for j in range(nrows):
            if i == j:
                continue
            y = tuple(int(v) for v in Y[j])
            nx2 = sum(v * v for v in x)
            ny2 = sum(v * v for v in y)
            ip = sum(u * v for u, v in zip(x, y))
            if nx2 * ny2 == ip * ip:
                lat = kernel_lattice(x)
            else:
                lat = kernel_lattice_multi([x, y])
            _, pts = points_in_region(
                lat, A, primitive_only=True, exclude_zero=True, return_points=True
            )
            total += sum(1 for p in pts if all(v != 0 for v in p))
    return math.log(B) ** 8 * total
