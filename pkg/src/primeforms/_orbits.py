"""Canonical representatives of primitive coefficient tuples under the
symmetry group (coordinate permutations) x (global sign flip).

Every per-tuple statistic in this package (solution counts, local
counts, minimal solutions, solvability) is invariant under that group,
so sums over ||a|| <= A are evaluated once per canonical representative
and weighted by the orbit size.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import permutations, product

import numpy as np


def canonical_tuple(a) -> tuple[int, int, int, int]:
    """Orbit representative: coordinates sorted by (magnitude, sign),
    then the lexicographically smaller of the tuple and its negation."""
    t = tuple(int(x) for x in a)
    c1 = tuple(sorted((abs(v), v < 0) for v in t))
    c2 = tuple(sorted((abs(v), v > 0) for v in t))
    code = min(c1, c2)
    return tuple(-m if neg else m for m, neg in code)


def _pattern_bits(mags) -> int:
    return (mags[0] == mags[1]) << 2 | (mags[1] == mags[2]) << 1 | (mags[2] == mags[3])


@lru_cache(maxsize=None)
def _sign_table(bits: int) -> tuple[tuple[tuple[int, int, int, int], int], ...]:
    """For an equality pattern of sorted magnitudes, the canonical sign
    patterns and their orbit sizes; built by brute force on a witness."""
    base = [2, 3, 5, 7]
    mags = [base[0]]
    for i in range(3):
        equal = bits & (4 >> i)
        mags.append(mags[-1] if equal else base[len(set(mags))])
    counts: dict[tuple[int, ...], int] = {}
    for pm in set(permutations(mags)):
        for signs in product((1, -1), repeat=4):
            t = tuple(s * m for s, m in zip(signs, pm))
            c = canonical_tuple(t)
            counts[c] = counts.get(c, 0) + 1
    out = []
    sorted_mags = tuple(sorted(mags))
    for rep, w in sorted(counts.items()):
        signs = tuple(1 if v > 0 else -1 for v in rep)
        assert tuple(abs(v) for v in rep) == sorted_mags
        out.append((signs, w))
    return tuple(out)


def iter_sorted_multisets(A: float, chunk_rows: int = 1 << 16):
    """Yield (mags, bits) chunks: rows are ascending magnitude 4-tuples
    with entries >= 1, gcd 1 and squared norm <= A^2."""
    a2 = int(math.floor(A * A))
    top = math.isqrt(max(a2 - 3, 0))
    buf_m = []
    buf_b = []
    buffered = 0
    for m1 in range(1, top + 1):
        r1 = a2 - m1 * m1
        if r1 < 3 * m1 * m1:
            break
        for m2 in range(m1, math.isqrt(r1 // 3) + 1):
            r2 = r1 - m2 * m2
            if r2 < 2 * m2 * m2:
                break
            g12 = math.gcd(m1, m2)
            for m3 in range(m2, math.isqrt(r2 // 2) + 1):
                r3 = r2 - m3 * m3
                if r3 < m3 * m3:
                    break
                m4 = np.arange(m3, math.isqrt(r3) + 1, dtype=np.int32)
                if m4.size == 0:
                    continue
                g123 = math.gcd(g12, m3)
                if g123 > 1:
                    m4 = m4[np.gcd(m4, g123) == 1]
                    if m4.size == 0:
                        continue
                n = m4.size
                rows = np.empty((n, 4), dtype=np.int32)
                rows[:, 0] = m1
                rows[:, 1] = m2
                rows[:, 2] = m3
                rows[:, 3] = m4
                bits = np.full(n, ((m1 == m2) << 2) | ((m2 == m3) << 1), dtype=np.uint8)
                bits[m4 == m3] |= 1
                buf_m.append(rows)
                buf_b.append(bits)
                buffered += n
                if buffered >= chunk_rows:
                    yield np.concatenate(buf_m), np.concatenate(buf_b)
                    buf_m, buf_b, buffered = [], [], 0
    if buffered:
        yield np.concatenate(buf_m), np.concatenate(buf_b)


def expand_sign_classes(mags: np.ndarray, bits: np.ndarray, mixed_only: bool = False):
    """Expand multiset rows into canonical signed representatives.

    Returns (reps, weights): reps is (m, 4) int32 of signed tuples,
    weights the orbit sizes. With mixed_only, all-same-sign classes are
    dropped (their representative is the all-positive one).
    """
    reps_parts = []
    w_parts = []
    for b in np.unique(bits):
        sel = bits == b
        rows = mags[sel]
        for signs, w in _sign_table(int(b)):
            if mixed_only and all(s > 0 for s in signs):
                continue
            signed = rows * np.array(signs, dtype=np.int32)
            reps_parts.append(signed)
            w_parts.append(np.full(rows.shape[0], w, dtype=np.int64))
    if not reps_parts:
        return np.empty((0, 4), dtype=np.int32), np.empty(0, dtype=np.int64)
    return np.concatenate(reps_parts), np.concatenate(w_parts)
