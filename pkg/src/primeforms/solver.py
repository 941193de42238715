"""Minimal prime solutions: staged meet-in-the-middle search for the
smallest M such that a1 p1 + ... + a4 p4 = 0 has a solution in primes
with max(p_i) = M, and the size-bound predicate m^3 <= |a| (log|a|)^4
(loglog|a|)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .arith import primes_up_to
from .errors import BudgetExceededError
from .local import validate_coeffs

HASH_ENTRY_CAP = 2**32


@dataclass(frozen=True)
class SolutionRecord:
    """Search outcome; m is None when no solution exists with max
    coordinate <= B_explored (the infinity marker)."""

    a: tuple[int, int, int, int]
    m: int | None
    witness: tuple[int, int, int, int] | None
    B_explored: int

    @property
    def found(self) -> bool:
        return self.m is not None

    def to_dict(self) -> dict:
        return {
            "a": list(self.a),
            "m": self.m,
            "witness": list(self.witness) if self.witness else None,
            "B_explored": self.B_explored,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def min_prime_solution(a, B_max: int) -> SolutionRecord:
    """Exact minimum of max(p_i) over prime solutions with all p_i <= B_max.

    Primes are taken in increasing order; at each stage q the new pair sums
    involving q are joined against the accumulated hash tables, so the
    first stage with a match is the minimum. Among solutions at that
    stage the lexicographically smallest witness is returned. Tuples whose
    coefficients all share one sign admit no positive-prime solution and
    short-circuit to the infinity marker.
    """
    a = validate_coeffs(a)
    if B_max < 2:
        raise ValueError("B_max must be >= 2")
    a1, a2, a3, a4 = a
    if all(x > 0 for x in a) or all(x < 0 for x in a):
        return SolutionRecord(a, None, None, B_max)
    primes = primes_up_to(B_max)
    h12: dict[int, tuple[int, int]] = {}
    h34: dict[int, tuple[int, int]] = {}
    seen: list[int] = []
    for q in primes:
        new_pairs = [(q, q)] + [(q, p) for p in seen] + [(p, q) for p in seen]
        candidates = []
        # new 12-pairs against the 34 table of the previous stage
        for x, y in new_pairs:
            hit = h34.get(-(a1 * x + a2 * y))
            if hit is not None:
                candidates.append((x, y) + hit)
        for x, y in new_pairs:
            v = a1 * x + a2 * y
            cur = h12.get(v)
            if cur is None or (x, y) < cur:
                h12[v] = (x, y)
        # new 34-pairs against the updated 12 table
        for x, y in new_pairs:
            hit = h12.get(-(a3 * x + a4 * y))
            if hit is not None:
                candidates.append(hit + (x, y))
        for x, y in new_pairs:
            v = a3 * x + a4 * y
            cur = h34.get(v)
            if cur is None or (x, y) < cur:
                h34[v] = (x, y)
        if candidates:
            return SolutionRecord(a, q, min(candidates), q)
        if len(h12) + len(h34) > HASH_ENTRY_CAP:
            raise BudgetExceededError(
                f"pair-sum tables exceed {HASH_ENTRY_CAP} entries at stage {q}"
            )
        seen.append(q)
    return SolutionRecord(a, None, None, B_max)


def sup_norm(a) -> int:
    return max(abs(int(x)) for x in a)


def bound_threshold(sup: int) -> float:
    """|a| (log|a|)^4 (loglog|a|) with natural logs; requires sup >= 16."""
    if sup < 16:
        raise ValueError("threshold defined for sup norm >= 16")
    lg = math.log(sup)
    return sup * lg**4 * math.log(lg)


def bound_predicate(a, m: int) -> bool:
    """Whether m^3 <= |a| (log|a|)^4 (loglog|a|).

    Returns False for |a| <= 15 by convention (the bound is asymptotic;
    below 16 the loglog factor crosses its unit scale).
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    sup = sup_norm(a)
    if sup <= 15:
        return False
    return float(m) ** 3 <= bound_threshold(sup)
