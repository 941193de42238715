"""Integral lattices in Z^N: kernel and congruence lattices, exact
determinants via Gram matrices, minors gcds, successive minima, and
exhaustive point enumeration in balls intersected with cone regions.

All linear algebra is exact integer arithmetic (HNF based); floats only
appear where a radius or cone aperture is inherently real.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import BudgetExceededError

ENUMERATION_BUDGET = 10**8


def _row_hnf(rows: list[list[int]]) -> list[list[int]]:
    """Row-style Hermite normal form; returns the nonzero rows.

    Pivots are positive, entries above a pivot are reduced into [0, pivot).
    The result is the canonical basis of the integer row span.
    """
    rows = [list(r) for r in rows]
    if not rows:
        return []
    m, n = len(rows), len(rows[0])
    r = 0
    for c in range(n):
        while True:
            nz = [i for i in range(r, m) if rows[i][c] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(rows[i][c]))
            rows[r], rows[i0] = rows[i0], rows[r]
            done = True
            for i in range(r + 1, m):
                if rows[i][c]:
                    q = rows[i][c] // rows[r][c]
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[r])]
                    if rows[i][c]:
                        done = False
            if done:
                break
        if r < m and rows[r][c] != 0 and all(rows[i][c] == 0 for i in range(r + 1, m)):
            if rows[r][c] < 0:
                rows[r] = [-a for a in rows[r]]
            for i in range(r):
                q = rows[i][c] // rows[r][c]
                if q:
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[r])]
            r += 1
            if r == m:
                break
    return [row for row in rows[:r]]


def _int_det(mat: list[list[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(mat)
    if n == 0:
        return 1
    m = [list(r) for r in mat]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def _int_rank(rows) -> int:
    return len(_row_hnf([list(r) for r in rows]))


def integer_kernel(vectors: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Basis of {y in Z^N : <c, y> = 0 for every c in vectors}.

    Row-HNF of [M^T | I_N]; the rows whose left block vanishes are a basis
    of the kernel, which is automatically primitive (saturated).
    """
    n = len(vectors[0])
    k = len(vectors)
    aug = []
    for j in range(n):
        row = [vectors[i][j] for i in range(k)] + [0] * n
        row[k + j] = 1
        aug.append(row)
    hnf = _row_hnf(aug)
    out = []
    for row in hnf:
        if all(v == 0 for v in row[:k]):
            out.append(tuple(row[k:]))
    return out


class IntLattice:
    """Integral lattice given by basis vectors, canonicalized via HNF.

    ``basis`` is a tuple of rank-many N-vectors. ``det_squared`` is the
    exact Gram determinant, an integer.
    """

    __slots__ = ("ambient_dim", "rank", "basis", "_gram", "_det_sq")

    def __init__(self, basis: list[tuple[int, ...]], ambient_dim: int):
        canon = _row_hnf([list(b) for b in basis])
        if len(canon) != len(basis):
            raise ValueError("basis vectors are linearly dependent")
        self.ambient_dim = ambient_dim
        self.rank = len(canon)
        self.basis = tuple(tuple(v) for v in canon)
        self._gram = None
        self._det_sq = None

    @classmethod
    def from_generators(cls, generators, ambient_dim: int | None = None) -> "IntLattice":
        gens = [tuple(int(x) for x in g) for g in generators]
        if not gens:
            raise ValueError("need at least one generator")
        n = ambient_dim if ambient_dim is not None else len(gens[0])
        basis = _row_hnf([list(g) for g in gens])
        if not basis:
            raise ValueError("generators span the zero lattice")
        return cls(basis, n)

    @property
    def gram(self) -> tuple[tuple[int, ...], ...]:
        if self._gram is None:
            b = self.basis
            self._gram = tuple(
                tuple(sum(x * y for x, y in zip(b[i], b[j])) for j in range(self.rank))
                for i in range(self.rank)
            )
        return self._gram

    @property
    def det_squared(self) -> int:
        if self._det_sq is None:
            self._det_sq = _int_det([list(r) for r in self.gram])
        return self._det_sq

    @property
    def det(self) -> float:
        return math.sqrt(self.det_squared)

    def contains(self, vector) -> bool:
        """Exact membership via back-substitution against the HNF basis."""
        v = [int(x) for x in vector]
        if len(v) != self.ambient_dim:
            raise ValueError("dimension mismatch")
        for row in self.basis:
            c = next((j for j, x in enumerate(row) if x != 0), None)
            if c is None:
                continue
            if v[c] % row[c] != 0:
                return False
            q = v[c] // row[c]
            if q:
                v = [a - q * b for a, b in zip(v, row)]
        return all(x == 0 for x in v)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IntLattice)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"IntLattice(dim={self.ambient_dim}, rank={self.rank}, det2={self.det_squared})"

    def to_debug_json(self) -> str:
        cols = [[row[i] for row in self.basis] for i in range(self.ambient_dim)]
        return json.dumps(
            {
                "ambient_dim": self.ambient_dim,
                "rank": self.rank,
                "basis": cols,
                "det_squared": self.det_squared,
            }
        )


@dataclass(frozen=True)
class ConeSpec:
    """Cones |<v, t>| <= ||v|| ||t|| / (2 gamma), one per vector."""

    vectors: tuple[tuple[int, ...], ...]
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if any(all(x == 0 for x in v) for v in self.vectors):
            raise ValueError("cone vectors must be non-zero")


def _content(v) -> int:
    g = 0
    for x in v:
        g = math.gcd(g, int(x))
    return g


def kernel_lattice(c) -> IntLattice:
    """Integer vectors orthogonal to c; primitive of rank N-1."""
    c = tuple(int(x) for x in c)
    if all(x == 0 for x in c):
        raise ValueError("c must be non-zero")
    basis = integer_kernel([c])
    return IntLattice(basis, len(c))


def kernel_lattice_multi(c_list) -> IntLattice:
    """Intersection of the kernels of k independent forms; rank N-k."""
    cs = [tuple(int(x) for x in c) for c in c_list]
    n = len(cs[0])
    if not 1 <= len(cs) <= n - 1:
        raise ValueError("need 1..N-1 vectors")
    if _int_rank(cs) != len(cs):
        raise ValueError("vectors must be linearly independent")
    return IntLattice(integer_kernel(cs), n)


def congruence_lattice(c, Q: int) -> IntLattice:
    """Full-rank lattice {y : <c, y> = 0 mod Q}.

    Computed as the projection of the exact kernel of (c, -Q) in Z^(N+1);
    the projection is injective, so the projected basis is a basis.
    """
    c = tuple(int(x) for x in c)
    if Q < 1:
        raise ValueError("Q must be positive")
    ext = c + (-Q,)
    basis = [row[:-1] for row in integer_kernel([ext])]
    return IntLattice(basis, len(c))


def congruence_intersection(c, d, Q: int, mode: str = "both-mod-Q") -> IntLattice:
    """Lambda_c^(Q) int Lambda_d^(Q) (rank N) or Lambda_c int Lambda_d^(Q) (rank N-1)."""
    c = tuple(int(x) for x in c)
    d = tuple(int(x) for x in d)
    if Q < 1:
        raise ValueError("Q must be positive")
    if _content(c) != 1 or _content(d) != 1:
        raise ValueError("c and d must be primitive")
    if _int_rank([c, d]) != 2:
        raise ValueError("c and d must be linearly independent")
    n = len(c)
    if mode == "both-mod-Q":
        f1 = c + (-Q, 0)
        f2 = d + (0, -Q)
        basis = [row[:n] for row in integer_kernel([f1, f2])]
    elif mode == "exact-and-mod-Q":
        f1 = c + (0,)
        f2 = d + (-Q,)
        basis = [row[:n] for row in integer_kernel([f1, f2])]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return IntLattice(basis, n)


def minors_gcd(c_list) -> int:
    """gcd of the k x k minors of the N x k matrix with columns c_list."""
    cs = [tuple(int(x) for x in c) for c in c_list]
    k = len(cs)
    n = len(cs[0])
    if k > n:
        raise ValueError("more vectors than ambient dimension")
    g = 0
    for rows in combinations(range(n), k):
        sub = [[cs[j][i] for j in range(k)] for i in rows]
        g = math.gcd(g, abs(_int_det(sub)))
    if g == 0:
        raise ValueError("vectors are linearly dependent (all minors vanish)")
    return g


def d2_squared(x, y) -> int:
    """Square of the minimal determinant of a rank-2 sublattice of Z^N
    containing x and y; equals det(Lambda_x int Lambda_y)^2."""
    x = tuple(int(v) for v in x)
    y = tuple(int(v) for v in y)
    nx = sum(v * v for v in x)
    ny = sum(v * v for v in y)
    ip = sum(a * b for a, b in zip(x, y))
    gram2 = nx * ny - ip * ip
    if gram2 == 0:
        raise ValueError("x and y must be linearly independent")
    g = minors_gcd([x, y])
    q, r = divmod(gram2, g * g)
    if r:
        raise AssertionError("minors gcd square must divide the pair Gram determinant")
    return q


def _gram_inverse_diag_bounds(gram, cap: int) -> list[int]:
    """Coefficient bounds b_i with |t_i| <= b_i for ||B^T t||^2 <= cap.

    Uses the exact ellipsoid bound t_i^2 <= cap * (G^-1)_ii with the
    rational inverse adj/det; rounded up by one to be safe.
    """
    r = len(gram)
    det = _int_det([list(row) for row in gram])
    bounds = []
    for i in range(r):
        sub = [
            [gram[a][b] for b in range(r) if b != i]
            for a in range(r)
            if a != i
        ]
        adj_ii = _int_det(sub)
        num = cap * adj_ii
        b = math.isqrt((num + det - 1) // det) + 1
        bounds.append(b)
    return bounds


def _enumerate_coeff_box(basis_mat: np.ndarray, bounds: list[int], budget: int):
    """Yield (points, norms_sq) chunks for all coefficient vectors in the box.

    Slabs over the axis with the largest bound to keep chunks bounded.
    """
    total = 1
    for b in bounds:
        total *= 2 * b + 1
    if total > budget:
        raise BudgetExceededError(
            f"enumeration box of {total} candidates exceeds budget {budget}"
        )
    r = len(bounds)
    slab_axis = max(range(r), key=lambda i: bounds[i])
    rest_axes = [i for i in range(r) if i != slab_axis]
    if rest_axes:
        ranges = [np.arange(-bounds[i], bounds[i] + 1, dtype=np.int64) for i in rest_axes]
        grids = np.meshgrid(*ranges, indexing="ij")
        rest = np.stack([g.ravel() for g in grids], axis=1)
    else:
        rest = np.zeros((1, 0), dtype=np.int64)
    n_rest = rest.shape[0]
    slab = max(1, (1 << 21) // max(n_rest, 1))
    vals = np.arange(-bounds[slab_axis], bounds[slab_axis] + 1, dtype=np.int64)
    for lo in range(0, len(vals), slab):
        head = vals[lo : lo + slab]
        coeffs = np.empty((len(head) * n_rest, r), dtype=np.int64)
        coeffs[:, slab_axis] = np.repeat(head, n_rest)
        for pos, ax in enumerate(rest_axes):
            coeffs[:, ax] = np.tile(rest[:, pos], len(head))
        pts = coeffs @ basis_mat
        norms = np.sum(pts * pts, axis=1)
        yield pts, norms


def successive_minima(lattice: IntLattice, budget: int = ENUMERATION_BUDGET) -> list[int]:
    """Exact squared successive minima by exhaustive enumeration.

    Enumerates all lattice vectors with norm^2 <= C, growing C until R
    independent vectors are found below it, then reads the minima off the
    sorted list.
    """
    r = lattice.rank
    if r < 1:
        raise ValueError("rank must be at least 1")
    gram = lattice.gram
    basis_mat = np.array([list(b) for b in lattice.basis], dtype=np.int64)
    cap = max(gram[i][i] for i in range(r))
    while True:
        bounds = _gram_inverse_diag_bounds(gram, cap)
        found: list[tuple[int, np.ndarray]] = []
        for pts, norms in _enumerate_coeff_box(basis_mat, bounds, budget):
            sel = (norms > 0) & (norms <= cap)
            for p, nsq in zip(pts[sel], norms[sel]):
                found.append((int(nsq), p))
        found.sort(key=lambda it: it[0])
        minima: list[int] = []
        chosen: list[list[int]] = []
        for nsq, p in found:
            if len(chosen) == r:
                break
            cand = chosen + [list(p)]
            if _int_rank(cand) == len(cand):
                chosen = cand
                minima.append(nsq)
        if len(minima) == r and minima[-1] <= cap:
            return minima
        cap *= 2


def points_in_region(
    lattice: IntLattice,
    T: float,
    cones: ConeSpec | None = None,
    primitive_only: bool = False,
    exclude_zero: bool = False,
    strict: bool = False,
    return_points: bool = False,
    budget: int = ENUMERATION_BUDGET,
):
    """Exact count of lattice points y with ||y|| <= T (or < T when strict)
    lying in every cone of ``cones``; optionally only primitive points.

    Returns the count, or (count, sorted point list) with return_points.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    gram = lattice.gram
    basis_mat = np.array([list(b) for b in lattice.basis], dtype=np.int64)
    cap = int(math.floor(T * T)) + 1
    bounds = _gram_inverse_diag_bounds(gram, cap)
    t_sq = T * T
    cone_data = []
    if cones is not None:
        for v in cones.vectors:
            varr = np.array(v, dtype=np.int64)
            nv2 = float(np.dot(varr, varr))
            cone_data.append((varr, nv2))
        four_g2 = 4.0 * cones.gamma * cones.gamma
    count = 0
    pts_out = []
    for pts, norms in _enumerate_coeff_box(basis_mat, bounds, budget):
        fn = norms.astype(np.float64)
        mask = fn < t_sq if strict else fn <= t_sq
        if exclude_zero or primitive_only:
            mask &= norms > 0
        for varr, nv2 in cone_data:
            ip = pts @ varr
            mask &= four_g2 * (ip.astype(np.float64) ** 2) <= nv2 * fn
        if primitive_only:
            g = np.gcd.reduce(np.abs(pts), axis=1)
            mask &= g == 1
        count += int(np.count_nonzero(mask))
        if return_points:
            pts_out.extend(tuple(int(x) for x in p) for p in pts[mask])
    if return_points:
        pts_out.sort()
        return count, pts_out
    return count
