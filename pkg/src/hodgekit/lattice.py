"""Integral lattices, Mukai vectors and weight-2 period points.

All lattice operations use exact Python integers.  Floating point only enters
through complex period points.  Searches over lattice vectors are bounded:
every verdict is relative to the search bound passed in.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exceptions import ShapeError, ValidationError


class DegenerateVectorWarning(UserWarning):
    """A Mukai vector with negative square was passed to a dimension formula."""


def _int_matrix(m) -> tuple[tuple[int, ...], ...]:
    rows = []
    for row in m:
        out = []
        for x in row:
            if isinstance(x, (float, np.floating)) and not float(x).is_integer():
                raise ValidationError(f"non-integer Gram entry {x}")
            out.append(int(x))
        rows.append(tuple(out))
    return tuple(rows)


def int_det(m) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    a = [list(r) for r in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class IntegralLattice:
    gram: tuple

    def __post_init__(self):
        g = _int_matrix(self.gram)
        n = len(g)
        if any(len(r) != n for r in g):
            raise ValidationError("Gram matrix must be square")
        if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise ValidationError("Gram matrix must be symmetric")
        if n and int_det(g) == 0:
            raise ValidationError("Gram matrix is degenerate")
        object.__setattr__(self, "gram", g)

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def det(self) -> int:
        return int_det(self.gram)

    def array(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64).reshape(self.rank, self.rank)

    def pair(self, x, y) -> int:
        x, y = _vec(x, self.rank), _vec(y, self.rank)
        return sum(x[i] * self.gram[i][j] * y[j] for i in range(self.rank) for j in range(self.rank) if self.gram[i][j])

    def signature(self) -> tuple[int, int]:
        ev = np.linalg.eigvalsh(self.array().astype(float))
        return int((ev > 0).sum()), int((ev < 0).sum())


def _vec(x, n: int) -> tuple[int, ...]:
    x = tuple(int(v) for v in x)
    if len(x) != n:
        raise ShapeError(f"vector of length {len(x)} in a rank-{n} lattice")
    return x


def direct_sum(*grams) -> tuple:
    n = sum(len(g) for g in grams)
    out = [[0] * n for _ in range(n)]
    off = 0
    for g in grams:
        for i, row in enumerate(g):
            for j, x in enumerate(row):
                out[off + i][off + j] = int(x)
        off += len(g)
    return tuple(tuple(r) for r in out)


U = ((0, 1), (1, 0))
E8 = (
    (2, -1, 0, 0, 0, 0, 0, 0),
    (-1, 2, -1, 0, 0, 0, 0, 0),
    (0, -1, 2, -1, 0, 0, 0, 0),
    (0, 0, -1, 2, -1, 0, 0, 0),
    (0, 0, 0, -1, 2, -1, 0, -1),
    (0, 0, 0, 0, -1, 2, -1, 0),
    (0, 0, 0, 0, 0, -1, 2, 0),
    (0, 0, 0, 0, -1, 0, 0, 2),
)
E8_NEG = tuple(tuple(-x for x in row) for row in E8)


def mukai_gram(ns_gram) -> tuple:
    """Mukai lattice ``(r, xi, a)`` with ``<v, v'> = (xi, xi') - r a' - r' a``."""
    ns = _int_matrix(ns_gram)
    k = len(ns)
    n = k + 2
    out = [[0] * n for _ in range(n)]
    out[0][n - 1] = out[n - 1][0] = -1
    for i in range(k):
        for j in range(k):
            out[1 + i][1 + j] = ns[i][j]
    return tuple(tuple(r) for r in out)


@lru_cache(maxsize=None)
def preset(name: str) -> IntegralLattice:
    """Named lattices: ``toy_rank3`` (Mukai lattice over <2>), ``hyperbolic_U``, ``k3_full``."""
    table = {
        "toy_rank3": mukai_gram(((2,),)),
        "hyperbolic_U": U,
        "k3_full": direct_sum(U, U, U, E8_NEG, E8_NEG),
    }
    if name not in table:
        raise ValidationError(f"unknown lattice preset {name!r}; choose from {sorted(table)}")
    return IntegralLattice(table[name])


# -- Mukai vectors ------------------------------------------------------------


@dataclass(frozen=True)
class MukaiVector:
    r: int
    xi: tuple
    a: int

    def __post_init__(self):
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "xi", tuple(int(x) for x in self.xi))
        object.__setattr__(self, "a", int(self.a))

    def as_tuple(self) -> tuple[int, ...]:
        return (self.r,) + self.xi + (self.a,)

    @classmethod
    def from_tuple(cls, v) -> "MukaiVector":
        v = tuple(int(x) for x in v)
        if len(v) < 2:
            raise ShapeError("a Mukai vector has at least the entries r and a")
        return cls(v[0], v[1:-1], v[-1])


def _ns(ns_gram, k: int) -> tuple:
    ns = _int_matrix(ns_gram)
    if len(ns) != k:
        raise ShapeError(f"NS lattice has rank {len(ns)}, vector has {k} middle entries")
    return ns


def mukai_pairing(v: MukaiVector, w: MukaiVector, ns_gram) -> int:
    if len(v.xi) != len(w.xi):
        raise ShapeError("Mukai vectors over NS lattices of different rank")
    ns = _ns(ns_gram, len(v.xi))
    k = len(ns)
    mid = sum(v.xi[i] * ns[i][j] * w.xi[j] for i in range(k) for j in range(k))
    return mid - w.r * v.a - v.r * w.a


def mukai_vector(r: int, c1, ch2: int) -> MukaiVector:
    """``v = (r, c1, ch2 + r)``."""
    return MukaiVector(r, tuple(c1), ch2 + r)


def moduli_dimension(v: MukaiVector, ns_gram) -> int:
    """``v^2 + 2``; warns when ``v^2 < 0``."""
    sq = mukai_pairing(v, v, ns_gram)
    if sq < 0:
        warnings.warn(f"v^2 = {sq} < 0: the dimension formula is degenerate here",
                      DegenerateVectorWarning, stacklevel=2)
    return sq + 2


def slope(r, c1, omega, ns_gram):
    """``(c1 . omega) / r``; exact :class:`Fraction` for integer input."""
    k = len(tuple(c1))
    ns = _ns(ns_gram, k)
    if r == 0:
        raise ValidationError("slope is undefined for rank zero")
    num = sum(c1[i] * ns[i][j] * omega[j] for i in range(k) for j in range(k))
    if all(isinstance(x, (int, np.integer)) for x in (r, *c1, *omega)):
        return Fraction(int(num), int(r))
    return float(num) / float(r)


def stability_compare(sub, whole, omega, ns_gram) -> dict:
    """Compare slopes of a sub-object ``(r, c1)`` and the whole ``(r, c1)``."""
    (rs, cs), (rw, cw) = sub, whole
    if not 0 < rs < rw:
        raise ValidationError("need 0 < rank(sub) < rank(whole)")
    ms, mw = slope(rs, cs, omega, ns_gram), slope(rw, cw, omega, ns_gram)
    return {"mu_sub": ms, "mu_whole": mw, "strictly_smaller": ms < mw, "equal": ms == mw}


# -- integer linear algebra ---------------------------------------------------


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def integer_kernel(row) -> list[tuple[int, ...]]:
    """Basis of ``{x in Z^n : row . x = 0}`` via unimodular column operations."""
    w = [int(x) for x in row]
    n = len(w)
    U = [[int(i == j) for j in range(n)] for i in range(n)]  # columns are basis vectors
    pivot = next((i for i in range(n) if w[i] != 0), None)
    if pivot is None:
        return [tuple(U[i][j] for i in range(n)) for j in range(n)]
    for j in range(n):
        if j == pivot or w[j] == 0:
            continue
        g, x, y = _xgcd(w[pivot], w[j])
        a, b = w[pivot] // g, w[j] // g
        # [c_p, c_j] <- [x c_p + y c_j, -b c_p + a c_j], determinant x a + y b = 1
        for i in range(n):
            cp, cj = U[i][pivot], U[i][j]
            U[i][pivot], U[i][j] = x * cp + y * cj, -b * cp + a * cj
        w[pivot], w[j] = g, 0
    return [tuple(U[i][j] for i in range(n)) for j in range(n) if j != pivot]


def hermite_rows(vectors) -> list[tuple[int, ...]]:
    """Row Hermite normal form of an integer matrix (zero rows dropped)."""
    a = [list(v) for v in vectors]
    if not a:
        return []
    m, n = len(a), len(a[0])
    row = 0
    for col in range(n):
        if row == m:
            break
        while True:
            nz = [i for i in range(row, m) if a[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(a[i][col]))
            a[row], a[piv] = a[piv], a[row]
            done = True
            for i in range(row + 1, m):
                q = a[i][col] // a[row][col]
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[row])]
                if a[i][col] != 0:
                    done = False
            if done:
                break
        if row < m and a[row][col] != 0:
            if a[row][col] < 0:
                a[row] = [-x for x in a[row]]
            for i in range(row):
                q = a[i][col] // a[row][col]
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[row])]
            row += 1
    return [tuple(r) for r in a if any(r)]


@dataclass(frozen=True)
class Complement:
    basis: tuple
    gram: tuple


def orth_complement(v, gram) -> Complement:
    """Integral basis of ``v^perp`` (row Hermite form) and its restricted Gram matrix."""
    lat = gram if isinstance(gram, IntegralLattice) else IntegralLattice(gram)
    v = _vec(v.as_tuple() if isinstance(v, MukaiVector) else v, lat.rank)
    if not any(v):
        raise ValidationError("v must be nonzero")
    n = lat.rank
    row = [sum(v[i] * lat.gram[i][j] for i in range(n)) for j in range(n)]
    basis = hermite_rows(integer_kernel(row))
    g = tuple(tuple(lat.pair(x, y) for y in basis) for x in basis)
    return Complement(tuple(basis), g)


def in_integer_span(x, basis) -> bool:
    """Whether ``x`` is an integer combination of ``basis`` (rows in Hermite form)."""
    rest = list(x)
    for b in basis:
        col = next(i for i, e in enumerate(b) if e)
        if rest[col] % b[col]:
            return False
        q = rest[col] // b[col]
        rest = [r - q * e for r, e in zip(rest, b)]
    return not any(rest)


# -- period points ------------------------------------------------------------


def _gram_array(gram) -> np.ndarray:
    lat = gram if isinstance(gram, IntegralLattice) else IntegralLattice(gram)
    return lat.array().astype(float)


def _point(z, n: int) -> np.ndarray:
    z = np.asarray(z, complex).reshape(-1)
    if z.shape[0] != n:
        raise ShapeError(f"period point of length {z.shape[0]} in a rank-{n} lattice")
    if not np.any(z):
        raise ValidationError("period point must be nonzero")
    return z


def q_values(z, gram) -> tuple[complex, float]:
    """``(q(z, z), q(z, conj z))`` for a period point."""
    g = _gram_array(gram)
    z = _point(z, g.shape[0])
    return complex(z @ g @ z), float((z @ g @ z.conj()).real)


def in_period_domain(z, gram, eq_tol: float = 1e-10) -> bool:
    """``|q(z,z)| <= eq_tol |z|^2`` and ``q(z, conj z) > 0``."""
    qzz, qzzbar = q_values(z, gram)
    n2 = float(np.vdot(z, z).real)
    return abs(qzz) <= eq_tol * n2 and qzzbar > eq_tol * n2


def lattice_vectors(rank: int, bound: int, max_count: int = 5_000_000) -> np.ndarray:
    """Nonzero integer vectors with ``|x|_inf <= bound``, one per sign pair.

    Ordered by infinity-norm shell, then lexicographically; the first nonzero
    entry is positive.
    """
    if bound < 1:
        raise ValidationError("search bound must be >= 1")
    total = (2 * bound + 1) ** rank
    if total > max_count:
        raise ValidationError(f"search box has {total} points; reduce the bound or rank")
    axis = np.arange(-bound, bound + 1)
    grid = np.stack(np.meshgrid(*[axis] * rank, indexing="ij"), axis=-1).reshape(-1, rank)
    nz = grid != 0
    first = np.argmax(nz, axis=1)
    keep = nz.any(axis=1) & (grid[np.arange(len(grid)), first] > 0)
    grid = grid[keep]
    shell = np.abs(grid).max(axis=1)
    return grid[np.argsort(shell, kind="stable")]


def is_generic_period(z, gram, search_bound: int, eq_tol: float = 1e-10) -> tuple[bool, tuple | None]:
    """No integral ``lambda`` with ``|lambda|_inf <= bound`` and ``q(z, lambda) ~ 0``."""
    g = _gram_array(gram)
    z = _point(z, g.shape[0])
    cands = lattice_vectors(g.shape[0], search_bound)
    vals = np.abs(cands @ (g @ z))
    lim = eq_tol * np.linalg.norm(z) * np.linalg.norm(cands, axis=1)
    hits = np.nonzero(vals <= lim)[0]
    if hits.size:
        return False, tuple(int(x) for x in cands[hits[0]])
    return True, None


def projectivity_witness(z, gram, search_bound: int, eq_tol: float = 1e-10) -> tuple | None:
    """First integral ``l`` with ``q(l, l) > 0`` and ``q(z, l) ~ 0`` within the bound."""
    lat = gram if isinstance(gram, IntegralLattice) else IntegralLattice(gram)
    if not in_period_domain(z, lat, eq_tol):
        raise ValidationError("period point is not in the period domain")
    g = lat.array().astype(float)
    z = _point(z, lat.rank)
    z = z / np.linalg.norm(z)
    cands = lattice_vectors(lat.rank, search_bound)
    orth = np.abs(cands @ (g @ z)) <= eq_tol * np.linalg.norm(cands, axis=1)
    gi = lat.array()
    sq = np.einsum("ij,jk,ik->i", cands, gi, cands)
    hits = np.nonzero(orth & (sq > 0))[0]
    return tuple(int(x) for x in cands[hits[0]]) if hits.size else None


def sequence_domain_check(points, gram, margin: float = 1e-6, eq_tol: float = 1e-10) -> dict:
    """Normalised bounded-in-domain proxy for a sequence of period points.

    ``first_violation`` is the 0-based position of the first point that fails
    either condition, or ``None``.
    """
    points = list(points)
    if not points:
        raise ValidationError("need at least one period point")
    g = _gram_array(gram)
    qbar, qq = [], []
    first = None
    for k, z in enumerate(points):
        z = _point(z, g.shape[0])
        z = z / np.linalg.norm(z)
        a, b = abs(complex(z @ g @ z)), float((z @ g @ z.conj()).real)
        qq.append(a)
        qbar.append(b)
        if first is None and (a > eq_tol or b < margin):
            first = k
    return {
        "min_q_zbar": min(qbar),
        "max_abs_q_zz": max(qq),
        "bounded_in_domain": first is None,
        "first_violation": first,
        "margin": margin,
    }
