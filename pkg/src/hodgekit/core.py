"""Truncated multi-variable power series, block unipotent matrices, tolerances.

Series coefficients are stored sparsely, keyed by exponent tuples, and
truncated by total degree.  Coefficients may be scalars, numpy arrays or any
form object supporting ``+`` and multiplication by a complex scalar.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping

import numpy as np

from .exceptions import ShapeError, ValidationError

MultiIndex = tuple[int, ...]


def degree(index: MultiIndex) -> int:
    return sum(index)


def multi_indices(n: int, deg: int) -> Iterator[MultiIndex]:
    """All exponent tuples of length ``n`` and total degree ``deg``.

    Ordering is reverse-lexicographic, so ``(deg, 0, ..., 0)`` comes first.
    """
    if n == 0:
        if deg == 0:
            yield ()
        return
    for first in range(deg, -1, -1):
        for rest in multi_indices(n - 1, deg - first):
            yield (first,) + rest


def monomial(index: MultiIndex, t: np.ndarray) -> complex:
    out = 1.0 + 0.0j
    for e, x in zip(index, t):
        if e:
            out *= x**e
    return out


def _is_zero(value: Any) -> bool:
    if np.isscalar(value):
        return value == 0
    if isinstance(value, np.ndarray):
        return not np.any(value)
    # form objects expose their coefficient array
    for attr in ("coeffs", "values"):
        arr = getattr(value, attr, None)
        if isinstance(arr, np.ndarray):
            return not np.any(arr)
    return False


@dataclass(frozen=True)
class Tolerances:
    eq_tol: float = 1e-10
    fd_tol: float = 1e-6
    pd_margin: float = 1e-12

    def __post_init__(self):
        for name in ("eq_tol", "fd_tol", "pd_margin"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class TruncatedSeries:
    """Power series in ``n`` variables truncated at total degree ``max_degree``.

    ``coeffs`` maps exponent tuples to coefficients; absent keys are zero.
    """

    n: int
    max_degree: int
    coeffs: Mapping[MultiIndex, Any] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for idx, c in self.coeffs.items():
            idx = tuple(int(e) for e in idx)
            if len(idx) != self.n or any(e < 0 for e in idx):
                raise ShapeError(f"bad multi-index {idx} for {self.n} variables")
            if degree(idx) > self.max_degree:
                raise ShapeError(f"multi-index {idx} exceeds truncation degree {self.max_degree}")
            if not _is_zero(c):
                clean[idx] = c
        object.__setattr__(self, "coeffs", clean)

    def __getitem__(self, index: MultiIndex):
        return self.coeffs.get(tuple(index), 0)

    def __iter__(self):
        return iter(sorted(self.coeffs.items(), key=lambda kv: (degree(kv[0]), tuple(-e for e in kv[0]))))

    def homogeneous(self, deg: int) -> dict[MultiIndex, Any]:
        return {i: c for i, c in self.coeffs.items() if degree(i) == deg}

    def map(self, func: Callable[[Any], Any]) -> "TruncatedSeries":
        return TruncatedSeries(self.n, self.max_degree, {i: func(c) for i, c in self.coeffs.items()})

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        _check_same_n(self, other)
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            out[i] = out[i] + c if i in out else c
        return TruncatedSeries(self.n, max(self.max_degree, other.max_degree), out)

    def scale(self, factor: complex) -> "TruncatedSeries":
        return self.map(lambda c: c * factor)


def _check_same_n(a: TruncatedSeries, b: TruncatedSeries) -> None:
    if a.n != b.n:
        raise ShapeError(f"parameter-count mismatch: {a.n} vs {b.n}")


def series_eval(s: TruncatedSeries, t, zero=0, upto: int | None = None):
    """Evaluate ``s`` at the point ``t`` (length ``s.n``).

    ``zero`` is returned for an empty series.  ``upto`` restricts the sum to
    terms of total degree at most ``upto``.
    """
    t = np.asarray(t, dtype=complex).reshape(-1)
    if t.shape[0] != s.n:
        raise ShapeError(f"point has {t.shape[0]} coordinates, series has {s.n} variables")
    if not np.all(np.isfinite(t)):
        raise ValueError("evaluation point must be finite")
    total = zero
    for idx, c in s:
        if upto is not None and degree(idx) > upto:
            continue
        total = total + c * monomial(idx, t)
    return total


def series_mul(a: TruncatedSeries, b: TruncatedSeries, max_degree: int | None = None,
               product: Callable[[Any, Any], Any] | None = None) -> TruncatedSeries:
    """Cauchy product of two series, dropping terms above ``max_degree``.

    ``product`` defaults to ordinary multiplication; pass a bilinear map
    (bracket, contraction) to convolve form-valued series.
    """
    _check_same_n(a, b)
    if max_degree is None:
        max_degree = max(a.max_degree, b.max_degree)
    mul = product if product is not None else (lambda x, y: x * y)
    out: dict[MultiIndex, Any] = {}
    for (i, x), (j, y) in itertools.product(a, b):
        if degree(i) + degree(j) > max_degree:
            continue
        k = tuple(p + q for p, q in zip(i, j))
        term = mul(x, y)
        out[k] = out[k] + term if k in out else term
    return TruncatedSeries(a.n, max_degree, out)


def _as_block(x) -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"block must be a matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class BlockUpperUnipotent:
    """Block upper-triangular matrix with identity diagonal blocks.

    Block rows/columns have sizes ``(h20, h11, h02)`` with ``h02 == h20``;
    only the three off-diagonal blocks are stored.  Scalars are accepted as
    1x1 blocks.
    """

    b01: np.ndarray
    b02: np.ndarray
    b12: np.ndarray

    def __post_init__(self):
        b01, b02, b12 = _as_block(self.b01), _as_block(self.b02), _as_block(self.b12)
        h20, h11 = b01.shape
        if b02.shape != (h20, h20) or b12.shape != (h11, h20):
            raise ShapeError(
                f"inconsistent block shapes b01={b01.shape} b02={b02.shape} b12={b12.shape}")
        object.__setattr__(self, "b01", b01)
        object.__setattr__(self, "b02", b02)
        object.__setattr__(self, "b12", b12)

    @property
    def dims(self) -> tuple[int, int, int]:
        h20, h11 = self.b01.shape
        return h20, h11, h20

    @classmethod
    def identity(cls, h20: int, h11: int) -> "BlockUpperUnipotent":
        return cls(np.zeros((h20, h11)), np.zeros((h20, h20)), np.zeros((h11, h20)))

    def to_dense(self) -> np.ndarray:
        h20, h11, h02 = self.dims
        n = h20 + h11 + h02
        m = np.eye(n, dtype=complex)
        m[:h20, h20:h20 + h11] = self.b01
        m[:h20, h20 + h11:] = self.b02
        m[h20:h20 + h11, h20 + h11:] = self.b12
        return m

    @property
    def a_matrix(self) -> np.ndarray:
        """``b02 - b01 @ b12``, the matrix driving Kahler-class transport."""
        return self.b02 - self.b01 @ self.b12

    def max_abs(self) -> tuple[float, float, float]:
        """Largest entry modulus of each block (0 for empty blocks)."""
        return tuple(float(np.abs(b).max()) if b.size else 0.0 for b in (self.b01, self.b02, self.b12))


def block_product(p: BlockUpperUnipotent, q: BlockUpperUnipotent) -> BlockUpperUnipotent:
    if p.dims != q.dims:
        raise ShapeError(f"block dimension mismatch {p.dims} vs {q.dims}")
    return BlockUpperUnipotent(p.b01 + q.b01, p.b02 + q.b02 + p.b01 @ q.b12, p.b12 + q.b12)
