"""Sign tables for the exterior algebra of ``C^d`` with generators dz_i, dzbar_j.

A basis monomial of type (p, q) is a sorted tuple of generator labels, where
labels ``0..d-1`` stand for dz_1..dz_d and ``d..2d-1`` for dzbar_1..dzbar_d.
Sorting puts every dz before every dzbar, so ``dz^I ^ dzbar^J`` is the
canonical ordering.  Monomials are orthonormal.

Conventions:

* ``dzbar_k ^`` and ``dz_k ^`` multiply from the left.
* ``iota_i`` (interior product with d/dz_i) is a left derivation.
* contraction with a Beltrami form ``phi = sum phi^i_j d/dz_i (x) dzbar_j`` is
  ``i_phi(w) = sum_ij phi^i_j dzbar_j ^ iota_i(w)``.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def basis(d: int, p: int, q: int) -> tuple[tuple[int, ...], ...]:
    if not (0 <= p <= d and 0 <= q <= d):
        return ()
    return tuple(
        zi + tuple(d + j for j in zj)
        for zi in itertools.combinations(range(d), p)
        for zj in itertools.combinations(range(d), q)
    )


@lru_cache(maxsize=None)
def index(d: int, p: int, q: int) -> dict[tuple[int, ...], int]:
    return {m: k for k, m in enumerate(basis(d, p, q))}


def size(d: int, p: int, q: int) -> int:
    return len(basis(d, p, q))


def merge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and sorted support of ``a ^ b`` (sign 0 if they share a generator)."""
    if set(a) & set(b):
        return 0, ()
    seq = list(a) + list(b)
    inversions = sum(1 for x, y in itertools.combinations(seq, 2) if x > y)
    return (-1) ** inversions, tuple(sorted(seq))


@lru_cache(maxsize=None)
def left_wedge(d: int, p: int, q: int, label: int) -> np.ndarray:
    """Matrix of ``g ^`` for the generator ``label`` on type (p, q)."""
    holo = label < d
    dst_p, dst_q = (p + 1, q) if holo else (p, q + 1)
    src, dst = basis(d, p, q), index(d, dst_p, dst_q)
    m = np.zeros((len(dst), len(src)))
    for col, mono in enumerate(src):
        sign, out = merge_sign((label,), mono)
        if sign:
            m[dst[out], col] = sign
    return m


def wedge_dzbar(d: int, p: int, q: int, k: int) -> np.ndarray:
    return left_wedge(d, p, q, d + k)


def wedge_dz(d: int, p: int, q: int, k: int) -> np.ndarray:
    return left_wedge(d, p, q, k)


@lru_cache(maxsize=None)
def interior(d: int, p: int, q: int, i: int) -> np.ndarray:
    """Matrix of ``iota_{d/dz_i}`` from type (p, q) to (p-1, q)."""
    src, dst = basis(d, p, q), index(d, p - 1, q)
    m = np.zeros((len(dst), len(src)))
    for col, mono in enumerate(src):
        if i in mono:
            pos = mono.index(i)
            m[dst[mono[:pos] + mono[pos + 1:]], col] = (-1) ** pos
    return m


@lru_cache(maxsize=None)
def contraction_tensor(d: int, p: int, q: int) -> np.ndarray:
    """``C[out, in, i, j]`` with ``i_phi(w)_out = sum C phi^i_j w_in``.

    Maps type (p, q) to (p-1, q+1).
    """
    n_out, n_in = size(d, p - 1, q + 1), size(d, p, q)
    c = np.zeros((n_out, n_in, d, d))
    for i in range(d):
        iota = interior(d, p, q, i)
        for j in range(d):
            c[:, :, i, j] = wedge_dzbar(d, p - 1, q, j) @ iota
    return c


@lru_cache(maxsize=None)
def wedge_tensor(d: int, p1: int, q1: int, p2: int, q2: int) -> np.ndarray:
    """``W[out, a, b]`` with ``(x ^ y)_out = sum W x_a y_b``."""
    b1, b2 = basis(d, p1, q1), basis(d, p2, q2)
    dst = index(d, p1 + p2, q1 + q2)
    w = np.zeros((len(dst), len(b1), len(b2)))
    for a, ma in enumerate(b1):
        for b, mb in enumerate(b2):
            sign, out = merge_sign(ma, mb)
            if sign:
                w[dst[out], a, b] = sign
    return w


@lru_cache(maxsize=None)
def conjugation(d: int, p: int, q: int) -> np.ndarray:
    """Signed permutation ``P`` with ``conj(sum c_m m) = sum (P @ conj(c))_m m``.

    Maps type (p, q) coefficients to type (q, p) coefficients.
    """
    src, dst = basis(d, p, q), index(d, q, p)
    m = np.zeros((len(dst), len(src)))
    for col, mono in enumerate(src):
        # conj swaps dz_i <-> dzbar_i but keeps the order of factors
        swapped = [g + d if g < d else g - d for g in mono]
        inversions = sum(1 for x, y in itertools.combinations(swapped, 2) if x > y)
        m[dst[tuple(sorted(swapped))], col] = (-1) ** inversions
    return m


def label(d: int, mono: tuple[int, ...]) -> str:
    parts = [f"dz{g + 1}" if g < d else f"dzb{g - d + 1}" for g in mono]
    return "^".join(parts) if parts else "1"
