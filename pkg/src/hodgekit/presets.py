"""Deterministic example complexes and lattices used by the shipped scenarios."""

from __future__ import annotations

import numpy as np

from .backends.dgla import DGLAData

# V^0 -> V^1 -> V^2 -> V^3 with dimensions (1, 4, 3, 1).  D_0 hits e4, D_1 maps
# e3 onto f1, D_2 = 0.  Harmonic V^1 is two-dimensional, harmonic V^2 is
# spanned by the complement of f1.
_DIMS = (1, 4, 3, 1)


def _hpd(rng, n, spread=0.3):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return np.eye(n) + spread * (a @ a.conj().T) / n


def _symmetric(rng, n, scale):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a + a.T) / 2


def _skeleton():
    d0 = np.zeros((4, 1))
    d0[3, 0] = 1.0
    d1 = np.zeros((3, 4))
    d1[0, 2] = 1.0
    d2 = np.zeros((1, 3))
    return [d0, d1, d2]


def unobstructed_dgla(seed: int = 7, scale: float = 0.4) -> DGLAData:
    """Bracket lands in ``im D_1``, so every harmonic projection of a bracket vanishes."""
    rng = np.random.default_rng(seed)
    br = np.zeros((3, 4, 4), complex)
    br[0] = _symmetric(rng, 4, scale)
    grams = [_hpd(rng, n) for n in _DIMS]
    # keep im D_1 orthogonal-complement structure generic but D_1 D_0 = 0 exact
    return DGLAData(_skeleton(), br, grams, name="unobstructed")


def obstructed_dgla(seed: int = 11, scale: float = 0.4) -> DGLAData:
    """Bracket with a harmonic component: ``H B(theta, theta) != 0``."""
    rng = np.random.default_rng(seed)
    br = np.zeros((3, 4, 4), complex)
    for k in range(3):
        br[k] = _symmetric(rng, 4, scale)
    grams = [_hpd(rng, n) for n in _DIMS]
    return DGLAData(_skeleton(), br, grams, name="obstructed")


def flat_dgla(dims=(1, 2, 2, 1)) -> DGLAData:
    """All differentials zero: everything is harmonic and Green's operator vanishes."""
    n0, n1, n2, n3 = dims
    ds = [np.zeros((n1, n0)), np.zeros((n2, n1)), np.zeros((n3, n2))]
    return DGLAData(ds, np.zeros((n2, n1, n1)), name="flat")
