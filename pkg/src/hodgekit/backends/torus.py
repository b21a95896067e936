"""Flat complex torus ``E_tau^d`` with forms stored as truncated Fourier series.

The torus is the product of ``d`` copies of ``C / L(Z + tau Z)``, scaled so
that its Riemannian volume equals ``volume``.  A point has lattice
coordinates ``x = (a_1, b_1, ..., a_d, b_d)`` in ``[0, 1)^{2d}`` with
``z_k = L (a_k + tau b_k)``, and the Fourier mode ``mu = (m_1, n_1, ...)``
is ``exp(2 pi i sum_k (m_k a_k + n_k b_k))``.

On the flat metric every operator is diagonal in the modes, so ``dbar`` and
``dbar_star`` are exact mode-wise matrices and the Laplacian on each mode is
``sum_k |sbar_k(mu)|^2`` times the identity.  Products (bracket, contraction)
are evaluated pseudo-spectrally on a zero-padded grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import exterior as ext
from ..exceptions import AliasingWarning, ShapeError, ValidationError


@dataclass(frozen=True, eq=False)
class TorusForm:
    """Fourier coefficients of a form on the torus.

    ``coeffs`` has shape ``(A, B, *(2K+1,)*2d)``: ``A`` is the vector index
    (``d`` for T^{1,0}-valued forms, 1 for scalar forms), ``B`` runs over the
    exterior basis of type ``(p, q)`` and the trailing axes over modes
    ``-K..K``.
    """

    coeffs: np.ndarray
    p: int
    q: int
    vector: bool

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim < 2 or (c.ndim - 2) % 2:
            raise ShapeError(f"bad coefficient array shape {c.shape}")
        d = (c.ndim - 2) // 2
        if d and len(set(c.shape[2:])) != 1 or (d and c.shape[2] % 2 == 0):
            raise ShapeError(f"mode axes must all have odd length 2K+1, got {c.shape[2:]}")
        if self.vector and (self.p != 0 or c.shape[0] != d):
            raise ShapeError("vector forms are (0,q)-forms with d vector components")
        if not self.vector and c.shape[0] != 1:
            raise ShapeError("scalar forms have a single vector slot")
        if c.shape[1] != ext.size(d, self.p, self.q):
            raise ShapeError(f"basis axis has length {c.shape[1]}, expected {ext.size(d, self.p, self.q)}")
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return (self.coeffs.ndim - 2) // 2

    @property
    def K(self) -> int:
        return (self.coeffs.shape[2] - 1) // 2 if self.d else 0

    @property
    def degree(self) -> int:
        return self.q

    def _like(self, coeffs) -> "TorusForm":
        return TorusForm(coeffs, self.p, self.q, self.vector)

    def _check(self, other: "TorusForm") -> None:
        if (self.p, self.q, self.vector, self.d) != (other.p, other.q, other.vector, other.d):
            raise ShapeError("forms of different type cannot be combined")

    def resized(self, K: int) -> "TorusForm":
        return self._like(resize_modes(self.coeffs, K))

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        self._check(other)
        K = max(self.K, other.K)
        return self._like(resize_modes(self.coeffs, K) + resize_modes(other.coeffs, K))

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return self._like(self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def conj_coeffs(self) -> np.ndarray:
        return self.coeffs.conj()

    def zero_mode(self) -> np.ndarray:
        """Coefficients of the constant mode, shape ``(A, B)``."""
        centre = (self.K,) * (2 * self.d)
        return self.coeffs[(slice(None), slice(None)) + centre]


def resize_modes(coeffs: np.ndarray, K: int) -> np.ndarray:
    """Zero-pad or truncate the centred mode axes to band ``K``."""
    d2 = coeffs.ndim - 2
    if d2 == 0:
        return coeffs
    K0 = (coeffs.shape[2] - 1) // 2
    if K == K0:
        return coeffs
    if K < K0:
        cut = (slice(None), slice(None)) + (slice(K0 - K, K0 + K + 1),) * d2
        return coeffs[cut]
    pad = [(0, 0), (0, 0)] + [(K - K0, K - K0)] * d2
    return np.pad(coeffs, pad)


@dataclass(frozen=True)
class NormReport:
    c0: float
    sup_op: float
    w0: float
    c1: float

    def as_dict(self) -> dict:
        return {"c0": self.c0, "sup_op": self.sup_op, "w0": self.w0, "c1": self.c1}


class TorusBackend:
    """Dolbeault operators on the flat torus ``E_tau^d`` of a given volume.

    Parameters
    ----------
    d : int
        Complex dimension.
    K : int
        Mode cutoff: forms produced by ``random_form``/``zeros`` carry modes
        with ``|mu|_inf <= K``.
    tau : complex
        Modulus of each elliptic factor, ``Im tau > 0``.
    volume : float
        Total Riemannian volume.
    max_band : int, optional
        Largest band a product may occupy before it is truncated with an
        :class:`AliasingWarning`.  Defaults to ``2 K``.
    """

    def __init__(self, d: int = 2, K: int = 2, tau: complex = 1j, volume: float = 1.0,
                 max_band: int | None = None):
        tau = complex(tau)
        if int(d) != d or d < 1:
            raise ValidationError(f"complex dimension must be a positive integer, got {d}")
        if int(K) != K or K < 0:
            raise ValidationError(f"mode cutoff must be a non-negative integer, got {K}")
        if not tau.imag > 0:
            raise ValidationError(f"modulus must lie in the upper half plane, got {tau}")
        if not volume > 0:
            raise ValidationError(f"volume must be positive, got {volume}")
        self.d = int(d)
        self.K = int(K)
        self.tau = tau
        self.volume = float(volume)
        self.max_band = 2 * self.K if max_band is None else int(max_band)
        # each factor has area L^2 Im(tau)
        self.scale = np.sqrt(self.volume ** (1.0 / self.d) / tau.imag)

    def config(self) -> dict:
        return {"backend": "torus", "d": self.d, "K": self.K,
                "tau": [self.tau.real, self.tau.imag], "volume": self.volume}

    # -- symbols ---------------------------------------------------------

    @lru_cache(maxsize=16)
    def symbols(self, K: int) -> tuple[np.ndarray, np.ndarray]:
        """Mode-wise symbols of d/dzbar_k and d/dz_k, each shape ``(d, *modes)``."""
        d, tau, L = self.d, self.tau, self.scale
        r = np.arange(-K, K + 1)
        shape = (2 * K + 1,) * (2 * d)
        sbar = np.empty((d,) + shape, complex)
        s = np.empty((d,) + shape, complex)
        denom = (tau - tau.conjugate()) * L
        for k in range(d):
            m = r.reshape([-1 if ax == 2 * k else 1 for ax in range(2 * d)])
            n = r.reshape([-1 if ax == 2 * k + 1 else 1 for ax in range(2 * d)])
            sbar[k] = np.broadcast_to(2j * np.pi * (m * tau - n) / denom, shape)
            s[k] = np.broadcast_to(2j * np.pi * (n - m * tau.conjugate()) / denom, shape)
        return sbar, s

    def eigenvalues(self, K: int) -> np.ndarray:
        sbar, _ = self.symbols(K)
        return np.sum(np.abs(sbar) ** 2, axis=0)

    # -- construction ----------------------------------------------------

    def zeros(self, q: int, p: int = 0, vector: bool = True, K: int | None = None) -> TorusForm:
        K = self.K if K is None else K
        a = self.d if vector else 1
        return TorusForm(np.zeros((a, ext.size(self.d, p, q)) + (2 * K + 1,) * (2 * self.d), complex),
                         p, q, vector)

    def constant(self, matrix, q: int = 1, p: int = 0, vector: bool = True, K: int | None = None) -> TorusForm:
        """Constant form with zero-mode coefficients ``matrix`` of shape ``(A, B)``."""
        f = self.zeros(q, p, vector, K)
        c = f.coeffs.copy()
        c[(slice(None), slice(None)) + (f.K,) * (2 * self.d)] = np.asarray(matrix, complex).reshape(c.shape[:2])
        return TorusForm(c, p, q, vector)

    def random_form(self, rng: np.random.Generator, q: int = 1, p: int = 0, vector: bool = True,
                    K: int | None = None, decay: float = 1.0) -> TorusForm:
        """Complex Gaussian coefficients damped by ``(1 + |mu|^2)^(-decay)``."""
        f = self.zeros(q, p, vector, K)
        shape = f.coeffs.shape
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        r = np.arange(-f.K, f.K + 1)
        mu2 = sum(np.square(r).reshape([-1 if ax == j else 1 for ax in range(2 * self.d)])
                  for j in range(2 * self.d))
        return TorusForm(c * (1.0 + mu2) ** (-decay), p, q, vector)

    # -- grid transforms -------------------------------------------------

    def to_grid(self, f: TorusForm, n: int) -> np.ndarray:
        """Values on the uniform ``n^{2d}`` grid of lattice coordinates, shape ``(A, B, n, ..., n)``."""
        K, d2 = f.K, 2 * self.d
        if 2 * K + 1 > n:
            raise ShapeError(f"grid of {n} points cannot resolve band {K}")
        full = np.zeros(f.coeffs.shape[:2] + (n,) * d2, complex)
        m = np.arange(-K, K + 1) % n
        full[(slice(None), slice(None)) + np.ix_(*[m] * d2)] = f.coeffs
        axes = tuple(range(2, 2 + d2))
        return np.fft.ifftn(full, axes=axes) * n ** d2

    def from_grid(self, values: np.ndarray, K: int) -> np.ndarray:
        d2 = 2 * self.d
        n = values.shape[-1]
        axes = tuple(range(2, 2 + d2))
        c = np.fft.fftn(values, axes=axes) / n ** d2
        m = np.arange(-K, K + 1) % n
        return c[(slice(None), slice(None)) + np.ix_(*[m] * d2)]

    def _product_band(self, k1: int, k2: int, band: int | None) -> tuple[int, int]:
        exact = k1 + k2
        if band is not None:
            return exact, band
        if exact > self.max_band:
            warnings.warn(f"product band {exact} exceeds padded band {self.max_band}; truncated",
                          AliasingWarning, stacklevel=3)
            return exact, self.max_band
        return exact, exact

    def _grid_size(self, k1: int, k2: int) -> int:
        # 2x zero padding of the larger input band; always >= 2 (k1 + k2) + 1
        return max(2 * (2 * max(k1, k2) + 1), 2 * (k1 + k2) + 1)

    # -- differential operators -----------------------------------------

    def _apply(self, f: TorusForm, mats, syms, p: int, q: int) -> TorusForm:
        out = None
        for mat, sym in zip(mats, syms):
            term = np.einsum("ob,ab...->ao...", mat, f.coeffs * sym)
            out = term if out is None else out + term
        return TorusForm(out, p, q, f.vector)

    def dbar(self, f: TorusForm) -> TorusForm:
        sbar, _ = self.symbols(f.K)
        mats = [ext.wedge_dzbar(self.d, f.p, f.q, k) for k in range(self.d)]
        return self._apply(f, mats, sbar, f.p, f.q + 1)

    def dbar_star(self, f: TorusForm) -> TorusForm:
        if f.q == 0:
            raise ShapeError("dbar_star is not defined on (p,0)-forms")
        sbar, _ = self.symbols(f.K)
        mats = [ext.wedge_dzbar(self.d, f.p, f.q - 1, k).T for k in range(self.d)]
        return self._apply(f, mats, sbar.conj(), f.p, f.q - 1)

    def partial(self, f: TorusForm) -> TorusForm:
        if f.vector:
            raise ShapeError("partial is only defined on scalar forms")
        _, s = self.symbols(f.K)
        mats = [ext.wedge_dz(self.d, f.p, f.q, k) for k in range(self.d)]
        return self._apply(f, mats, s, f.p + 1, f.q)

    def partial_star(self, f: TorusForm) -> TorusForm:
        if f.vector or f.p == 0:
            raise ShapeError("partial_star needs a scalar form with p >= 1")
        _, s = self.symbols(f.K)
        mats = [ext.wedge_dz(self.d, f.p - 1, f.q, k).T for k in range(self.d)]
        return self._apply(f, mats, s.conj(), f.p - 1, f.q)

    def d_operator(self, f: TorusForm) -> tuple[TorusForm, TorusForm]:
        """Exterior derivative split by type: ``(partial f, dbar f)``."""
        return self.partial(f), self.dbar(f)

    def laplacian(self, f: TorusForm) -> TorusForm:
        out = self.zeros(f.q, f.p, f.vector, f.K)
        if f.q < self.d:
            out = out + self.dbar_star(self.dbar(f))
        if f.q > 0:
            out = out + self.dbar(self.dbar_star(f))
        return out

    def green(self, f: TorusForm) -> TorusForm:
        lam = self.eigenvalues(f.K)
        inv = np.divide(1.0, lam, out=np.zeros_like(lam), where=lam > 0)
        return f._like(f.coeffs * inv)

    def harmonic_project(self, f: TorusForm) -> TorusForm:
        lam = self.eigenvalues(f.K)
        return f._like(f.coeffs * (lam == 0))

    def t_operator(self, w: TorusForm) -> TorusForm:
        """``dbar_star G partial``, mapping type (p, q) to (p + 1, q - 1)."""
        return self.dbar_star(self.green(self.partial(w)))

    # -- products --------------------------------------------------------

    def bracket(self, phi: TorusForm, psi: TorusForm, band: int | None = None) -> TorusForm:
        """Bracket of T^{1,0}-valued forms of degrees ``p`` and ``q``::

            [phi, psi]^k = sum_i phi^i ^ d_i psi^k - (-1)^{pq} psi^i ^ d_i phi^k

        with ``d_i = d/dz_i`` acting on coefficients.  Symmetric for ``p = q = 1``.
        """
        if not (phi.vector and psi.vector):
            raise ShapeError("bracket takes vector-valued forms")
        p, q = phi.q, psi.q
        exact, kout = self._product_band(phi.K, psi.K, band)
        n = self._grid_size(phi.K, psi.K)
        _, s1 = self.symbols(phi.K)
        _, s2 = self.symbols(psi.K)
        d = self.d
        npts = n ** (2 * d)
        g_phi = self.to_grid(phi, n).reshape(d, -1, npts)
        g_psi = self.to_grid(psi, n).reshape(d, -1, npts)
        w_pq = ext.wedge_tensor(d, 0, p, 0, q)
        w_qp = ext.wedge_tensor(d, 0, q, 0, p)
        sign = (-1) ** (p * q)
        out = np.zeros((d, w_pq.shape[0], npts), complex)
        for i in range(d):
            d_psi = self.to_grid(psi._like(psi.coeffs * s2[i]), n).reshape(d, -1, npts)
            d_phi = self.to_grid(phi._like(phi.coeffs * s1[i]), n).reshape(d, -1, npts)
            out += np.einsum("obc,bx,kcx->kox", w_pq, g_phi[i], d_psi)
            out -= sign * np.einsum("obc,bx,kcx->kox", w_qp, g_psi[i], d_phi)
        grid = out.reshape((d, w_pq.shape[0]) + (n,) * (2 * d))
        coeffs = self.from_grid(grid, min(exact, kout))
        return TorusForm(resize_modes(coeffs, kout), 0, p + q, True)

    def contract(self, phi: TorusForm, w: TorusForm, band: int | None = None) -> TorusForm:
        """Contraction ``i_phi w`` of a (0,1) vector form into a scalar (p,q)-form."""
        if not phi.vector or phi.q != 1:
            raise ShapeError("contract takes a T^{1,0}-valued (0,1)-form")
        if w.vector or w.p < 1:
            raise ShapeError("contraction needs a scalar (p,q)-form with p >= 1")
        d = self.d
        tensor = ext.contraction_tensor(d, w.p, w.q)
        if phi.K == 0 and w.K == 0:
            c = np.einsum("obij,ij...,b...->o...", tensor, phi.coeffs, w.coeffs[0])[None]
            return TorusForm(resize_modes(c, band or 0), w.p - 1, w.q + 1, False)
        exact, kout = self._product_band(phi.K, w.K, band)
        n = self._grid_size(phi.K, w.K)
        npts = n ** (2 * d)
        g_phi = self.to_grid(phi, n).reshape(d, d, npts)
        g_w = self.to_grid(w, n).reshape(-1, npts)
        out = np.einsum("obij,ijx,bx->ox", tensor, g_phi, g_w)[None]
        grid = out.reshape((1, tensor.shape[0]) + (n,) * (2 * d))
        coeffs = self.from_grid(grid, min(exact, kout))
        return TorusForm(resize_modes(coeffs, kout), w.p - 1, w.q + 1, False)

    def wedge(self, x: TorusForm, y: TorusForm, band: int | None = None) -> TorusForm:
        """Wedge product of two scalar forms."""
        if x.vector or y.vector:
            raise ShapeError("wedge takes scalar forms")
        d = self.d
        tensor = ext.wedge_tensor(d, x.p, x.q, y.p, y.q)
        exact, kout = self._product_band(x.K, y.K, band)
        n = self._grid_size(x.K, y.K)
        npts = n ** (2 * d)
        gx = self.to_grid(x, n).reshape(-1, npts)
        gy = self.to_grid(y, n).reshape(-1, npts)
        out = np.einsum("oab,ax,bx->ox", tensor, gx, gy)[None]
        coeffs = self.from_grid(out.reshape((1, tensor.shape[0]) + (n,) * (2 * d)), min(exact, kout))
        return TorusForm(resize_modes(coeffs, kout), x.p + y.p, x.q + y.q, False)

    # -- inner products and norms ---------------------------------------

    def inner(self, f: TorusForm, g: TorusForm) -> complex:
        """L^2 inner product (linear in the first slot) via Parseval."""
        f._check(g)
        K = max(f.K, g.K)
        return complex(self.volume * np.vdot(resize_modes(g.coeffs, K), resize_modes(f.coeffs, K)))

    def norm(self, f: TorusForm) -> float:
        return float(np.sqrt(self.volume) * np.linalg.norm(f.coeffs))

    def sample_size(self, K: int) -> int:
        """Grid points per real dimension used for sup norms: 4 per highest mode."""
        return max(4 * K, 1)

    def norms(self, f: TorusForm) -> NormReport:
        n = self.sample_size(f.K)
        d2 = 2 * self.d
        g = self.to_grid(f, n)
        a, b = g.shape[:2]
        pts = g.reshape(a, b, -1)
        absval = np.abs(pts)
        c0 = float(absval.max()) if absval.size else 0.0
        if absval.size:
            mats = np.moveaxis(pts, -1, 0)
            sup_op = float(np.linalg.norm(mats, ord=2, axis=(1, 2)).max())
        else:
            sup_op = 0.0
        sbar, s = self.symbols(f.K)
        deriv = np.zeros((a, b))
        for k in range(self.d):
            for sym in (s[k], sbar[k]):
                dg = self.to_grid(f._like(f.coeffs * sym), n).reshape(a, b, -1)
                deriv += np.abs(dg).max(axis=-1) if dg.size else 0.0
        c1 = float((absval.max(axis=-1) + deriv).max()) if absval.size else 0.0
        return NormReport(c0=c0, sup_op=sup_op, w0=self.norm(f), c1=c1)

    def sup_op_norm(self, phi: TorusForm) -> float:
        return self.norms(phi).sup_op

    # -- harmonic data ---------------------------------------------------

    def harmonic_basis(self, q: int = 1, p: int = 0, vector: bool = True) -> list[TorusForm]:
        """L^2-orthonormal basis of harmonic forms (the constant ones)."""
        a = self.d if vector else 1
        b = ext.size(self.d, p, q)
        out = []
        for i in range(a):
            for j in range(b):
                m = np.zeros((a, b), complex)
                m[i, j] = 1.0 / np.sqrt(self.volume)
                out.append(self.constant(m, q, p, vector, K=0))
        return out

    def volume_form(self) -> TorusForm:
        """``dz_1 ^ ... ^ dz_d`` normalised to unit L^2 norm."""
        return self.constant([[1.0 / np.sqrt(self.volume)]], q=0, p=self.d, vector=False, K=0)

    def beltrami(self, matrix, K: int = 0) -> TorusForm:
        """Constant Beltrami form ``sum phi^i_j d/dz_i (x) dzbar_j``."""
        return self.constant(np.asarray(matrix, complex), q=1, p=0, vector=True, K=K)
