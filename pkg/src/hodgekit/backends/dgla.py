"""Finite-dimensional graded complex ``V^0 -> V^1 -> V^2 -> V^3`` with a bracket.

This is the algebraic skeleton of the Dolbeault complex of vector-valued
forms: differentials ``D_q``, a symmetric bracket ``B: V^1 x V^1 -> V^2`` and
a Hermitian inner product per degree.  Unlike the flat torus it can carry
brackets with a nonzero harmonic part, i.e. genuine obstructions.

There is no volume form here.  ``contract`` uses the minimal model
``Omega_0 = 1``, ``phi -| Omega_0 = phi`` (an isometric copy of ``V^1``) and
all deeper contractions zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ShapeError, ValidationError
from .torus import NormReport


def _decode(x, shape) -> np.ndarray:
    """Nested lists of ``[re, im]`` pairs to a complex array of ``shape``."""
    arr = np.asarray(x, dtype=float)
    if arr.size != 2 * int(np.prod(shape)):
        raise ValidationError(f"expected {shape} complex entries as [re, im] pairs, got array of shape {arr.shape}")
    arr = arr.reshape(tuple(shape) + (2,))
    return arr[..., 0] + 1j * arr[..., 1]


def _pairs(a: np.ndarray):
    a = np.asarray(a, complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


@dataclass(frozen=True, eq=False)
class Cochain:
    """An element of ``V^degree``."""

    degree: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, complex).reshape(-1))

    def _check(self, other):
        if self.degree != other.degree or self.values.shape != other.values.shape:
            raise ShapeError("cochains of different degree cannot be combined")

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        self._check(other)
        return Cochain(self.degree, self.values + other.values)

    __radd__ = __add__

    def __neg__(self):
        return Cochain(self.degree, -self.values)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return Cochain(self.degree, self.values * complex(scalar))

    __rmul__ = __mul__

    # uniform interface with TorusForm
    @property
    def q(self) -> int:
        return self.degree

    vector = True


@dataclass(frozen=True, eq=False)
class VolumeElement:
    """Element of the toy volume tower: depth 0 is ``Omega_0 = 1``, depth 1 is a copy of ``V^1``."""

    depth: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, complex).reshape(-1))

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        if self.depth != other.depth:
            raise ShapeError("volume elements of different depth cannot be added")
        return VolumeElement(self.depth, self.values + other.values)

    __radd__ = __add__

    def __neg__(self):
        return VolumeElement(self.depth, -self.values)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return VolumeElement(self.depth, self.values * complex(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DGLAData:
    """Raw data of a graded complex with bracket.

    Parameters
    ----------
    differentials : list of 3 arrays
        ``D_q`` of shape ``(n_{q+1}, n_q)`` for ``q = 0, 1, 2``.
    bracket : array, shape ``(n2, n1, n1)``
        Symmetric in the last two axes.
    grams : list of 4 arrays, optional
        Hermitian positive-definite Gram matrices; identity by default.
    """

    differentials: list
    bracket: np.ndarray
    grams: list = field(default=None)
    name: str = "dgla"

    def __post_init__(self):
        ds = [np.asarray(d, complex) for d in self.differentials]
        if len(ds) != 3 or any(d.ndim != 2 for d in ds):
            raise ValidationError("need three differential matrices D_0, D_1, D_2")
        dims = [ds[0].shape[1]] + [d.shape[0] for d in ds]
        for q in range(3):
            if ds[q].shape != (dims[q + 1], dims[q]):
                raise ValidationError(f"D_{q} has shape {ds[q].shape}, expected {(dims[q + 1], dims[q])}")
        grams = self.grams
        if grams is None:
            grams = [np.eye(n) for n in dims]
        grams = [np.asarray(g, complex) for g in grams]
        if len(grams) != 4 or any(g.shape != (n, n) for g, n in zip(grams, dims)):
            raise ValidationError("need four square Gram matrices matching the degree dimensions")
        br = np.asarray(self.bracket, complex)
        if br.shape != (dims[2], dims[1], dims[1]):
            raise ValidationError(f"bracket tensor has shape {br.shape}, expected {(dims[2], dims[1], dims[1])}")
        object.__setattr__(self, "differentials", ds)
        object.__setattr__(self, "grams", grams)
        object.__setattr__(self, "bracket", br)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.differentials[0].shape[1],) + tuple(d.shape[0] for d in self.differentials)

    def violations(self, tol: float = 1e-10) -> list[str]:
        out = []
        ds = self.differentials
        for q in range(2):
            prod = ds[q + 1] @ ds[q]
            if prod.size and np.abs(prod).max() > tol:
                out.append(f"D_{q + 1} D_{q} != 0 (max entry {np.abs(prod).max():.3e})")
        asym = self.bracket - self.bracket.transpose(0, 2, 1)
        if asym.size and np.abs(asym).max() > tol:
            out.append("bracket tensor is not symmetric")
        for q, g in enumerate(self.grams):
            if g.size == 0:
                continue
            if np.abs(g - g.conj().T).max() > tol:
                out.append(f"Gram matrix G_{q} is not Hermitian")
            elif np.linalg.eigvalsh((g + g.conj().T) / 2).min() <= 0:
                out.append(f"Gram matrix G_{q} is not positive definite")
        return out

    def validate(self, tol: float = 1e-10) -> "DGLAData":
        bad = self.violations(tol)
        if bad:
            raise ValidationError("; ".join(bad))
        return self

    @classmethod
    def from_dict(cls, doc: dict) -> "DGLAData":
        try:
            n = [int(k) for k in doc["dimensions"]]
            raw_d, raw_b = doc["differentials"], doc["bracket"]
        except KeyError as exc:
            raise ValidationError(f"DGLA document lacks field {exc}") from None
        except (TypeError, ValueError):
            raise ValidationError("dimensions must be four non-negative integers") from None
        if len(n) != 4 or min(n) < 0:
            raise ValidationError("dimensions must be four non-negative integers")
        if len(raw_d) != 3:
            raise ValidationError("need three differential matrices D_0, D_1, D_2")
        ds = [_decode(raw_d[q], (n[q + 1], n[q])) for q in range(3)]
        br = _decode(raw_b, (n[2], n[1], n[1]))
        grams = None
        if doc.get("grams") is not None:
            grams = [_decode(g, (k, k)) for g, k in zip(doc["grams"], n)]
        return cls(ds, br, grams, name=doc.get("name", "dgla"))

    @classmethod
    def from_json(cls, text: str) -> "DGLAData":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dimensions": list(self.dims),
            "differentials": [_pairs(d) for d in self.differentials],
            "bracket": _pairs(self.bracket),
            "grams": [_pairs(g) for g in self.grams],
        }


class DGLABackend:
    """Hodge theory of a :class:`DGLAData` instance.

    The adjoint is ``D_q^* = G_q^{-1} D_q^H G_{q+1}``; harmonic projection and
    Green's operator come from an eigendecomposition of the Laplacian in
    Gram-whitened coordinates.
    """

    def __init__(self, data: DGLAData, tol: float = 1e-10):
        self.data = data.validate(tol)
        self.dims = data.dims
        ds, gs = data.differentials, data.grams
        self._chol = [np.linalg.cholesky(g) if g.size else g for g in gs]  # G = L L^H
        self._adj = [np.linalg.solve(gs[q], ds[q].conj().T @ gs[q + 1]) if gs[q].size
                     else np.zeros((0, self.dims[q + 1])) for q in range(3)]
        self._proj, self._green, self._harm = [], [], []
        for q in range(4):
            lap = self._laplacian_matrix(q)
            n = self.dims[q]
            if n == 0:
                self._proj.append(np.zeros((0, 0)))
                self._green.append(np.zeros((0, 0)))
                self._harm.append(np.zeros((0, 0)))
                continue
            L = self._chol[q]
            # whitened coords y = L^H x carry the standard inner product
            Lh = L.conj().T
            white = Lh @ lap @ np.linalg.inv(Lh)
            white = (white + white.conj().T) / 2
            lam, U = np.linalg.eigh(white)
            scale = max(1.0, float(np.abs(lam).max()))
            harm = lam <= tol * scale
            inv = np.where(harm, 0.0, 1.0 / np.where(harm, 1.0, lam))
            Lh_inv = np.linalg.inv(Lh)
            self._proj.append(Lh_inv @ (U[:, harm] @ U[:, harm].conj().T) @ Lh)
            self._green.append(Lh_inv @ (U * inv) @ U.conj().T @ Lh)
            self._harm.append(Lh_inv @ U[:, harm])

    def config(self) -> dict:
        return {"backend": "dgla", **self.data.to_dict()}

    def _laplacian_matrix(self, q: int) -> np.ndarray:
        n = self.dims[q]
        lap = np.zeros((n, n), complex)
        if q < 3:
            lap += self._adj[q] @ self.data.differentials[q]
        if q > 0:
            lap += self.data.differentials[q - 1] @ self._adj[q - 1]
        return lap

    # -- construction ----------------------------------------------------

    def zeros(self, q: int) -> Cochain:
        return Cochain(q, np.zeros(self.dims[q]))

    def cochain(self, q: int, values) -> Cochain:
        values = np.asarray(values, complex).reshape(-1)
        if values.shape[0] != self.dims[q]:
            raise ShapeError(f"V^{q} has dimension {self.dims[q]}, got {values.shape[0]} values")
        return Cochain(q, values)

    def random_form(self, rng: np.random.Generator, q: int = 1, **_) -> Cochain:
        n = self.dims[q]
        return Cochain(q, rng.standard_normal(n) + 1j * rng.standard_normal(n))

    def harmonic_basis(self, q: int = 1) -> list[Cochain]:
        """Gram-orthonormal basis of ``ker Delta`` in degree ``q``."""
        return [Cochain(q, col) for col in self._harm[q].T]

    # -- operators -------------------------------------------------------

    def _deg(self, f: Cochain, lo: int = 0, hi: int = 3) -> int:
        if not isinstance(f, Cochain):
            raise ShapeError("expected a Cochain")
        if not lo <= f.degree <= hi:
            raise ShapeError(f"operator undefined on degree {f.degree}")
        return f.degree

    def dbar(self, f: Cochain) -> Cochain:
        q = self._deg(f, 0, 2)
        return Cochain(q + 1, self.data.differentials[q] @ f.values)

    def dbar_star(self, f: Cochain) -> Cochain:
        q = self._deg(f, 1, 3)
        return Cochain(q - 1, self._adj[q - 1] @ f.values)

    def laplacian(self, f: Cochain) -> Cochain:
        q = self._deg(f)
        return Cochain(q, self._laplacian_matrix(q) @ f.values)

    def green(self, f: Cochain) -> Cochain:
        q = self._deg(f)
        return Cochain(q, self._green[q] @ f.values)

    def harmonic_project(self, f: Cochain) -> Cochain:
        q = self._deg(f)
        return Cochain(q, self._proj[q] @ f.values)

    def bracket(self, phi: Cochain, psi: Cochain, band=None) -> Cochain:
        if phi.degree != 1 or psi.degree != 1:
            raise ShapeError("the stored bracket is defined on V^1 x V^1 only")
        # both outer products summed: swapping the arguments swaps two addends, so symmetry is exact
        sym = 0.5 * (np.outer(phi.values, psi.values) + np.outer(psi.values, phi.values))
        return Cochain(2, np.einsum("kij,ij->k", self.data.bracket, sym))

    def volume_form(self) -> VolumeElement:
        return VolumeElement(0, [1.0])

    def contract(self, phi: Cochain, w: VolumeElement, band=None) -> VolumeElement:
        if phi.degree != 1:
            raise ShapeError("contract takes an element of V^1")
        if not isinstance(w, VolumeElement):
            raise ShapeError("contraction target must be a VolumeElement")
        if w.depth == 0:
            return VolumeElement(1, phi.values * w.values[0])
        return VolumeElement(w.depth + 1, np.zeros(0))

    # -- inner products and norms ---------------------------------------

    def _gram_of(self, f) -> np.ndarray:
        if isinstance(f, VolumeElement):
            if f.depth == 0:
                return np.eye(1)
            if f.depth == 1:
                return self.data.grams[1]
            return np.zeros((0, 0))
        return self.data.grams[f.degree]

    def inner(self, f, g) -> complex:
        G = self._gram_of(f)
        return complex(g.values.conj() @ G @ f.values)

    def norm(self, f) -> float:
        return float(np.sqrt(max(self.inner(f, f).real, 0.0)))

    def norms(self, f) -> NormReport:
        n = self.norm(f)
        return NormReport(c0=n, sup_op=n, w0=n, c1=n)

    def sup_op_norm(self, f) -> float:
        return self.norm(f)
