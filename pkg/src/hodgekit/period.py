"""Weight-2 quasi-period blocks on the flat 2-torus, transversality and purity tests.

A Beltrami form ``phi`` deforms the Hodge filtration.  For each adapted basis
form ``eta`` we solve ``rho = (I + T i_phi)^{-1} eta`` by Neumann iteration,
with ``T = dbar_star G partial``, and read off block rows from harmonic parts::

    Phi01 = <H(i_phi rho_0), eta_1>     Phi02 = <1/2 H(i_phi i_phi rho_0), eta_2>
    Phi12 = <H(i_phi rho_1), eta_2>
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .backends import exterior as ext
from .backends.torus import TorusBackend, TorusForm
from .core import DEFAULT_TOL, BlockUpperUnipotent, Tolerances
from .exceptions import ConvergenceError, GuardError, ShapeError, ValidationError


@dataclass(frozen=True, eq=False)
class HodgeFrame:
    """Orthonormal harmonic bases of H^{2,0}, H^{1,1}, H^{0,2} on a 2-torus.

    ``pairing`` is the matrix of ``Q(a, b) = integral of a ^ b`` over the
    concatenated basis ``(eta0 | eta1 | eta2)``, normalised so the top form
    ``dz1 ^ dz2 ^ dzb1 ^ dzb2`` integrates to the volume.  ``conj`` is the
    matrix of complex conjugation in the same basis.
    """

    backend: TorusBackend
    eta0: tuple
    eta1: tuple
    eta2: tuple
    pairing: np.ndarray
    conj: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int]:
        return len(self.eta0), len(self.eta1), len(self.eta2)

    def all_forms(self) -> list:
        return list(self.eta0) + list(self.eta1) + list(self.eta2)

    def gram_defect(self) -> float:
        b = self.backend
        out = 0.0
        for group in (self.eta0, self.eta1, self.eta2):
            g = np.array([[b.inner(x, y) for y in group] for x in group])
            if g.size:
                out = max(out, float(np.abs(g - np.eye(len(group))).max()))
        return out

    def harmonic_defect(self) -> float:
        b = self.backend
        return max((b.norm(b.laplacian(f)) for f in self.all_forms()), default=0.0)


def hodge_frame(backend: TorusBackend) -> HodgeFrame:
    """Constant-form frame of a flat 2-torus: ``h20 = h02 = 1``, ``h11 = 4``."""
    if not isinstance(backend, TorusBackend) or backend.d != 2:
        raise ShapeError("the weight-2 frame is implemented on the 2-torus backend")
    d = 2

    def unit(p, q):
        n = ext.size(d, p, q)
        out = []
        for j in range(n):
            m = np.zeros((1, n), complex)
            m[0, j] = 1.0 / np.sqrt(backend.volume)
            out.append(backend.constant(m, q=q, p=p, vector=False, K=0))
        return tuple(out)

    eta0, eta1, eta2 = unit(2, 0), unit(1, 1), unit(0, 2)
    types = [(2, 0)] * len(eta0) + [(1, 1)] * len(eta1) + [(0, 2)] * len(eta2)
    forms = list(eta0) + list(eta1) + list(eta2)
    n = len(forms)
    pairing = np.zeros((n, n), complex)
    for a, (fa, ta) in enumerate(zip(forms, types)):
        for c, (fc, tc) in enumerate(zip(forms, types)):
            if ta[0] + tc[0] != 2 or ta[1] + tc[1] != 2:
                continue
            w = ext.wedge_tensor(d, ta[0], ta[1], tc[0], tc[1])
            top = np.einsum("oab,a,b->o", w, fa.zero_mode()[0], fc.zero_mode()[0])
            pairing[a, c] = backend.volume * top[0]
    conj = np.zeros((n, n), complex)
    offsets = {(2, 0): 0, (1, 1): len(eta0), (0, 2): len(eta0) + len(eta1)}
    for (p, q), off in offsets.items():
        perm = ext.conjugation(d, p, q)
        dst = offsets[(q, p)]
        conj[dst:dst + perm.shape[0], off:off + perm.shape[1]] = perm
    return HodgeFrame(backend, eta0, eta1, eta2, pairing, conj)


def t_operator(backend, w: TorusForm) -> TorusForm:
    """``T = dbar_star G partial``."""
    return backend.t_operator(w)


def _neumann(backend, phi: TorusForm, eta: TorusForm, band: int, tol: float, max_iter: int) -> TorusForm:
    rho = eta
    for _ in range(max_iter):
        nxt = eta - backend.t_operator(backend.contract(phi, rho, band=band))
        step = backend.norm(nxt - rho)
        rho = nxt
        if step < tol:
            return rho
        if not np.isfinite(step):
            break
    raise ConvergenceError(f"Neumann iteration for (I + T i_phi)^-1 did not converge in {max_iter} steps")


def quasi_period(phi: TorusForm, frame: HodgeFrame, tol: float = 1e-12, max_iter: int = 200,
                 band: int | None = None) -> BlockUpperUnipotent:
    """Blocks ``(Phi01, Phi02, Phi12)`` at the Beltrami form ``phi``.

    ``band`` is the Galerkin truncation used inside the iteration (default:
    the larger of the backend cutoff and the band of ``phi``).
    """
    b = frame.backend
    if not phi.vector or phi.q != 1 or phi.d != 2:
        raise ShapeError("quasi_period takes a (0,1) vector form on the 2-torus")
    s = b.sup_op_norm(phi)
    if s >= 1:
        raise GuardError(f"sup operator norm of phi is {s:.6g}; need < 1")
    band = max(b.K, phi.K) if band is None else band
    h20, h11, h02 = frame.dims
    b01 = np.zeros((h20, h11), complex)
    b02 = np.zeros((h20, h02), complex)
    b12 = np.zeros((h11, h02), complex)
    if not np.any(phi.coeffs):
        return BlockUpperUnipotent(b01, b02, b12)
    for i, eta in enumerate(frame.eta0):
        rho = _neumann(b, phi, eta, band, tol, max_iter)
        one = b.contract(phi, rho, band=band)
        two = b.contract(phi, one, band=band)
        h1, h2 = b.harmonic_project(one), b.harmonic_project(two)
        b01[i] = [b.inner(h1, e) for e in frame.eta1]
        b02[i] = [0.5 * b.inner(h2, e) for e in frame.eta2]
    for i, eta in enumerate(frame.eta1):
        rho = _neumann(b, phi, eta, band, tol, max_iter)
        h1 = b.harmonic_project(b.contract(phi, rho, band=band))
        b12[i] = [b.inner(h1, e) for e in frame.eta2]
    return BlockUpperUnipotent(b01, b02, b12)


def block_norms(blocks: BlockUpperUnipotent) -> dict:
    """Largest entry modulus of each block."""
    m01, m02, m12 = blocks.max_abs()
    return {"b01": m01, "b02": m02, "b12": m12}


def block_bounds_hold(blocks: BlockUpperUnipotent, s: float, slack: float = 1e-12) -> bool:
    """``|Phi01|, |Phi12| <= s/(1-s)`` and ``|Phi02| <= s^2/(1-s)`` at ``s = ||phi|| < 1``."""
    m01, m02, m12 = blocks.max_abs()
    lin, quad = s / (1 - s), s * s / (1 - s)
    return m01 <= lin + slack and m12 <= lin + slack and m02 <= quad + slack


def purity_matrix(blocks: BlockUpperUnipotent) -> np.ndarray:
    h20, h11, h02 = blocks.dims
    n = h20 + h11 + h02
    m = np.eye(n, dtype=complex)
    m[:h20, h20:h20 + h11] = blocks.b01
    m[:h20, h20 + h11:] = blocks.b02
    m[h20:h20 + h11, h20 + h11:] = blocks.b12
    m[h20 + h11:, :h20] = blocks.b02.conj()
    m[h20 + h11:, h20:h20 + h11] = blocks.b01.conj()
    return m


def purity_determinant(blocks: BlockUpperUnipotent) -> complex:
    """Determinant of ``[[I, Phi01, Phi02], [0, I, Phi12], [conj Phi02, conj Phi01, I]]``."""
    m = purity_matrix(blocks)
    return complex(np.linalg.det(m)) if m.size else 1.0 + 0j


def transversality_check(curve, t, h: float = 1e-4, radius: float | None = None) -> float:
    """Central-difference residual ``d Phi02 - (d Phi01) Phi12`` at ``t``.

    ``curve`` maps a parameter vector to :class:`BlockUpperUnipotent`.  The
    largest entry modulus over all coordinate directions is returned.
    """
    t = np.atleast_1d(np.asarray(t, complex))
    if radius is not None and np.linalg.norm(t) + h > radius:
        raise ValidationError(f"stencil of width {h} at |t| = {np.linalg.norm(t):.4g} leaves the domain")
    here = curve(t)
    worst = 0.0
    for k in range(t.shape[0]):
        e = np.zeros_like(t)
        e[k] = h
        plus, minus = curve(t + e), curve(t - e)
        d01 = (plus.b01 - minus.b01) / (2 * h)
        d02 = (plus.b02 - minus.b02) / (2 * h)
        res = d02 - d01 @ here.b12
        if res.size:
            worst = max(worst, float(np.abs(res).max()))
    return worst


def kuranishi_block_curve(phi_series, frame: HodgeFrame, **kwargs):
    """``t -> quasi_period(phi(t), frame)`` for a Beltrami series on the 2-torus."""
    def curve(t):
        return quasi_period(phi_series(t), frame, **kwargs)
    return curve


# -- block models for radius probes -------------------------------------------


class TorusBlockModel:
    """Random Beltrami directions of unit sup operator norm on a torus frame."""

    def __init__(self, frame: HodgeFrame, K: int = 1, decay: float = 1.0):
        self.frame = frame
        self.K = K
        self.decay = decay

    @property
    def dims(self):
        return self.frame.dims

    def direction(self, rng: np.random.Generator) -> TorusForm:
        b = self.frame.backend
        f = b.random_form(rng, 1, K=self.K, decay=self.decay)
        return f * (1.0 / b.sup_op_norm(f))

    def blocks(self, direction: TorusForm, r: float) -> BlockUpperUnipotent:
        return quasi_period(direction * r, self.frame)


class ScalarRayModel:
    """Scalar blocks ``(a r, b r^2, c r)`` along random real rays.

    ``a, c`` are drawn from ``[-scale, scale]``; ``b`` is ``a c / 2 + noise``
    to mimic the quadratic leading term of genuine period blocks.
    """

    dims = (1, 1, 1)

    def __init__(self, scale: float = 2.0, noise: float = 0.5):
        self.scale = scale
        self.noise = noise

    def direction(self, rng: np.random.Generator) -> tuple[float, float, float]:
        a, c = rng.uniform(-self.scale, self.scale, size=2)
        b = a * c / 2 + rng.uniform(-self.noise, self.noise)
        return float(a), float(b), float(c)

    def blocks(self, direction, r: float) -> BlockUpperUnipotent:
        a, b, c = direction
        return BlockUpperUnipotent(a * r, b * r * r, c * r)


class PolynomialBlockModel:
    """Blocks whose entries are polynomials in ``r`` (coefficients low degree first).

    JSON layout: ``{"h20": 1, "h11": 1, "b01": [[[[re, im], ...]]], "b02": ..., "b12": ...}``
    where every matrix entry is a list of ``[re, im]`` coefficients.
    """

    def __init__(self, b01, b02, b12):
        self.polys = [np.asarray(x, complex) for x in (b01, b02, b12)]
        if any(p.ndim != 3 for p in self.polys):
            raise ShapeError("each block needs shape (rows, cols, n_coefficients)")
        h20, h11 = self.polys[0].shape[:2]
        if self.polys[1].shape[:2] != (h20, h20) or self.polys[2].shape[:2] != (h11, h20):
            raise ShapeError("inconsistent polynomial block shapes")
        self.dims = (h20, h11, h20)

    @classmethod
    def from_dict(cls, doc: dict) -> "PolynomialBlockModel":
        h20, h11 = int(doc["h20"]), int(doc["h11"])

        def decode(x, shape):
            arr = np.asarray(x, dtype=float)
            if arr.size == 0:
                return np.zeros(shape + (1,), complex)
            if arr.ndim != 4 or arr.shape[:2] != shape or arr.shape[-1] != 2:
                raise ValidationError(f"block polynomial has shape {arr.shape}, expected {shape} + (deg, 2)")
            return arr[..., 0] + 1j * arr[..., 1]

        return cls(decode(doc["b01"], (h20, h11)), decode(doc["b02"], (h20, h20)),
                   decode(doc["b12"], (h11, h20)))

    @classmethod
    def from_json(cls, text: str) -> "PolynomialBlockModel":
        return cls.from_dict(json.loads(text))

    def direction(self, rng) -> None:
        return None

    def at(self, r) -> BlockUpperUnipotent:
        out = []
        for p in self.polys:
            powers = np.asarray(r, complex) ** np.arange(p.shape[-1])
            out.append(p @ powers if p.size else np.zeros(p.shape[:2], complex))
        return BlockUpperUnipotent(*out)

    def blocks(self, direction, r) -> BlockUpperUnipotent:
        return self.at(r)

    def curve(self):
        """Callable ``t -> blocks`` for transversality checks (first coordinate of ``t``)."""
        return lambda t: self.at(np.atleast_1d(t)[0])


def _segment_hits(v0: complex, v1: complex, margin: float) -> bool:
    """Whether the segment ``[v0, v1]`` in C passes within ``margin`` of 0."""
    d = v1 - v0
    if d == 0:
        return abs(v0) < margin
    s = min(1.0, max(0.0, -(np.conj(d) * v0).real / abs(d) ** 2))
    return abs(v0 + s * d) < margin


def ray_threshold(value, fails, grid: int = 64, cap: float = 1.0, tol: float = 1e-6) -> float:
    """Largest ``r <= cap`` before ``fails(r0, v0, r1, v1)`` first triggers on a segment.

    The ray ``[0, cap]`` is scanned on ``grid`` segments and the first failing
    segment is refined by bisection.  Returns ``cap`` if nothing fails.
    """
    rs = np.linspace(0.0, cap, grid + 1)
    r0, v0 = 0.0, value(0.0)
    for r1 in rs[1:]:
        v1 = value(r1)
        if fails(r0, v0, r1, v1):
            lo, vlo, hi, vhi = r0, v0, r1, v1
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                vm = value(mid)
                if fails(lo, vlo, mid, vm):
                    hi, vhi = mid, vm
                elif fails(mid, vm, hi, vhi):
                    lo, vlo = mid, vm
                else:
                    return mid
            return lo
        r0, v0 = r1, v1
    return cap


def stability_radius(model, trials: int, seed: int = 0, grid: int = 64, cap: float = 1.0,
                     tol: Tolerances = DEFAULT_TOL, bisect_tol: float = 1e-6) -> dict:
    """Empirical largest ``r`` keeping ``|det purity| >= pd_margin`` along sampled rays.

    A ray fails on ``[r0, r1]`` when the linear interpolation of the
    determinant between the two samples passes within ``pd_margin`` of zero,
    or when blocks cannot be computed there.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    per_ray = []
    for _ in range(trials):
        direction = model.direction(rng)

        def value(r, direction=direction):
            try:
                return purity_determinant(model.blocks(direction, r))
            except (ConvergenceError, GuardError):
                return None

        def fails(r0, v0, r1, v1):
            if v0 is None or v1 is None:
                return True
            return _segment_hits(v0, v1, tol.pd_margin)

        per_ray.append(ray_threshold(value, fails, grid, cap, bisect_tol))
    return {"radius": min(per_ray), "per_ray": per_ray, "trials": trials, "seed": seed, "cap": cap}
