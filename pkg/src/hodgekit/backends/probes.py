"""Backend-agnostic checks: contract validation, harmonic norm ratio, operator-norm probe."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ValidationError
from .dgla import DGLABackend, DGLAData
from .torus import TorusBackend


def make_backend(config: dict):
    """Build a backend from a JSON-style config.

    ``{"backend": "torus", "d": 2, "K": 2, "tau": [0, 1], "volume": 1}`` or
    ``{"backend": "dgla", "dimensions": [...], "differentials": [...], ...}``.
    """
    kind = config.get("backend")
    if kind == "torus":
        tau = config.get("tau", [0.0, 1.0])
        if isinstance(tau, (list, tuple)):
            if len(tau) != 2:
                raise ValidationError("tau must be a number or an [re, im] pair")
            tau = complex(tau[0], tau[1])
        try:
            return TorusBackend(d=config.get("d", 2), K=config.get("K", 2), tau=tau,
                                volume=float(config.get("volume", 1.0)),
                                max_band=config.get("max_band"))
        except TypeError as exc:
            raise ValidationError(f"bad torus config: {exc}") from None
    if kind == "dgla":
        return DGLABackend(DGLAData.from_dict(config))
    raise ValidationError(f"unknown backend kind {kind!r}; expected 'torus' or 'dgla'")


def harmonic_norm_ratio(backend) -> float:
    """Max over a harmonic basis of (0,1) vector forms of ``C^1 grid norm / W^0 norm``."""
    basis = backend.harmonic_basis(1)
    if not basis:
        raise ValidationError("backend has no harmonic (0,1) vector forms")
    return max(backend.norms(h).c1 / backend.norm(h) for h in basis)


@dataclass
class OperatorProbe:
    constant: float
    samples: int
    seed: int
    ratios: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"constant": self.constant, "samples": self.samples, "seed": self.seed}


def _quadratic_operator(backend, phi, psi):
    return 0.5 * backend.dbar_star(backend.green(backend.bracket(phi, psi)))


def _dgla_bilinear_norm(backend: DGLABackend, rng: np.random.Generator, starts: int = 8,
                        iters: int = 200) -> float:
    """Local maximisation of ``|Q(u, v)|`` over Gram-unit ``u, v`` by alternating SVD."""
    n1, n2 = backend.dims[1], backend.dims[2]
    if n1 == 0 or n2 == 0:
        return 0.0
    g1 = backend.data.grams[1]
    lh = np.linalg.cholesky(g1).conj().T
    lh_inv = np.linalg.inv(lh)
    m = 0.5 * backend._adj[1] @ backend._green[2]
    # whitened tensor: T[k, i, j] with Q(u, v) = T(u, v) in orthonormal coordinates
    t = np.einsum("ak,kij,ib,jc->abc", lh @ m, backend.data.bracket, lh_inv, lh_inv)
    best = 0.0
    for _ in range(starts):
        u = rng.standard_normal(n1) + 1j * rng.standard_normal(n1)
        u /= np.linalg.norm(u)
        val = 0.0
        for _ in range(iters):
            _, s, vh = np.linalg.svd(np.einsum("abc,b->ac", t, u))
            v = vh[0].conj()
            _, s, vh = np.linalg.svd(np.einsum("abc,c->ab", t, v))
            u = vh[0].conj()
            if s[0] - val <= 1e-15 * max(1.0, s[0]):
                val = s[0]
                break
            val = s[0]
        best = max(best, float(val))
    return best


def operator_norm_probe(backend, samples: int = 100, seed: int = 0, refine: bool = True,
                        K: int | None = None) -> OperatorProbe:
    """Empirical constant of ``(phi, psi) -> 1/2 dbar_star G [phi, psi]``.

    Returns the largest observed ``||Q(phi, psi)|| / (||phi|| ||psi||)`` over
    ``samples`` seeded random pairs, in the backend's W^0 norm.  On the DGLA
    backend the estimate is sharpened by alternating singular-vector ascent so
    it bounds the true bilinear norm up to local-maximum effects.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    kwargs = {} if K is None else {"K": K}
    ratios = []
    for _ in range(samples):
        phi = backend.random_form(rng, 1, **kwargs)
        psi = backend.random_form(rng, 1, **kwargs)
        den = backend.norm(phi) * backend.norm(psi)
        if den == 0:
            continue
        ratios.append(backend.norm(_quadratic_operator(backend, phi, psi)) / den)
    const = max(ratios, default=0.0)
    if refine and isinstance(backend, DGLABackend):
        const = max(const, _dgla_bilinear_norm(backend, rng))
    return OperatorProbe(constant=float(const), samples=samples, seed=seed, ratios=ratios)


def operator_norm_family(backends, samples: int = 100, seed: int = 0) -> list[float]:
    """Per-member constants along a family of backends, each probed with the same seed."""
    return [operator_norm_probe(b, samples, seed).constant for b in backends]


def validate(backend, seed: int = 0, trials: int = 5, tol: float = 1e-10) -> list[str]:
    """Check the backend contract on random forms; returns human-readable violations."""
    out = []
    if isinstance(backend, DGLABackend):
        out.extend(backend.data.violations(tol))
        degrees = range(4)
        top = 3
    else:
        degrees = range(backend.d + 1)
        top = backend.d
    rng = np.random.default_rng(seed)
    for q in degrees:
        for _ in range(trials):
            f = backend.random_form(rng, q)
            scale = max(1.0, backend.norm(f))
            if q < top:
                dd = backend.dbar(f)
                if q + 2 <= top and backend.norm(backend.dbar(dd)) > tol * max(1.0, backend.norm(dd)):
                    out.append(f"dbar^2 != 0 in degree {q}")
                g = backend.random_form(rng, q + 1)
                lhs = backend.inner(dd, g)
                rhs = backend.inner(f, backend.dbar_star(g))
                if abs(lhs - rhs) > tol * max(1.0, abs(lhs), backend.norm(dd) * backend.norm(g)):
                    out.append(f"dbar_star is not adjoint to dbar in degree {q}")
            rest = f - backend.harmonic_project(f) - backend.laplacian(backend.green(f))
            if backend.norm(rest) > tol * scale:
                out.append(f"f != H f + Delta G f in degree {q}")
    if not isinstance(backend, DGLABackend) or backend.dims[1]:
        for _ in range(trials):
            a, b = backend.random_form(rng, 1), backend.random_form(rng, 1)
            diff = backend.bracket(a, b) - backend.bracket(b, a)
            if backend.norm(diff) > tol * max(1.0, backend.norm(a) * backend.norm(b)):
                out.append("bracket is not symmetric")
                break
    return sorted(set(out))
