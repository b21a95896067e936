"""Transport of a Kahler class along period blocks, and the metric update ``(I - S)^{-1}``.

Along a family of period points the class ``sigma = alpha0 eta0 + [omega0] +
conj(alpha0) eta2`` stays of type (1,1) iff

    F(alpha0) = conj(alpha0) - alpha1 Phi12 - alpha0 A = 0,   A = Phi02 - Phi01 Phi12.

``F`` is real-linear in ``alpha0``.  Writing ``alpha0 = x + i y`` turns it into
the real system ``[x y] J = [Re s, Im s]`` with ``s = alpha1 Phi12`` and::

    J = [[I - Re A, -Im A],
         [  Im A,  -I - Re A]]

which is invertible whenever ``||A||_2 < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BlockUpperUnipotent
from .exceptions import GuardError, ShapeError, ValidationError

GUARD_SLOWDOWN = 0.95


@dataclass(frozen=True, eq=False)
class KahlerSeed:
    """Coordinates ``alpha1`` of ``[omega0]`` in the (1,1) basis.

    ``conj`` is the matrix of complex conjugation on the (1,1) basis; the
    class is real when ``alpha1 = conj @ conj(alpha1)``.
    """

    alpha1: np.ndarray
    conj: np.ndarray | None = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha1, complex))
        if a.ndim != 1:
            raise ShapeError("alpha1 must be a vector")
        object.__setattr__(self, "alpha1", a)
        c = np.eye(a.shape[0]) if self.conj is None else np.asarray(self.conj, complex)
        if c.shape != (a.shape[0], a.shape[0]):
            raise ShapeError("conjugation matrix does not match alpha1")
        object.__setattr__(self, "conj", c)

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.alpha1 - self.conj @ self.alpha1.conj()).max(initial=0.0) <= tol)

    @classmethod
    def from_metric(cls, g, frame) -> "KahlerSeed":
        """``omega0 = i sum g_{i jbar} dz_i ^ dzb_j`` in the frame's (1,1) basis."""
        from .backends import exterior as ext

        g = np.asarray(g, complex)
        d = frame.backend.d
        if g.shape != (d, d):
            raise ShapeError(f"metric must be {d}x{d}")
        if np.abs(g - g.conj().T).max() > 1e-12:
            raise ValidationError("metric matrix must be Hermitian")
        idx = ext.index(d, 1, 1)
        alpha = np.zeros(len(idx), complex)
        for i in range(d):
            for j in range(d):
                alpha[idx[(i, d + j)]] = 1j * g[i, j] * np.sqrt(frame.backend.volume)
        h20 = len(frame.eta0)
        c = frame.conj[h20:h20 + len(idx), h20:h20 + len(idx)]
        return cls(alpha, c)


def _s_vector(blocks: BlockUpperUnipotent, seed: KahlerSeed) -> np.ndarray:
    if seed.alpha1.shape[0] != blocks.b12.shape[0]:
        raise ShapeError(f"seed has {seed.alpha1.shape[0]} coordinates, blocks expect {blocks.b12.shape[0]}")
    return seed.alpha1 @ blocks.b12


def residual_F(alpha0, blocks: BlockUpperUnipotent, seed: KahlerSeed) -> np.ndarray:
    """``conj(alpha0) - alpha1 Phi12 - alpha0 (Phi02 - Phi01 Phi12)``."""
    a = np.atleast_1d(np.asarray(alpha0, complex))
    if a.shape != (blocks.dims[0],):
        raise ShapeError(f"alpha0 must have length {blocks.dims[0]}")
    return a.conj() - _s_vector(blocks, seed) - a @ blocks.a_matrix


def real_jacobian(A: np.ndarray) -> np.ndarray:
    """Matrix ``J`` of the realified system in unknowns ``(Re alpha0, Im alpha0)``."""
    n = A.shape[0]
    eye = np.eye(n)
    return np.block([[eye - A.real, -A.imag], [A.imag, -eye - A.real]])


def complex_jacobian(A: np.ndarray) -> np.ndarray:
    """``[[I, -A], [-conj A, I]]`` acting on ``(alpha0, conj alpha0)``."""
    n = A.shape[0]
    eye = np.eye(n)
    return np.block([[eye, -A], [-A.conj(), eye]])


@dataclass
class TransportState:
    alpha0: np.ndarray
    blocks: BlockUpperUnipotent
    A: np.ndarray
    J: np.ndarray
    residual: float

    def consistent(self, tol: float = 1e-13) -> bool:
        return bool(np.abs(self.A - self.blocks.a_matrix).max(initial=0.0) <= tol)


def spectral_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def solve_alpha0(blocks: BlockUpperUnipotent, seed: KahlerSeed, cond_limit: float = 1e12) -> TransportState:
    """Unique ``alpha0`` with ``F(alpha0) = 0``; requires ``||A||_2 < 1``."""
    A = blocks.a_matrix
    h = A.shape[0]
    s = _s_vector(blocks, seed)
    if h == 0:
        return TransportState(np.zeros(0, complex), blocks, A, complex_jacobian(A), 0.0)
    nA = spectral_norm(A)
    if nA >= 1:
        raise GuardError(f"||A||_2 = {nA:.6g} violates ||A||_2 < 1")
    J = real_jacobian(A)
    if np.linalg.cond(J) > cond_limit:
        raise GuardError(f"realified Jacobian is numerically singular (cond > {cond_limit:g})")
    xy = np.linalg.solve(J.T, np.concatenate([s.real, s.imag]))
    alpha0 = xy[:h] + 1j * xy[h:]
    res = float(np.abs(residual_F(alpha0, blocks, seed)).max())
    return TransportState(alpha0, blocks, A, complex_jacobian(A), res)


def transported_class(alpha0, seed: KahlerSeed) -> np.ndarray:
    """Coefficients of ``sigma`` over ``(eta0 | eta1 | eta2)``."""
    a = np.atleast_1d(np.asarray(alpha0, complex))
    return np.concatenate([a, seed.alpha1, a.conj()])


def type_defect(sigma: np.ndarray, blocks: BlockUpperUnipotent, frame) -> float:
    """``max |Q(sigma, Omega)|, |Q(sigma, conj Omega)|`` over the rows ``Omega = eta0 + Phi01 eta1 + Phi02 eta2``."""
    h20 = blocks.dims[0]
    rows = np.concatenate([np.eye(h20), blocks.b01, blocks.b02], axis=1)
    Q = frame.pairing
    worst = 0.0
    for row in rows:
        conj_row = frame.conj @ row.conj()
        worst = max(worst, abs(sigma @ Q @ row), abs(sigma @ Q @ conj_row))
    return float(worst)


# -- continuation -------------------------------------------------------------


@dataclass
class PathResult:
    params: list
    alpha0: list
    norm_A: list
    truncated_at: int | None = None
    diagnostic: str | None = None
    certificate: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "params": [float(p) for p in self.params],
            "alpha0": [[[float(z.real), float(z.imag)] for z in a] for a in self.alpha0],
            "norm_A": self.norm_A,
            "truncated_at": self.truncated_at,
            "diagnostic": self.diagnostic,
            "certificate": self.certificate,
        }


def continue_path(curve, seed: KahlerSeed, steps: int | None = None, span=(0.0, 1.0),
                  max_halvings: int = 4) -> PathResult:
    """Follow ``alpha0`` along a sampled or callable block curve.

    ``curve`` is either a list of :class:`BlockUpperUnipotent` (sample index is
    the parameter) or a callable ``r -> blocks`` sampled at ``steps + 1``
    uniform points of ``span``.  For callable curves a step landing at
    ``||A|| > 0.95`` is halved (up to ``max_halvings`` times) so the guard is
    approached on a finer grid.  The path stops before the first sample with
    ``||A||_2 >= 1``.
    """
    if callable(curve):
        if steps is None or steps < 1:
            raise ValidationError("callable curves need steps >= 1")
        grid = list(np.linspace(span[0], span[1], steps + 1))
        at = curve
    else:
        samples = list(curve)
        grid = list(range(len(samples)))
        at = samples.__getitem__
    result = PathResult([], [], [])
    sup_a = sup_b12 = sup_alpha = 0.0
    prev = None
    queue = list(grid)
    depth = {p: 0 for p in queue}
    while queue:
        p = queue.pop(0)
        blocks = at(p)
        nA = spectral_norm(blocks.a_matrix)
        if callable(curve) and prev is not None and nA > GUARD_SLOWDOWN and depth[p] < max_halvings:
            mid = 0.5 * (prev + p)
            if mid not in depth:
                depth[mid] = depth[p] + 1
                depth[p] += 1
                queue = [mid, p] + queue
                continue
        if nA >= 1:
            result.truncated_at = len(result.params) if callable(curve) else int(p)
            result.diagnostic = f"||A||_2 = {nA:.6g} >= 1 at parameter {float(p):.6g}"
            break
        state = solve_alpha0(blocks, seed)
        result.params.append(p)
        result.alpha0.append(state.alpha0)
        result.norm_A.append(nA)
        sup_a = max(sup_a, nA)
        sup_b12 = max(sup_b12, spectral_norm(blocks.b12))
        sup_alpha = max(sup_alpha, float(np.linalg.norm(state.alpha0)))
        prev = p
    if result.params:
        bound = float(np.linalg.norm(seed.alpha1)) * sup_b12 / (1.0 - sup_a)
        result.certificate = {"sup_alpha0": sup_alpha, "bound": bound, "sup_A": sup_a,
                              "sup_b12": sup_b12, "holds": sup_alpha <= bound + 1e-9}
    return result


def scalar_loop(radius: float = 0.5):
    """Blocks ``Phi01 = 0, Phi12 = 1, Phi02 = radius e^{i theta}`` for ``theta`` in ``[0, 2 pi]``."""
    def curve(theta):
        return BlockUpperUnipotent(0.0, radius * np.exp(1j * theta), 1.0)
    return curve


# -- metric update ------------------------------------------------------------


def _s_map(phi: np.ndarray):
    return lambda G: phi.conj().T @ G.T @ phi


def metric_update(g, phi) -> np.ndarray:
    """``(I - S)^{-1}(g)`` with ``S(G) = conj(phi)^T G^T phi``, by a direct linear solve."""
    g = np.asarray(g, complex)
    phi = np.asarray(phi, complex)
    if g.ndim == 0:
        g = g.reshape(1, 1)
    if phi.ndim == 0:
        phi = phi.reshape(1, 1)
    d = g.shape[0]
    if g.shape != (d, d) or phi.shape != (d, d):
        raise ShapeError("g and phi must be square matrices of the same size")
    smax = float(np.linalg.norm(phi, 2))
    if smax >= 1:
        raise GuardError(f"sigma_max(phi) = {smax:.6g} violates sigma_max < 1")
    S = _s_map(phi)
    cols = []
    for k in range(d * d):
        e = np.zeros(d * d, complex)
        e[k] = 1.0
        cols.append(S(e.reshape(d, d)).reshape(-1))
    op = np.eye(d * d) - np.array(cols).T
    x = np.linalg.solve(op, g.reshape(-1)).reshape(d, d)
    return (x + x.conj().T) / 2


@dataclass
class MetricField:
    """Hermitian matrices ``g(z)`` on a grid, shape ``(..., d, d)``, with optional Beltrami data."""

    metrics: np.ndarray
    beltrami: np.ndarray | None = None


def positivity_check(field: MetricField) -> tuple[bool, float]:
    """Smallest Hermitian eigenvalue over the grid and whether it is positive."""
    m = np.asarray(field.metrics, complex)
    herm = (m + np.swapaxes(m.conj(), -1, -2)) / 2
    margin = float(np.linalg.eigvalsh(herm).min())
    return margin > 0, margin


def update_field(field: MetricField) -> MetricField:
    """Apply :func:`metric_update` pointwise using the field's Beltrami matrices."""
    if field.beltrami is None:
        raise ValidationError("field carries no Beltrami matrices")
    g = np.asarray(field.metrics, complex)
    phi = np.asarray(field.beltrami, complex)
    flat_g = g.reshape(-1, *g.shape[-2:])
    flat_p = phi.reshape(-1, *phi.shape[-2:])
    out = np.array([metric_update(a, b) for a, b in zip(flat_g, flat_p)])
    return MetricField(out.reshape(g.shape), phi)


# -- stability region ---------------------------------------------------------


def stability_region_probe(model, seed: KahlerSeed, trials: int, rng_seed: int = 0, grid: int = 64,
                           cap: float = 1.0, bisect_tol: float = 1e-6) -> dict:
    """Empirical ``c2`` (``||A|| < 1``), ``c1`` (purity) and ``c0 = min(c1, c2, 1)``."""
    from .period import ray_threshold, stability_radius

    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = np.random.default_rng(rng_seed)
    directions = [model.direction(rng) for _ in range(trials)]
    per_ray = []
    for direction in directions:
        def value(r, direction=direction):
            try:
                return spectral_norm(model.blocks(direction, r).a_matrix)
            except (GuardError, ArithmeticError):
                return np.inf
        per_ray.append(ray_threshold(value, lambda r0, v0, r1, v1: v1 >= 1.0, grid, cap, bisect_tol))
    c2 = min(per_ray)
    c1 = stability_radius(model, trials, rng_seed, grid, cap, bisect_tol=bisect_tol)["radius"]
    c0 = min(c1, c2, 1.0)
    ok = True
    for direction in directions:
        try:
            solve_alpha0(model.blocks(direction, c0 * (1 - 1e-6)), seed)
        except GuardError:
            ok = False
    return {"c0": c0, "c1": c1, "c2": c2, "c2_per_ray": per_ray, "solve_ok": ok}
