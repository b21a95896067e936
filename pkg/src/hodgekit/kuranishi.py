"""Kuranishi power series, Maurer-Cartan residuals, volume-form families and majorants.

The solver builds ``phi(t) = sum_I phi_I t^I`` with ``phi_{e_j} = theta_j`` and,
for ``|I| >= 2``::

    phi_I = 1/2 dbar_star G sum_{J + K = I} [phi_J, phi_K]

which solves ``dbar phi = 1/2 [phi, phi]`` order by order modulo the harmonic
part of the bracket (the obstruction).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .core import TruncatedSeries, multi_indices, series_eval, series_mul
from .exceptions import RadiusWarning, ShapeError, ValidationError


def _sub_indices(index):
    """Exponent tuples ``J`` with ``0 < J < index`` componentwise, in fixed order."""
    ranges = [range(e + 1) for e in index]
    out = []

    def rec(pos, acc):
        if pos == len(index):
            j = tuple(acc)
            if 0 < sum(j) < sum(index):
                out.append(j)
            return
        for e in ranges[pos]:
            acc.append(e)
            rec(pos + 1, acc)
            acc.pop()

    rec(0, [])
    return out


def _minus(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _bracket_sum(backend, coeffs, idx):
    """``sum_{J + K = idx} [phi_J, phi_K]`` over stored coefficients, or ``None``."""
    acc = None
    for sub in _sub_indices(idx):
        x, y = coeffs.get(sub), coeffs.get(_minus(idx, sub))
        if x is None or y is None:
            continue
        term = backend.bracket(x, y)
        acc = term if acc is None else acc + term
    return acc


@dataclass(frozen=True, eq=False)
class BeltramiSeries:
    """Truncated series of (0,1) vector forms with its linear basis.

    ``radius`` bounds ``|t|`` (Euclidean) for which evaluation is declared
    meaningful; ``inf`` when unknown.
    """

    backend: object
    series: TruncatedSeries
    basis: tuple
    radius: float = math.inf

    @property
    def n_params(self) -> int:
        return self.series.n

    @property
    def max_degree(self) -> int:
        return self.series.max_degree

    def zero(self):
        return self.backend.zeros(1)

    def __call__(self, t):
        return series_eval(self.series, t, zero=self.zero())

    def homogeneous(self, t, deg: int):
        """Degree-``deg`` part ``phi_deg(t)``."""
        t = np.asarray(t, complex).reshape(-1)
        total = self.zero()
        for idx, c in self.series.homogeneous(deg).items():
            total = total + c * np.prod(t ** np.asarray(idx))
        return total

    def linear(self, t):
        return self.homogeneous(t, 1)

    def coefficient(self, index):
        c = self.series[index]
        return self.zero() if isinstance(c, int) else c

    def with_radius(self, radius: float) -> "BeltramiSeries":
        return replace(self, radius=float(radius))

    def basis_bound(self) -> float:
        """Largest ``||sum theta_j t_j||`` over unit ``t``: sqrt of the top Gram eigenvalue."""
        b = self.backend
        gram = np.array([[b.inner(x, y) for y in self.basis] for x in self.basis])
        return float(np.sqrt(max(np.linalg.eigvalsh((gram + gram.conj().T) / 2).max(), 0.0)))


def solve_kuranishi(backend, basis, max_degree: int, harmonic_tol: float = 1e-12) -> BeltramiSeries:
    """Solve the Kuranishi recursion to total degree ``max_degree``.

    Parameters
    ----------
    backend : TorusBackend or DGLABackend
    basis : sequence of harmonic (0,1) vector forms
        The linear part ``theta_1 .. theta_N``.
    max_degree : int
        Truncation degree ``M >= 1``.
    """
    basis = tuple(basis)
    if int(max_degree) != max_degree or max_degree < 1:
        raise ValidationError(f"truncation degree must be an integer >= 1, got {max_degree}")
    if not basis:
        raise ValidationError("need at least one basis form")
    for j, th in enumerate(basis):
        if getattr(th, "q", None) != 1 or not getattr(th, "vector", False):
            raise ShapeError(f"basis element {j} is not a (0,1) vector form")
        lap = backend.norm(backend.laplacian(th))
        if lap > harmonic_tol * max(1.0, backend.norm(th)):
            raise ValidationError(f"basis element {j} is not harmonic (|Laplacian| = {lap:.3e})")
    gram = np.array([[backend.inner(x, y) for y in basis] for x in basis])
    ev = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
    if ev.min() <= 1e-12 * max(1.0, ev.max()):
        raise ValidationError("basis forms are linearly dependent")

    n = len(basis)
    coeffs = {}
    for j, th in enumerate(basis):
        idx = tuple(int(k == j) for k in range(n))
        coeffs[idx] = th
    for mu in range(2, max_degree + 1):
        for idx in multi_indices(n, mu):
            acc = _bracket_sum(backend, coeffs, idx)
            if acc is None:
                continue
            phi_i = 0.5 * backend.dbar_star(backend.green(acc))
            if _nonzero(phi_i):
                coeffs[idx] = phi_i
    return BeltramiSeries(backend, TruncatedSeries(n, max_degree, coeffs), basis)


def _nonzero(form) -> bool:
    arr = getattr(form, "coeffs", None)
    if arr is None:
        arr = form.values
    return bool(np.any(arr))


@dataclass(frozen=True)
class Residual:
    value: float
    inside_radius: bool
    notice: str | None = None

    def __float__(self):
        return self.value


def _check_radius(phi: BeltramiSeries, t) -> tuple[bool, str | None]:
    r = float(np.linalg.norm(np.asarray(t, complex)))
    if r <= phi.radius * (1 + 1e-12):
        return True, None
    msg = f"|t| = {r:.4g} exceeds the declared radius {phi.radius:.4g}"
    warnings.warn(msg, RadiusWarning, stacklevel=3)
    return False, msg


def mc_residual(phi: BeltramiSeries, t) -> Residual:
    """``|| dbar phi(t) - 1/2 [phi(t), phi(t)] ||`` in the backend W^0 norm."""
    inside, notice = _check_radius(phi, t)
    b = phi.backend
    f = phi(t)
    res = b.dbar(f) - 0.5 * b.bracket(f, f)
    return Residual(b.norm(res), inside, notice)


def obstruction_series(phi: BeltramiSeries, tol: float = 0.0) -> TruncatedSeries:
    """Series of ``H [phi(t), phi(t)]`` up to the solver's truncation degree.

    Coefficients with norm ``<= tol`` are dropped (``tol = 0`` keeps every
    coefficient that is not exactly zero).
    """
    b = phi.backend
    s = phi.series
    out = {}
    for mu in range(2, s.max_degree + 1):
        for idx in multi_indices(s.n, mu):
            acc = _bracket_sum(b, s.coeffs, idx)
            if acc is not None:
                h = b.harmonic_project(acc)
                if b.norm(h) > tol:
                    out[idx] = h
    return TruncatedSeries(s.n, s.max_degree, out)


def is_zero_series(s: TruncatedSeries) -> bool:
    return not s.coeffs


def order_identity_defect(phi: BeltramiSeries) -> float:
    """Largest ``|| dbar phi_I - 1/2 (sum [phi_J, phi_K]) + 1/2 H(...) ||`` over ``|I| >= 2``.

    The degree-``I`` Maurer-Cartan identity holds up to the harmonic part of
    the bracket sum, and the remainder must vanish.
    """
    b = phi.backend
    s = phi.series
    worst = 0.0
    for mu in range(2, s.max_degree + 1):
        for idx in multi_indices(s.n, mu):
            acc = _bracket_sum(b, s.coeffs, idx)
            if acc is None:
                continue
            lhs = b.dbar(phi.coefficient(idx))
            rest = lhs - 0.5 * acc + 0.5 * b.harmonic_project(acc)
            worst = max(worst, b.norm(rest) / max(1.0, b.norm(acc)))
    return worst


# -- volume-form family -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VolumeFamily:
    """``Omega_0(t) = sum_k (i_phi(t))^k Omega_0 / k!`` kept as one series per depth ``k``.

    Depth ``k`` terms on the torus have type ``(n-k, k)``; different depths are
    L^2-orthogonal.
    """

    backend: object
    omega0: object
    terms: tuple

    def evaluate(self, t) -> list:
        """Forms of each depth at ``t``; ``None`` marks an identically zero depth."""
        out = []
        for s in self.terms:
            if not s.coeffs:
                out.append(None)
                continue
            total = None
            for idx, c in s:
                term = c * complex(np.prod(np.asarray(t, complex).reshape(-1) ** np.asarray(idx)))
                total = term if total is None else total + term
            out.append(total)
        return out

    __call__ = evaluate


def volume_family(phi: BeltramiSeries, omega0=None, norm_tol: float = 1e-12) -> VolumeFamily:
    """Expand ``e^{phi(t)} -| Omega_0`` up to contraction depth ``n``."""
    b = phi.backend
    if omega0 is None:
        omega0 = b.volume_form()
    nrm = b.norm(omega0)
    if abs(nrm - 1.0) > norm_tol:
        raise ValidationError(f"base volume form must have unit L^2 norm, got {nrm:.6g}")
    if hasattr(omega0, "K"):
        # torus: constant coefficients keep the form nowhere vanishing
        if b.norm(b.laplacian(omega0)) > 1e-12 or omega0.p != b.d or omega0.q != 0:
            raise ValidationError("base volume form must be a constant (n,0)-form")
        depth = b.d
    else:
        depth = 1
    s = phi.series
    terms = [TruncatedSeries(s.n, s.max_degree, {(0,) * s.n: omega0})]
    for k in range(1, depth + 1):
        nxt = series_mul(s, terms[-1], s.max_degree, product=lambda f, w: b.contract(f, w))
        terms.append(nxt.scale(1.0 / k))
    return VolumeFamily(b, omega0, tuple(terms))


def wp_distance(family: VolumeFamily, t) -> float:
    """``|| Omega_0(t) - Omega_0 ||_{L^2}`` by Parseval over the orthogonal depths."""
    b = family.backend
    parts = family.evaluate(t)
    total = 0.0
    if parts[0] is not None:
        total += b.norm(parts[0] - family.omega0) ** 2
    for f in parts[1:]:
        if f is not None:
            total += b.norm(f) ** 2
    return float(np.sqrt(total))


def closedness_defect(family: VolumeFamily, t) -> float:
    """``|| d Omega_0(t) ||`` on the torus, grouping ``partial`` and ``dbar`` by type."""
    b = family.backend
    if not hasattr(b, "partial"):
        raise ShapeError("closedness is only defined on the torus backend")
    parts = family.evaluate(t)
    total = 0.0
    n = len(parts) - 1
    for k in range(n + 2):
        # type (n - k + 1, k): partial of depth k plus dbar of depth k - 1
        pieces = []
        if k <= n and parts[k] is not None and parts[k].p < b.d:
            pieces.append(b.partial(parts[k]))
        if 1 <= k <= n + 1 and parts[k - 1] is not None and parts[k - 1].q < b.d:
            pieces.append(b.dbar(parts[k - 1]))
        if pieces:
            acc = pieces[0]
            for extra in pieces[1:]:
                acc = acc + extra
            total += b.norm(acc) ** 2
    return float(np.sqrt(total))


# -- majorant series ----------------------------------------------------------


def radius_predicate(C: float, x1tau: float) -> bool:
    """``x1 tau <= 1 / (4 C)``, the convergence threshold of the majorant."""
    if C < 0 or x1tau < 0:
        raise ValidationError("C and x1*tau must be non-negative")
    return 4.0 * C * x1tau <= 1.0 + 1e-12


def majorant_sum(C: float, u: float) -> float:
    """Closed form ``S(u) = (1 - sqrt(1 - 4 C u)) / (2 C)`` of the majorant in ``u = x1 tau``."""
    if C == 0:
        return u
    disc = 1.0 - 4.0 * C * u
    if disc < 0:
        return math.inf
    # same value as (1 - sqrt(disc)) / 2C without cancellation at small u
    return 2.0 * u / (1.0 + math.sqrt(disc))


@dataclass(frozen=True)
class MajorantSeries:
    C: float
    x1: float
    coeffs: tuple

    @property
    def max_degree(self) -> int:
        return len(self.coeffs)

    @property
    def radius(self) -> float:
        """Largest ``tau`` with ``x1 tau <= 1/(4C)``."""
        return math.inf if self.C == 0 else 1.0 / (4.0 * self.C * self.x1)

    def accepts(self, x1tau: float) -> bool:
        return radius_predicate(self.C, x1tau)

    def empirical_eps1(self, tol: float = 1e-14) -> float:
        """Value of ``u = x1 tau`` where the tail ``S(u) - u`` first reaches ``u / 2``."""
        return empirical_eps1(self.C, tol)


def empirical_eps1(C: float, tol: float = 1e-14) -> float:
    if C == 0:
        return math.inf
    lo, hi = 0.0, 1.0 / (4.0 * C)
    # tail/u is increasing in u and exceeds 1/2 at the radius (S = u/(2Cu) there)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if majorant_sum(C, mid) - mid >= 0.5 * mid:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def majorant(C: float, x1: float, max_degree: int) -> MajorantSeries:
    """Coefficients of ``x_k = C sum_{i=1}^{k-1} x_i x_{k-i}`` for ``k <= max_degree``."""
    if C < 0:
        raise ValidationError("C must be non-negative")
    if not x1 > 0:
        raise ValidationError("x1 must be positive")
    if max_degree < 1:
        raise ValidationError("need max_degree >= 1")
    x = [float(x1)]
    for k in range(2, max_degree + 1):
        x.append(C * sum(x[i - 1] * x[k - i - 1] for i in range(1, k)))
    return MajorantSeries(float(C), float(x1), tuple(x))


def majorant_domination(phi: BeltramiSeries, C: float, direction) -> tuple[bool, list]:
    """Compare ``||phi_mu(u)||`` with majorant coefficients along a unit direction ``u``.

    Returns ``(ok, rows)`` with rows ``(mu, norm, x_mu)``.
    """
    b = phi.backend
    u = np.asarray(direction, complex).reshape(-1)
    u = u / np.linalg.norm(u)
    x1 = b.norm(phi.linear(u))
    maj = majorant(C, x1, phi.max_degree)
    rows, ok = [], True
    for mu in range(1, phi.max_degree + 1):
        val = b.norm(phi.homogeneous(u, mu))
        bound = maj.coeffs[mu - 1]
        ok &= val <= bound * (1 + 1e-10) + 1e-14
        rows.append((mu, val, bound))
    return ok, rows


def series_radius(phi: BeltramiSeries, C: float, empirical: bool = True) -> float:
    """Bound on ``|t|``: the majorant threshold (or empirical eps1) divided by the basis bound."""
    theta = phi.basis_bound()
    u = empirical_eps1(C) if empirical else (math.inf if C == 0 else 1.0 / (4.0 * C))
    return u / theta


# -- estimate suite -----------------------------------------------------------


@dataclass
class EstimateReport:
    samples: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.samples) and all(s["pass"] for s in self.samples)

    def as_dict(self) -> dict:
        return {"samples": self.samples, "skipped": self.skipped, "constants": self.constants,
                "passed": self.passed}


def _largest_passing(samples, key):
    best = 0.0
    for s in sorted(samples, key=lambda s: s["abs_t"]):
        if not s[key]:
            break
        best = s["abs_t"]
    return best


def verify_estimates(phi: BeltramiSeries, family: VolumeFamily, samples, C1: float | None = None) -> EstimateReport:
    """Check the three norm inequalities at each sample ``t``.

    1. ``1/2 |phi_1(t)| <= |phi(t)| <= 3/2 |phi_1(t)|`` (C^1 grid norm),
    2. ``1/2 |phi_1(t)|_W0 <= |phi(t) -| Omega_0|_L2 <= 3/2 |phi_1(t)|_W0``,
    3. ``|Omega_0(t) - Omega_0|_L2 >= |phi(t)|_C0 / (6 C1)``.

    Samples beyond ``phi.radius`` are skipped with a notice.
    """
    from .backends.probes import harmonic_norm_ratio

    b = phi.backend
    if C1 is None:
        C1 = harmonic_norm_ratio(b)
    report = EstimateReport(constants={"C1": C1, "radius": phi.radius})
    for t in samples:
        t = np.asarray(t, complex).reshape(-1)
        r = float(np.linalg.norm(t))
        if r > phi.radius * (1 + 1e-12):
            report.skipped.append({"t": _cpx(t), "notice": f"|t| = {r:.4g} beyond radius {phi.radius:.4g}"})
            continue
        f, f1 = phi(t), phi.linear(t)
        n_f, n_f1 = b.norms(f), b.norms(f1)
        contracted = b.norm(b.contract(f, family.omega0))
        wp = wp_distance(family, t)
        lo1, hi1 = 0.5 * n_f1.c1, 1.5 * n_f1.c1
        lo2, hi2 = 0.5 * n_f1.w0, 1.5 * n_f1.w0
        lo3 = n_f.c0 / (6.0 * C1)
        m1 = min(n_f.c1 - lo1, hi1 - n_f.c1)
        m2 = min(contracted - lo2, hi2 - contracted)
        m3 = wp - lo3
        tol = 1e-12
        row = {
            "t": _cpx(t), "abs_t": r,
            "phi1_norm": n_f1.c1, "phi_norm": n_f.c1, "phi1_w0": n_f1.w0,
            "contracted_l2": contracted, "wp_distance": wp, "phi_c0": n_f.c0,
            "margin_phi": m1, "margin_omega": m2, "margin_wp": m3,
            "phi_sandwich": m1 >= -tol, "omega_sandwich": m2 >= -tol, "wp_lower": m3 >= -tol,
        }
        row["pass"] = row["phi_sandwich"] and row["omega_sandwich"] and row["wp_lower"]
        report.samples.append(row)
    for key, name in (("phi_sandwich", "eps1"), ("omega_sandwich", "eps2"), ("wp_lower", "eps")):
        report.constants[name] = _largest_passing(report.samples, key)
    return report


def _cpx(t) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(t, complex).reshape(-1)]


def sample_points(n_params: int, count: int, radius: float, seed: int, fraction: float = 1.0) -> list:
    """``count`` seeded points with ``|t|`` spread evenly in ``(0, fraction * radius]``."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        u = rng.standard_normal(n_params) + 1j * rng.standard_normal(n_params)
        u /= np.linalg.norm(u)
        out.append(u * fraction * radius * (k + 1) / count)
    return out
