import math
import warnings
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import null_space

from hodgekit.backends import DGLABackend, TorusBackend, operator_norm_probe
from hodgekit.exceptions import RadiusWarning, ShapeError, ValidationError
from hodgekit.kuranishi import (closedness_defect, empirical_eps1, majorant, majorant_domination, majorant_sum,
                                mc_residual, obstruction_series, order_identity_defect, radius_predicate,
                                sample_points, series_radius, solve_kuranishi, verify_estimates,
                                volume_family, wp_distance)
from hodgekit.presets import obstructed_dgla


def catalan(n):
    return comb(2 * n, n) // (n + 1)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.integers(1, 12))
def test_majorant_is_scaled_catalan(C, x1, M):
    m = majorant(C, x1, M)
    for k, x in enumerate(m.coeffs, start=1):
        assert x == pytest.approx(catalan(k - 1) * C ** (k - 1) * x1 ** k, rel=1e-12)


def test_majorant_small_case():
    assert majorant(1.0, 1.0, 5).coeffs == (1.0, 1.0, 2.0, 5.0, 14.0)


@given(st.floats(0.01, 100))
def test_radius_predicate_threshold(C):
    assert radius_predicate(C, 1 / (4 * C))
    assert not radius_predicate(C, 1.01 / (4 * C))


@given(st.floats(0.1, 5), st.floats(0.0, 0.2))
def test_majorant_closed_form(C, frac):
    u = frac / (4 * C)
    partial = sum(catalan(k - 1) * C ** (k - 1) * u ** k for k in range(1, 200))
    assert majorant_sum(C, u) == pytest.approx(partial, rel=1e-10, abs=1e-300)


@given(st.floats(0.01, 100))
def test_empirical_eps1_closed_form(C):
    # S(u) = 3u/2 solves to C u = 2/9
    assert empirical_eps1(C) == pytest.approx(2 / (9 * C), rel=1e-10)


def test_majorant_errors():
    with pytest.raises(ValidationError):
        majorant(-1, 1, 3)
    with pytest.raises(ValidationError):
        majorant(1, 0, 3)


def test_constant_theta_torus_is_unobstructed():
    b = TorusBackend(d=2, K=2, tau=0.3 + 1.1j)
    basis = [b.beltrami([[0.3, 0.1j], [0.0, -0.2]]), b.beltrami([[0.0, 0.4], [0.1, 0.0]])]
    phi = solve_kuranishi(b, basis, 4)
    assert all(sum(i) == 1 for i in phi.series.coeffs)
    assert not obstruction_series(phi).coeffs
    assert mc_residual(phi, [0.3, -0.2j]).value == 0.0


def dense_green_oracle(data, y):
    """Solve Delta x = (1 - H) y with x Gram-orthogonal to harmonics, in V^2."""
    ds, gs = data.differentials, data.grams
    adj1 = np.linalg.inv(gs[1]) @ ds[1].conj().T @ gs[2]
    adj2 = np.linalg.inv(gs[2]) @ ds[2].conj().T @ gs[3]
    lap = ds[1] @ adj1 + adj2 @ ds[2]
    N = null_space(np.vstack([ds[2], adj1]))
    P = N @ np.linalg.inv(N.conj().T @ gs[2] @ N) @ N.conj().T @ gs[2]
    A = np.vstack([lap, N.conj().T @ gs[2]])
    rhs = np.concatenate([y - P @ y, np.zeros(N.shape[1])])
    x = np.linalg.lstsq(A, rhs, rcond=None)[0]
    return adj1, P, x


def test_obstructed_second_order_against_dense_oracle(obstructed):
    data = obstructed_dgla()
    basis = obstructed.harmonic_basis(1)
    phi = solve_kuranishi(obstructed, basis, 3)
    obs = obstruction_series(phi)
    B = data.bracket
    th = [v.values for v in basis]
    for i in range(2):
        for j in range(i, 2):
            idx = tuple((k == i) + (k == j) for k in range(2))
            br = np.array([th[i] @ B[k] @ th[j] for k in range(3)])
            # ordered pairs: one for i == j, two otherwise
            mult = 1.0 if i == j else 2.0
            adj1, P, x = dense_green_oracle(data, mult * br)
            np.testing.assert_allclose(phi.coefficient(idx).values, 0.5 * adj1 @ x, atol=1e-12)
            np.testing.assert_allclose(obs[idx].values, P @ (mult * br), atol=1e-12)
    assert np.abs(obs[(2, 0)].values).max() > 1e-3


@pytest.mark.parametrize("name", ["unobstructed", "obstructed"])
def test_order_identity(name, request):
    b = request.getfixturevalue(name)
    phi = solve_kuranishi(b, b.harmonic_basis(1), 5)
    assert order_identity_defect(phi) <= 1e-10


def test_unobstructed_obstruction_vanishes(unobstructed):
    phi = solve_kuranishi(unobstructed, unobstructed.harmonic_basis(1), 5)
    assert not obstruction_series(phi, tol=1e-12).coeffs


@pytest.mark.parametrize("M", [2, 3, 4])
def test_mc_residual_order(unobstructed, M):
    phi = solve_kuranishi(unobstructed, unobstructed.harmonic_basis(1), M)
    u = np.array([0.6, 0.8j])
    ratio = mc_residual(phi, 0.1 * u).value / mc_residual(phi, 0.05 * u).value
    assert ratio == pytest.approx(2 ** (M + 1), rel=0.2)


def test_radius_warning(unobstructed):
    phi = solve_kuranishi(unobstructed, unobstructed.harmonic_basis(1), 2).with_radius(0.1)
    with pytest.warns(RadiusWarning):
        r = mc_residual(phi, [0.2, 0.0])
    assert not r.inside_radius and r.notice
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert mc_residual(phi, [0.05, 0.0]).inside_radius


def test_solver_input_checks(torus2, unobstructed):
    with pytest.raises(ValidationError):
        solve_kuranishi(torus2, [torus2.beltrami(np.eye(2))], 0)
    with pytest.raises(ValidationError):
        solve_kuranishi(torus2, [torus2.beltrami(np.eye(2)), torus2.beltrami(2 * np.eye(2))], 2)
    bumpy = torus2.random_form(np.random.default_rng(0), 1)
    with pytest.raises(ValidationError, match="harmonic"):
        solve_kuranishi(torus2, [bumpy], 2)
    with pytest.raises(ShapeError):
        solve_kuranishi(unobstructed, [unobstructed.zeros(2)], 2)


def test_majorant_domination(obstructed):
    phi = solve_kuranishi(obstructed, obstructed.harmonic_basis(1), 5)
    C = operator_norm_probe(obstructed, 100, seed=0).constant
    ok, rows = majorant_domination(phi, C, [1.0, 1j])
    assert ok
    assert len(rows) == 5


def test_volume_family_on_torus(torus2):
    phi = solve_kuranishi(torus2, [torus2.beltrami([[0.3, 0.1], [0.2j, -0.1]])], 2)
    fam = volume_family(phi)
    parts = fam.evaluate([0.5])
    assert len(parts) == 3
    assert parts[2] is not None
    assert closedness_defect(fam, [0.5]) <= 1e-12
    # depth-2 term is det(phi) times a unit (0,2) form, up to sign
    t = 0.5
    det = np.linalg.det(t * np.array([[0.3, 0.1], [0.2j, -0.1]]))
    assert torus2.norm(parts[2]) == pytest.approx(abs(det), rel=1e-12)
    assert wp_distance(fam, [0.0]) == 0.0


def test_volume_family_requires_unit_form(torus2):
    phi = solve_kuranishi(torus2, [torus2.beltrami(np.eye(2) * 0.1)], 2)
    with pytest.raises(ValidationError):
        volume_family(phi, torus2.volume_form() * 2.0)


def test_dgla_volume_family_depth(unobstructed):
    phi = solve_kuranishi(unobstructed, unobstructed.harmonic_basis(1), 3)
    fam = volume_family(phi)
    assert len(fam.terms) == 2
    with pytest.raises(ShapeError):
        closedness_defect(fam, [0.1, 0.1])


@pytest.mark.parametrize("name", ["unobstructed", "obstructed"])
def test_estimates_inside_radius(name, request):
    b = request.getfixturevalue(name)
    phi = solve_kuranishi(b, b.harmonic_basis(1), 4)
    C = operator_norm_probe(b, 100, seed=0).constant
    phi = phi.with_radius(series_radius(phi, C))
    pts = sample_points(2, 10, phi.radius, seed=4)
    rep = verify_estimates(phi, volume_family(phi), pts)
    assert rep.passed and not rep.skipped
    assert rep.constants["eps1"] == pytest.approx(max(np.linalg.norm(p) for p in pts))


def test_estimates_skip_outside(unobstructed):
    phi = solve_kuranishi(unobstructed, unobstructed.harmonic_basis(1), 2).with_radius(0.1)
    rep = verify_estimates(phi, volume_family(phi), [np.array([0.5, 0.0])])
    assert rep.skipped and not rep.samples and not rep.passed


def test_sample_points_spacing():
    pts = sample_points(3, 5, 2.0, seed=1)
    np.testing.assert_allclose([np.linalg.norm(p) for p in pts], [0.4, 0.8, 1.2, 1.6, 2.0])
    assert all(np.array_equal(a, b) for a, b in zip(pts, sample_points(3, 5, 2.0, seed=1)))


def test_series_radius_uses_basis_bound(unobstructed):
    phi = solve_kuranishi(unobstructed, unobstructed.harmonic_basis(1), 2)
    assert phi.basis_bound() == pytest.approx(1.0)
    assert series_radius(phi, 2.0) == pytest.approx(2 / 18)
    assert series_radius(phi, 2.0, empirical=False) == pytest.approx(1 / 8)
    assert math.isinf(series_radius(phi, 0.0))
