import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from hodgekit.backends import TorusBackend
from hodgekit.core import BlockUpperUnipotent
from hodgekit.exceptions import GuardError, ShapeError, ValidationError
from hodgekit.kuranishi import solve_kuranishi
from hodgekit.period import (PolynomialBlockModel, ScalarRayModel, block_norms, hodge_frame,
                             kuranishi_block_curve, block_bounds_hold, purity_determinant, purity_matrix,
                             quasi_period, ray_threshold, stability_radius, transversality_check)

small = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@pytest.fixture(scope="module")
def frame():
    return hodge_frame(TorusBackend(d=2, K=1))


def test_frame(frame):
    assert frame.dims == (1, 4, 1)
    assert frame.gram_defect() <= 1e-14
    assert frame.harmonic_defect() == 0.0
    # Q(eta0, eta2) = 1 and conj swaps eta0 and eta2
    assert frame.pairing[0, 5] == pytest.approx(1.0)
    assert frame.conj[5, 0] == 1.0


def test_frame_needs_2_torus():
    with pytest.raises(ShapeError):
        hodge_frame(TorusBackend(d=3, K=0))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=0.3, allow_nan=False, allow_infinity=False),
                min_size=4, max_size=4))
def test_constant_theta_blocks(entries):
    b = TorusBackend(d=2, K=1)
    frame = hodge_frame(b)
    th = np.array(entries).reshape(2, 2)
    blocks = quasi_period(b.beltrami(th), frame)
    det = th[0, 0] * th[1, 1] - th[0, 1] * th[1, 0]
    # i_theta(dz1 ^ dz2) worked out by hand in the basis dz1dzb1, dz1dzb2, dz2dzb1, dz2dzb2
    want01 = np.array([th[1, 0], th[1, 1], -th[0, 0], -th[0, 1]])
    want12 = np.array([-th[0, 1], th[0, 0], -th[1, 1], th[1, 0]])
    np.testing.assert_allclose(blocks.b01[0], want01, atol=1e-14)
    np.testing.assert_allclose(blocks.b12[:, 0], want12, atol=1e-14)
    assert blocks.b02[0, 0] == pytest.approx(det, abs=1e-14)


def test_block_bounds_random(frame):
    b = frame.backend
    rng = np.random.default_rng(8)
    for _ in range(8):
        f = b.random_form(rng, 1)
        f = f * (rng.uniform(0.05, 0.5) / b.sup_op_norm(f))
        blocks = quasi_period(f, frame)
        assert block_bounds_hold(blocks, b.sup_op_norm(f))


def test_quasi_period_guards(frame):
    b = frame.backend
    with pytest.raises(GuardError):
        quasi_period(b.beltrami(np.eye(2)), frame)
    with pytest.raises(ShapeError):
        quasi_period(b.zeros(2), frame)
    zero = quasi_period(b.zeros(1), frame)
    assert block_norms(zero) == {"b01": 0.0, "b02": 0.0, "b12": 0.0}


def test_block_bound_predicate():
    s = 0.5
    assert block_bounds_hold(BlockUpperUnipotent(1.0, 0.5, 1.0), s)
    assert not block_bounds_hold(BlockUpperUnipotent(1.0, 0.51, 1.0), s)


@settings(max_examples=200)
@given(small, small, small)
def test_scalar_purity_closed_form(a, b, c):
    blocks = BlockUpperUnipotent(a, b, c)
    closed = 1 - np.conj(a) * c + a * np.conj(b) * c - abs(b) ** 2
    P, L, U = scipy.linalg.lu(purity_matrix(blocks))
    lu_det = np.linalg.det(P) * np.prod(np.diag(U))
    assert purity_determinant(blocks) == pytest.approx(closed, abs=1e-12 * max(1, abs(closed)))
    assert lu_det == pytest.approx(closed, abs=1e-11 * max(1, abs(closed)))


@settings(max_examples=30)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_purity_matches_lu(h20, h11, seed):
    rng = np.random.default_rng(seed)

    def rand(*s):
        return 0.5 * (rng.standard_normal(s) + 1j * rng.standard_normal(s))

    blocks = BlockUpperUnipotent(rand(h20, h11), rand(h20, h20), rand(h11, h20))
    lu, piv = scipy.linalg.lu_factor(purity_matrix(blocks))
    sign = (-1) ** np.sum(piv != np.arange(len(piv)))
    assert purity_determinant(blocks) == pytest.approx(sign * np.prod(np.diag(lu)), rel=1e-10, abs=1e-12)


def test_zero_blocks_have_unit_purity():
    assert purity_determinant(BlockUpperUnipotent.identity(1, 4)) == 1.0
    assert purity_determinant(BlockUpperUnipotent.identity(2, 0)) == 1.0


def test_synthetic_transversality():
    a, c = 0.7 - 0.1j, -1.3

    def good(t):
        return BlockUpperUnipotent(a * t[0], a * c * t[0] ** 2 / 2 + 0.3, c)

    def bad(t):
        return BlockUpperUnipotent(a * t[0], a * c * t[0] ** 3, c)

    assert transversality_check(good, [1.0]) <= 1e-10
    assert transversality_check(bad, [1.0]) > 1e-3
    with pytest.raises(ValidationError):
        transversality_check(good, [1.0], radius=1.0)


def test_kuranishi_curve_transversality(frame):
    b = frame.backend
    phi = solve_kuranishi(b, [b.beltrami([[0.3, 0.1j], [0.0, -0.2]]), b.beltrami([[0.0, 0.2], [0.1, 0.1]])], 3)
    curve = kuranishi_block_curve(phi, frame)
    assert transversality_check(curve, [0.4, -0.3j]) <= 1e-8


def _first_root(a, b, c, cap):
    # det along the ray (a r, b r^2, c r): 1 - a c r^2 + (a b c - b^2) r^4
    roots = np.roots([a * b * c - b * b, 0.0, -a * c, 0.0, 1.0])
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and 0 < r.real <= cap]
    return min(real, default=cap)


def test_scalar_stability_radius_matches_roots():
    model = ScalarRayModel()
    rep = stability_radius(model, trials=15, seed=3, grid=64, cap=1.0, bisect_tol=1e-9)
    rng = np.random.default_rng(3)
    want = [_first_root(*model.direction(rng), cap=1.0) for _ in range(15)]
    np.testing.assert_allclose(rep["per_ray"], want, atol=1e-6)
    assert rep["radius"] == pytest.approx(min(want), abs=1e-6)


def test_ray_threshold_no_failure():
    assert ray_threshold(lambda r: 1.0, lambda *a: False, grid=4, cap=0.7) == 0.7


def test_stability_needs_trials():
    with pytest.raises(ValidationError):
        stability_radius(ScalarRayModel(), trials=0)


def test_polynomial_model_round_trip():
    doc = {"h20": 1, "h11": 2,
           "b01": [[[[0, 0], [1, 0]], [[0, 0], [0, 1]]]],
           "b02": [[[[0, 0], [0, 0], [0.5, 0]]]],
           "b12": [[[[2, 0]]], [[[0, -1]]]]}
    m = PolynomialBlockModel.from_json(json.dumps(doc))
    blk = m.at(0.5)
    np.testing.assert_allclose(blk.b01, [[0.5, 0.5j]])
    np.testing.assert_allclose(blk.b02, [[0.125]])
    np.testing.assert_allclose(blk.b12, [[2.0], [-1j]])
    assert m.dims == (1, 2, 1)
    bad = dict(doc, b02=[[[0, 0]]])
    with pytest.raises(ValidationError):
        PolynomialBlockModel.from_dict(bad)


def test_gauge_change_first_order(frame):
    # phi -> phi + eps dbar(xi) is an infinitesimal gauge change; blocks move by O(eps^2)
    b = frame.backend
    rng = np.random.default_rng(21)
    phi = b.beltrami([[0.2, 0.1j], [-0.1, 0.15]])
    xi = b.random_form(rng, 0, K=1)
    xi = xi * (1 / b.norm(xi))
    base = quasi_period(phi, frame)
    diffs = []
    for eps in (1e-2, 1e-3):
        moved = quasi_period(phi + b.dbar(xi) * eps, frame)
        diffs.append(max(np.abs(moved.b01 - base.b01).max(), np.abs(moved.b02 - base.b02).max(),
                         np.abs(moved.b12 - base.b12).max()))
    assert diffs[1] <= 2e-2 * diffs[0] + 1e-14
    assert diffs[1] <= 1e-5
