import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import null_space

from hodgekit.backends import DGLABackend, DGLAData, make_backend, validate
from hodgekit.exceptions import ShapeError, ValidationError
from hodgekit.presets import flat_dgla, obstructed_dgla, unobstructed_dgla

PRESETS = {"unobstructed": unobstructed_dgla, "obstructed": obstructed_dgla}


def dense_projection(data, q):
    """Gram-orthogonal projection onto ker D_q ∩ ker D_{q-1}^* from null spaces."""
    ds, gs = data.differentials, data.grams
    rows = []
    if q < 3:
        rows.append(ds[q])
    if q > 0:
        rows.append(np.linalg.inv(gs[q - 1]) @ ds[q - 1].conj().T @ gs[q])
    N = null_space(np.vstack(rows))
    G = gs[q]
    return N @ np.linalg.inv(N.conj().T @ G @ N) @ N.conj().T @ G


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_harmonic_projection_matches_null_space(name):
    data = PRESETS[name]()
    b = DGLABackend(data)
    for q in range(4):
        np.testing.assert_allclose(b._proj[q], dense_projection(data, q), atol=1e-12)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_harmonic_dimensions(name):
    b = DGLABackend(PRESETS[name]())
    assert [len(b.harmonic_basis(q)) for q in range(4)] == [0, 2, 2, 1]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(PRESETS)), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_identities(name, q, seed):
    b = DGLABackend(PRESETS[name]())
    rng = np.random.default_rng(seed)
    f, g = b.random_form(rng, q), b.random_form(rng, q + 1)
    if q < 2:
        assert b.norm(b.dbar(b.dbar(f))) <= 1e-12
    assert abs(b.inner(b.dbar(f), g) - b.inner(f, b.dbar_star(g))) <= 1e-10 * b.norm(f) * b.norm(g)
    rest = f - b.harmonic_project(f) - b.laplacian(b.green(f))
    assert b.norm(rest) <= 1e-10 * b.norm(f)


def test_harmonic_basis_orthonormal(unobstructed):
    basis = unobstructed.harmonic_basis(1)
    gram = np.array([[unobstructed.inner(x, y) for y in basis] for x in basis])
    np.testing.assert_allclose(gram, np.eye(len(basis)), atol=1e-12)


def test_flat_complex():
    b = DGLABackend(flat_dgla())
    f = b.random_form(np.random.default_rng(0), 1)
    assert np.abs(b.green(f).values).max() == 0.0
    np.testing.assert_allclose(b.harmonic_project(f).values, f.values)


def test_bracket_is_tensor_contraction(obstructed, rng):
    a, c = obstructed.random_form(rng, 1), obstructed.random_form(rng, 1)
    B = obstructed.data.bracket
    want = np.array([a.values @ B[k] @ c.values for k in range(B.shape[0])])
    np.testing.assert_allclose(obstructed.bracket(a, c).values, want, atol=1e-14)
    np.testing.assert_array_equal(obstructed.bracket(a, c).values, obstructed.bracket(c, a).values)


def test_unobstructed_bracket_has_no_harmonic_part(unobstructed, rng):
    for _ in range(5):
        a, c = unobstructed.random_form(rng, 1), unobstructed.random_form(rng, 1)
        assert unobstructed.norm(unobstructed.harmonic_project(unobstructed.bracket(a, c))) <= 1e-14


def test_round_trip_json():
    data = obstructed_dgla()
    back = DGLAData.from_json(json.dumps(data.to_dict()))
    for x, y in zip(back.differentials + back.grams, data.differentials + data.grams):
        np.testing.assert_array_equal(x, y)
    np.testing.assert_array_equal(back.bracket, data.bracket)


def test_make_backend_dgla():
    doc = dict(unobstructed_dgla().to_dict(), backend="dgla")
    assert isinstance(make_backend(doc), DGLABackend)
    assert validate(make_backend(doc), seed=2) == []


def test_validation_errors():
    d0 = np.ones((2, 1))
    d1 = np.ones((1, 2))
    with pytest.raises(ValidationError, match="D_1 D_0"):
        DGLABackend(DGLAData([d0, d1, np.zeros((1, 1))], np.zeros((1, 2, 2))))
    with pytest.raises(ValidationError, match="symmetric"):
        br = np.zeros((1, 2, 2))
        br[0, 0, 1] = 1.0
        DGLAData([np.zeros((2, 1)), np.zeros((1, 2)), np.zeros((1, 1))], br).validate()
    with pytest.raises(ValidationError, match="positive definite"):
        DGLAData([np.zeros((2, 1)), np.zeros((1, 2)), np.zeros((1, 1))], np.zeros((1, 2, 2)),
                 [np.eye(1), -np.eye(2), np.eye(1), np.eye(1)]).validate()
    with pytest.raises(ValidationError, match="dimensions"):
        DGLAData.from_dict({"differentials": [], "bracket": []})
    with pytest.raises(ValidationError):
        DGLAData.from_dict({"dimensions": [1, 2, 1, 1], "differentials": [[[1, 0]], [], []], "bracket": []})


def test_shape_errors(obstructed):
    with pytest.raises(ShapeError):
        obstructed.cochain(1, [1, 2])
    with pytest.raises(ShapeError):
        obstructed.bracket(obstructed.zeros(2), obstructed.zeros(1))
    with pytest.raises(ShapeError):
        obstructed.dbar(obstructed.zeros(3))
