import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gwlowrank.errors import PoleProximityError, SingularShiftError
from gwlowrank.greens import g0_apply, g0_apply_split, g0_dense
from gwlowrank.ks_model import KsSystem
from oracles import g0_ref


def test_g0_sys2_static(s2):
    # psi1 psi1^T / 0.5 + psi2 psi2^T / (-0.5)
    np.testing.assert_allclose(g0_dense(s2, 0.0), [[0.0, 2.0], [2.0, 0.0]], atol=1e-15)


def test_g0_apply_sys2_static(s2):
    np.testing.assert_allclose(g0_apply(s2, 0.0, 0.0, np.array([1.0, 0.0])), [0.0, 2.0], atol=1e-14)


def test_g0_matches_reference(small):
    for z, eta in ((0.3 + 0.7j, 0.0), (0.05, 1e-2), (-2.0, 0.5)):
        ref = g0_ref(small.eigenvalues, small.orbitals, small.n_v, z, eta)
        np.testing.assert_allclose(g0_dense(small, z, eta), ref, atol=1e-12)


def test_g0_conjugation(model):
    np.testing.assert_allclose(g0_dense(model, -3j), np.conj(g0_dense(model, 3j)), atol=1e-15)


def test_g0_asymptote(s2):
    big = 1e4
    assert abs(np.linalg.norm(g0_dense(s2, 1j * big), 2) * big - 1.0) <= 0.1


def test_g0_apply_zero(model):
    assert np.array_equal(g0_apply(model, 0.3j, 0.0, np.zeros((model.n_grid, 2))), np.zeros((model.n_grid, 2)))


def test_g0_pole_guard(s2):
    with pytest.raises(PoleProximityError):
        g0_dense(s2, 0.5)
    with pytest.raises(SingularShiftError):
        g0_apply(s2, 0.5, 0.0, np.ones(2))


@given(
    re=st.floats(-5.0, 5.0),
    im=st.floats(0.05, 10.0),
    sign=st.sampled_from([1.0, -1.0]),
    seed=st.integers(0, 2**32 - 1),
)
def test_g0_apply_matches_dense(model, re, im, sign, seed):
    z = complex(re, sign * im)
    x = np.random.default_rng(seed).standard_normal((model.n_grid, 3))
    ref = g0_dense(model, z) @ x
    assert np.linalg.norm(g0_apply(model, z, 0.0, x) - ref) <= 1e-10 * np.linalg.norm(ref)


def test_g0_apply_broadened_real_axis(model, rng):
    x = rng.standard_normal((model.n_grid, 2))
    z, eta = model.eigenvalues[3] + 1e-4, 1e-2
    ref = g0_dense(model, z, eta) @ x
    assert np.linalg.norm(g0_apply(model, z, eta, x) - ref) <= 1e-10 * np.linalg.norm(ref)


def test_projected_split(model, rng):
    x = rng.standard_normal((model.n_grid, 2))
    x1, x2 = g0_apply_split(model, 0.2, 0.05, x)
    p_v = model.occupied_projector()
    np.testing.assert_allclose(p_v @ x1, x1, atol=1e-13)
    np.testing.assert_allclose(p_v @ x2, 0.0, atol=1e-13)
    np.testing.assert_allclose(x1 + x2, g0_dense(model, 0.2, 0.05) @ x, atol=1e-10)


def test_g0_apply_truncated_basis(rng):
    # fewer stored states than grid points: G0 lives on their span
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    sys = KsSystem(np.array([-1.0, -0.2, 0.4, 1.1]), q[:, :4], np.eye(6), 2)
    x = rng.standard_normal((6, 2))
    z = 0.1 + 0.3j
    np.testing.assert_allclose(g0_apply(sys, z, 0.0, x), g0_dense(sys, z) @ x, atol=1e-12)
