import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gwlowrank.errors import DimensionMismatchError, GapDegeneracyError, InvariantError
from gwlowrank.ks_model import (
    HARTREE_TO_EV,
    KsSystem,
    ModelSpec,
    build_model_1d,
    laplacian_spectrum,
    load_ksd,
    pair_density,
    save_ksd,
    soft_coulomb,
    sys2,
    transition_densities,
    transition_energies,
)


def test_sys2_fields(s2):
    assert s2.n_grid == 2 and s2.n == 2 and s2.n_v == 1 and s2.n_c == 1
    assert s2.homo == -0.5 and s2.lumo == 0.5
    assert s2.gap == 1.0 and s2.midgap == 0.0


def test_hartree_to_ev():
    assert HARTREE_TO_EV == 27.211386245988


def test_ksd_roundtrip_sys2(tmp_path, s2):
    save_ksd(s2, tmp_path / "b")
    back = load_ksd(tmp_path / "b")
    np.testing.assert_array_equal(back.eigenvalues, [-0.5, 0.5])
    np.testing.assert_array_equal(back.orbitals, s2.orbitals)
    np.testing.assert_array_equal(back.coulomb, [[1.0, 0.5], [0.5, 1.0]])
    assert back.n_v == 1 and back.vxc_element is None


def test_ksd_roundtrip_with_vxc(tmp_path, model):
    sys = model.with_vxc(np.linspace(-1, 0, model.n))
    save_ksd(sys, tmp_path / "m")
    back = load_ksd(tmp_path / "m")
    np.testing.assert_array_equal(back.vxc_element, sys.vxc_element)
    np.testing.assert_array_equal(back.orbitals, sys.orbitals)


def test_ksd_blob_is_column_major_little_endian(tmp_path):
    psi = np.eye(3)[:, [1, 0, 2]]
    sys = KsSystem(np.array([-1.0, 0.0, 1.0]), psi, np.eye(3), 1)
    save_ksd(sys, tmp_path / "b")
    raw = np.frombuffer((tmp_path / "b" / "orbitals.f64").read_bytes(), dtype="<f8")
    np.testing.assert_array_equal(raw[:3], psi[:, 0])


def test_ksd_wrong_byte_length(tmp_path, s2):
    save_ksd(s2, tmp_path / "b")
    f = tmp_path / "b" / "orbitals.f64"
    f.write_bytes(f.read_bytes()[:-8])
    with pytest.raises(DimensionMismatchError):
        load_ksd(tmp_path / "b")


def test_ksd_asymmetric_coulomb(tmp_path, s2):
    save_ksd(s2, tmp_path / "b")
    v = np.array([[1.0, 0.5], [0.4, 1.0]])
    (tmp_path / "b" / "coulomb.f64").write_bytes(v.ravel(order="F").astype("<f8").tobytes())
    with pytest.raises(InvariantError, match="symmetry"):
        load_ksd(tmp_path / "b")


def test_ksd_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_ksd(tmp_path)


def test_ksd_bad_version(tmp_path, s2):
    save_ksd(s2, tmp_path / "b")
    m = tmp_path / "b" / "manifest.json"
    d = json.loads(m.read_text())
    d["format_version"] = 99
    m.write_text(json.dumps(d))
    with pytest.raises(InvariantError):
        load_ksd(tmp_path / "b")


def test_rejects_non_orthonormal():
    psi = np.array([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(InvariantError, match="orthonormal"):
        KsSystem(np.array([-0.5, 0.5]), psi, np.eye(2), 1)


def test_rejects_indefinite_coulomb():
    with pytest.raises(InvariantError, match="semidefinite"):
        sys2(coulomb=np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_rejects_unsorted_eigenvalues():
    with pytest.raises(InvariantError, match="nondecreasing"):
        KsSystem(np.array([0.5, -0.5]), np.eye(2), np.eye(2), 1)


def test_rejects_degenerate_gap():
    with pytest.raises(GapDegeneracyError):
        KsSystem(np.array([0.1, 0.1]), np.eye(2), np.eye(2), 1)


@pytest.mark.parametrize("n_v", [0, 2])
def test_rejects_bad_occupation(n_v):
    with pytest.raises(InvariantError):
        KsSystem(np.array([-0.5, 0.5]), np.eye(2), np.eye(2), n_v)


def test_arrays_are_read_only(s2):
    with pytest.raises(ValueError):
        s2.eigenvalues[0] = 3.0


@pytest.mark.parametrize(
    "i, j, expected", [(1, 2, (0.5, -0.5)), (2, 1, (0.5, -0.5)), (1, 1, (0.5, 0.5)), (2, 2, (0.5, 0.5))]
)
def test_pair_density_sys2(s2, i, j, expected):
    np.testing.assert_allclose(pair_density(s2, i, j), expected, atol=1e-15)


def test_pair_density_index_range(s2):
    with pytest.raises(IndexError):
        pair_density(s2, 0, 1)
    with pytest.raises(IndexError):
        pair_density(s2, 1, 3)


def test_pair_density_symmetric_and_normalized(model):
    for i in (1, 2, 5):
        for j in (1, 3, 7):
            np.testing.assert_array_equal(pair_density(model, i, j), pair_density(model, j, i))
        assert abs(pair_density(model, i, i).sum() - 1.0) < 1e-12


def test_transition_layout(model):
    phi = transition_densities(model)
    d = transition_energies(model)
    assert phi.shape == (model.n_grid, model.n_v * model.n_c)
    # i-major: column (i, a) sits at i * n_c + (a - n_v)
    np.testing.assert_array_equal(phi[:, model.n_c + 3], pair_density(model, 2, model.n_v + 4))
    assert d[model.n_c + 3] == model.eigenvalues[model.n_v + 3] - model.eigenvalues[1]
    assert np.all(d > 0)


def test_default_model(model):
    assert model.n_grid == 64 and model.n == 64 and model.n_v == 2
    assert np.max(np.abs(model.orbitals.T @ model.orbitals - np.eye(64))) <= 1e-12
    assert np.linalg.eigvalsh(model.coulomb)[0] >= -1e-12 * np.linalg.norm(model.coulomb, 2)
    assert model.gap > 0
    # frozen from the brute-force diagonalisation of the default model
    np.testing.assert_allclose(model.eigenvalues[:3], [-2.956, -1.176, -0.123], atol=1e-3)


def test_default_model_coulomb_psd(model):
    lam = np.linalg.eigvalsh(model.coulomb)
    assert lam[0] >= 0.0 or abs(lam[0]) <= 1e-12 * lam[-1]


def test_soft_coulomb_is_circulant():
    v = soft_coulomb(ModelSpec())
    np.testing.assert_allclose(np.roll(v[0], 5), v[5], atol=1e-14)
    assert np.array_equal(v, v.T)


def test_free_particle_spectrum():
    spec = ModelSpec(n_grid=32, box_length=10.0, well_depths=(0.0,), n_v=1)
    sys = build_model_1d(spec)
    h = spec.box_length / spec.n_grid
    np.testing.assert_allclose(sys.eigenvalues, laplacian_spectrum(32, h), atol=1e-10)


def test_free_particle_degenerate_gap_rejected():
    with pytest.raises(GapDegeneracyError):
        build_model_1d(ModelSpec(n_grid=32, well_depths=(0.0,), n_v=2))


def test_model_is_deterministic():
    a, b = build_model_1d(), build_model_1d()
    np.testing.assert_array_equal(a.orbitals, b.orbitals)


def test_state_index(model):
    assert model.state_index("homo") == 2
    assert model.state_index("LUMO") == 3
    assert model.state_index(7) == 7
    with pytest.raises(IndexError):
        model.state_index(65)


def test_hamiltonian_reconstruction(small):
    h = small.hamiltonian()
    np.testing.assert_allclose(h @ small.orbitals, small.orbitals * small.eigenvalues, atol=1e-10)


def test_projectors(model):
    p_v, p_c = model.occupied_projector(), model.unoccupied_projector()
    np.testing.assert_allclose(p_v + p_c, np.eye(model.n_grid), atol=1e-12)
    np.testing.assert_allclose(p_v @ p_v, p_v, atol=1e-12)


def test_modelspec_json_roundtrip():
    spec = ModelSpec(n_grid=32, well_depths=(3.0, 2.0), well_centers=(4.0, 10.0), well_widths=(1.0, 0.8))
    assert ModelSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec
    with pytest.raises(ValueError):
        ModelSpec.from_dict({"bogus": 1})


@given(
    n_grid=st.sampled_from([16, 24, 32]),
    depth=st.floats(1.0, 6.0),
    width=st.floats(0.6, 2.0),
    soft=st.floats(0.5, 2.0),
)
def test_generated_models_satisfy_invariants(n_grid, depth, width, soft):
    spec = ModelSpec(n_grid=n_grid, box_length=10.0, well_depths=(depth,), well_centers=(5.0,),
                     well_widths=(width,), soft_core=soft, n_v=1)
    sys = build_model_1d(spec)
    assert np.max(np.abs(sys.orbitals.T @ sys.orbitals - np.eye(n_grid))) <= 1e-12
    assert np.linalg.eigvalsh(sys.coulomb)[0] >= -1e-12 * np.linalg.norm(sys.coulomb, 2)
    assert sys.gap > 0
