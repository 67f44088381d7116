import numpy as np
import pytest

from gwlowrank.errors import BudgetError, PoleOnPathError
from gwlowrank.ks_model import ModelSpec, build_model_1d, sys2
from gwlowrank.response import epsilon_dense, wp_dense
from gwlowrank.spectra import (
    auto_shift,
    casida_full,
    check_wp_clearance,
    delta_w,
    enclosed_g0_poles,
    full_casida_matrix,
    pole_map,
    reduced_casida_matrix,
    residue_free,
)

SQRT2 = np.sqrt(2.0)


def test_sys2_single_pole(s2):
    spec = casida_full(s2)
    assert spec.omegas.shape == (1,)
    # D = 1, K = 2 rho12^T v rho12 = 0.5: Omega^2 = 1 + 2 * 0.5
    assert abs(spec.omegas[0] - SQRT2) <= 1e-14
    assert abs(delta_w(s2) - SQRT2) <= 1e-14


def test_sys2_pole_is_root_of_dielectric_determinant(s2):
    assert abs(np.linalg.det(epsilon_dense(s2, SQRT2 + 1e-9j))) <= 1e-8
    assert abs(np.linalg.det(epsilon_dense(s2, np.sqrt(1.5)))) > 0.1


def test_zero_coupling_gives_bare_transitions(model):
    free = model.with_coulomb(np.zeros_like(model.coulomb))
    spec = casida_full(free)
    np.testing.assert_allclose(spec.omegas, _bare(free), rtol=1e-12)
    assert delta_w(free) == pytest.approx(free.gap, rel=1e-12)


def _bare(sys):
    eps = sys.eigenvalues
    return np.sort((eps[None, sys.n_v:] - eps[: sys.n_v, None]).ravel())


def test_reduced_matches_full(model):
    lam = np.linalg.eigvals(full_casida_matrix(model))
    pos = np.sort(lam.real[lam.real > 0])
    red = np.sort(np.linalg.eigvalsh(reduced_casida_matrix(model)))
    np.testing.assert_allclose(pos**2, red, rtol=1e-10)
    np.testing.assert_allclose(np.abs(lam.imag), 0.0, atol=1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_delta_w_at_least_gap(seed):
    r = np.random.default_rng(seed)
    spec = ModelSpec(n_grid=24, box_length=10.0, well_depths=(r.uniform(1, 6),), well_centers=(5.0,),
                     well_widths=(r.uniform(0.6, 2.0),), soft_core=r.uniform(0.5, 2.0), n_v=1)
    sys = build_model_1d(spec)
    assert delta_w(sys) >= sys.gap
    assert np.all(casida_full(sys).omegas > 0)


def test_pole_expansion_reconstructs_wp(model):
    spec = casida_full(model)
    r = np.random.default_rng(7)
    for _ in range(10):
        w = complex(r.uniform(-3, 3), r.choice([-1, 1]) * r.uniform(0.5, 4))
        ref = wp_dense(model, w)
        assert np.linalg.norm(spec.wp(w) - ref) <= 1e-8 * np.linalg.norm(ref)


def test_casida_budget(model):
    with pytest.raises(BudgetError):
        casida_full(model, budget=10)


def test_residue_free_sys2(s2):
    rep = residue_free(s2, 0.0, delta_w(s2))
    assert rep.is_residue_free and rep.suggested_shift == 0.0
    assert rep.lb == -0.5 and rep.ub == 0.5


def test_residue_free_far_frequency(model):
    dw = delta_w(model)
    assert not residue_free(model, model.lumo + dw + 0.1, dw).is_residue_free


def test_midgap_admits_imaginary_axis(model):
    dw = delta_w(model)
    rep = residue_free(model, model.midgap, dw)
    assert rep.is_residue_free and rep.lb < 0.0 < rep.ub


def test_enclosed_poles_residue_free(model):
    assert enclosed_g0_poles(model, model.midgap, 0.0) == []


def test_enclosed_poles_sys2(s2):
    # omega = 0.6: the occupied pole -1.1 and unoccupied pole -0.1 are both left of the axis
    poles = enclosed_g0_poles(s2, 0.6, 0.0)
    assert [(p.state, p.z, p.coefficient) for p in poles] == [(2, pytest.approx(-0.1), 1)]
    # omega = -0.6: occupied pole 0.1 is right of the axis
    poles = enclosed_g0_poles(s2, -0.6, 0.0)
    assert [(p.state, p.z, p.coefficient) for p in poles] == [(1, pytest.approx(0.1), -1)]


def test_enclosed_poles_shift_on_pole(s2):
    with pytest.raises(PoleOnPathError):
        enclosed_g0_poles(s2, 0.0, 0.5 + 1e-9)


def test_wp_clearance():
    check_wp_clearance(0.5, 1.0)
    with pytest.raises(PoleOnPathError):
        check_wp_clearance(-1.0, 1.0)


def test_auto_shift_residue_free(model):
    dw = delta_w(model)
    assert auto_shift(model, model.midgap, dw) == pytest.approx(0.0, abs=1e-14)


def test_auto_shift_avoids_poles(s2):
    dw = delta_w(s2)
    shift = auto_shift(s2, 0.6, dw)
    assert abs(shift) < dw
    assert np.min(np.abs(s2.eigenvalues - 0.6 - shift)) > 0.1


def test_pole_map_kinds(model):
    rows = pole_map(model, model.midgap)
    kinds = {k for _, _, k in rows}
    assert kinds == {"g0_occ", "g0_unocc", "wp_pos", "wp_neg"}
    assert all(im > 0 for _, im, k in rows if k in ("g0_occ", "wp_neg"))
    assert all(im < 0 for _, im, k in rows if k in ("g0_unocc", "wp_pos"))
    assert sum(k == "g0_occ" for _, _, k in rows) == model.n_v


def test_sys2_custom_coulomb_scalar_casida():
    sys = sys2(coulomb=np.array([[2.0, 0.0], [0.0, 2.0]]))
    # rho12 = (0.5, -0.5): k = rho^T v rho = 1, Omega^2 = D^2 + 2 D (2 k)
    assert delta_w(sys) == pytest.approx(np.sqrt(1.0 + 4.0), abs=1e-13)
