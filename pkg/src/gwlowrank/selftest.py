"""Fast built-in consistency checks used by ``gwlowrank selftest``."""

from __future__ import annotations

import numpy as np

from .contour import make_path, sigma_c_contour
from .ks_model import build_model_1d, sys2
from .lowrank import make_provider
from .response import chi0_apply, chi0_dense
from .sigma import sigma_c_exact_sos
from .spectra import auto_shift, casida_full, full_casida_matrix


def _checks():
    s2 = sys2()
    model = build_model_1d()
    rng = np.random.default_rng(0)

    chi0 = chi0_dense(s2, 0.0)
    yield "sys2 chi0(0)", np.allclose(chi0, [[-1.0, 1.0], [1.0, -1.0]], atol=1e-12)

    for label, ks in (("sys2", s2), ("model", model)):
        spec = casida_full(ks)
        full = np.linalg.eigvals(full_casida_matrix(ks)).real
        pos = np.sort(full[full > 0])
        yield f"{label} casida reduction", np.allclose(pos, spec.omegas, rtol=1e-10)
        yield f"{label} delta_w >= gap", spec.omegas[0] >= ks.gap

        i, omega = ks.n_v, ks.midgap
        path = make_path(ks, omega, auto_shift(ks, omega, spec.omegas[0]), 64, spec)
        val = sigma_c_contour(ks, i, omega, path, make_provider(ks))
        yield f"{label} contour vs sum-over-states", abs(val - sigma_c_exact_sos(ks, i, omega, spec)) <= 1e-8

    w = 0.3 + 0.2j
    g = rng.standard_normal(model.n_grid)
    ref = chi0_dense(model, w) @ g
    got = chi0_apply(model, w, g)
    yield "model sternheimer apply", np.linalg.norm(got - ref) <= 1e-10 * np.linalg.norm(ref)


def run_selftest(stream) -> bool:
    ok = True
    for name, passed in _checks():
        ok &= bool(passed)
        stream.write(f"{'PASS' if passed else 'FAIL'} {name}\n")
    return ok
