"""Sigma_C(HOMO, midgap) on three paths for dense and truncated W_p, as a table.

Rows are paths Re(w') = (1 - delta)(eps_LUMO - omega); columns are the dense
screened interaction and SVD_WP truncations.  Values in eV.
"""

import argparse

from gwlowrank.contour import make_path, sigma_c_contour
from gwlowrank.cli import parse_model_spec
from gwlowrank.ks_model import HARTREE_TO_EV, build_model_1d, load_ksd
from gwlowrank.lowrank import make_provider
from gwlowrank.sigma import sigma_c_exact_sos
from gwlowrank.spectra import casida_full


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--model", default="default")
    src.add_argument("--ksd")
    p.add_argument("--ranks", default="32,16,8")
    p.add_argument("--deltas", default="1,0.001,-0.001")
    p.add_argument("--quad", type=int, default=256)
    args = p.parse_args(argv)

    sys_ = load_ksd(args.ksd) if args.ksd else build_model_1d(parse_model_spec(args.model))
    i, omega = sys_.n_v, sys_.midgap
    spec = casida_full(sys_)
    ranks = [int(k) for k in args.ranks.split(",")]
    providers = [("dense", make_provider(sys_))] + [(f"k={k}", make_provider(sys_, "SVD_WP", k)) for k in ranks]

    print(f"state {i}, omega = {omega * HARTREE_TO_EV:.4f} eV, delta_W = {spec.omegas[0] * HARTREE_TO_EV:.4f} eV, "
          f"gap = {sys_.gap * HARTREE_TO_EV:.4f} eV, m = {args.quad}")
    print(f"exact (sum over states): {sigma_c_exact_sos(sys_, i, omega, spec) * HARTREE_TO_EV:.6f} eV")
    print(f"{'delta':>8} " + " ".join(f"{name:>12}" for name, _ in providers))
    for d in (float(x) for x in args.deltas.split(",")):
        path = make_path(sys_, omega, (1.0 - d) * (sys_.lumo - omega), args.quad, spec)
        vals = [sigma_c_contour(sys_, i, omega, path, prov) * HARTREE_TO_EV for _, prov in providers]
        print(f"{d:>8g} " + " ".join(f"{v:>12.6f}" for v in vals))


if __name__ == "__main__":
    main()
