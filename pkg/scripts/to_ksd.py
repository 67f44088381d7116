"""Convert a ground state stored as .npz or MATLAB .mat into a KSD bundle.

Expected variables: ``eigenvalues`` (n), ``orbitals`` (n_grid x n, grid
weights already folded in), ``coulomb`` (n_grid x n_grid), ``n_v`` and
optionally ``vxc`` (n).  Energies must be in Hartree.

    python scripts/to_ksd.py sih4.mat sih4_bundle/
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.io import loadmat

from gwlowrank.ks_model import KsSystem, save_ksd


def _load(path: Path) -> dict:
    if path.suffix == ".mat":
        return {k: v for k, v in loadmat(path).items() if not k.startswith("__")}
    with np.load(path) as data:
        return dict(data)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("source")
    p.add_argument("bundle")
    p.add_argument("--symmetrize", action="store_true", help="replace v by (v + v^T)/2 before validation")
    args = p.parse_args(argv)

    d = _load(Path(args.source))
    v = np.asarray(d["coulomb"], dtype=float)
    if args.symmetrize:
        v = 0.5 * (v + v.T)
    vxc = np.ravel(d["vxc"]).astype(float) if "vxc" in d else None
    sys_ = KsSystem(np.ravel(d["eigenvalues"]).astype(float), np.asarray(d["orbitals"], dtype=float), v,
                    int(np.ravel(d["n_v"])[0]), vxc)
    save_ksd(sys_, args.bundle)
    print(f"wrote {args.bundle}: n_grid={sys_.n_grid} n={sys_.n} n_v={sys_.n_v} gap={sys_.gap:.6f} Ha")


if __name__ == "__main__":
    main()
