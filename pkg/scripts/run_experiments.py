"""Write the sweep, spectrum and integrand CSVs for one system into a directory.

    python scripts/run_experiments.py --outdir results
    python scripts/run_experiments.py --ksd path/to/bundle --outdir results_ksd

Each file is written through the ``gwlowrank`` CLI, so its first line holds
the run configuration.
"""

import argparse
import sys
from pathlib import Path

from gwlowrank.cli import run

DELTAS = ["1", "0.1", "0.01", "0.001", "-0.001"]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--outdir", default="results")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--model", default="default")
    src.add_argument("--ksd")
    p.add_argument("--units", choices=["ev", "ha"], default="ev")
    p.add_argument("--threads", default="1")
    args = p.parse_args(argv)

    out = Path(args.outdir)
    source = ["--ksd", args.ksd] if args.ksd else ["--model", args.model]
    common = source + ["--units", args.units, "--threads", args.threads]

    jobs = {
        "info.json": ["info"],
        "poles_midgap.csv": ["poles", "--omega", "midgap"],
        "quadrature_sweep.csv": ["sweep-quadrature", "--deltas", "1,0.1,0.01,0.001", "--quads", "8,16,32,64,128"],
        "contour_sweep.csv": ["sweep-contour", "--deltas", "1,0.001,-0.001", "--quad", "256"],
        "singvals_0.csv": ["singvals", "--freq", "0"],
        "singvals_2i.csv": ["singvals", "--freq", "2i"],
        "rank_sweep.csv": ["sweep-rank", "--schemes", "all", "--ranks", "2,4,8,16,32,48,64"],
        "sigma_dense.json": ["sigma", "--oracle"],
    }
    for delta in DELTAS:
        jobs[f"integrand_delta_{delta}.csv"] = ["integrand", "--quad", "64", "--shift", f"delta:{delta}"]

    failed = 0
    for name, argv_job in jobs.items():
        argv_job = _resolve_delta(argv_job, source)
        status = run(argv_job + common + ["--out", str(out / name)])
        print(f"{'ok ' if status == 0 else 'ERR'} {name}")
        failed += status != 0
    return 1 if failed else 0


def _resolve_delta(argv, source):
    """Turn ``--shift delta:d`` into the Ha shift (1 - d)(eps_LUMO - omega) at midgap."""
    if "--shift" not in argv:
        return argv
    idx = argv.index("--shift") + 1
    if not argv[idx].startswith("delta:"):
        return argv
    from gwlowrank.ks_model import build_model_1d, load_ksd
    from gwlowrank.cli import parse_model_spec

    sys_ = load_ksd(source[1]) if source[0] == "--ksd" else build_model_1d(parse_model_spec(source[1]))
    delta = float(argv[idx].split(":", 1)[1])
    shift = (1.0 - delta) * (sys_.lumo - sys_.midgap)
    return argv[:idx] + [repr(shift)] + argv[idx + 1:]


if __name__ == "__main__":
    sys.exit(main())
