"""Command-line front end: ``gwlowrank <subcommand> ...``.

Every CSV written by the tool starts with a ``# {json}`` line holding the run
configuration.  Numeric inputs are in Hartree; ``--units`` only changes how
energies are reported.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys as _sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import contour, lowrank, sigma, spectra
from .errors import GWError
from .ks_model import HARTREE_TO_EV, ModelSpec, build_model_1d, load_ksd, save_ksd, sys2

SCHEME_NAMES = {
    "dense": "DENSE",
    "svd-wp": "SVD_WP",
    "svd-vchi": "SVD_VCHI",
    "smw-vchi0": "SVD_VCHI0_SMW",
    "fourier": "FOURIER_TRUNC",
}


@dataclass
class RunConfig:
    command: str
    source: dict
    params: dict = field(default_factory=dict)
    out: str | None = None
    units: str = "ev"
    seed: int = 0
    threads: int = 1

    def to_json(self) -> str:
        # thread count changes scheduling only, never the numbers
        d = asdict(self)
        d.pop("threads")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


# --------------------------------------------------------------------------
# helpers


def parse_model_spec(text: str) -> ModelSpec:
    if text in ("default", ""):
        return ModelSpec()
    if text.endswith(".json") and Path(text).is_file():
        return ModelSpec.from_dict(json.loads(Path(text).read_text()))
    return ModelSpec.from_dict(json.loads(text))


def _load_system(args):
    if getattr(args, "ksd", None):
        ks = load_ksd(args.ksd)
        source = {"ksd": str(args.ksd)}
    elif args.model == "sys2":
        ks = sys2()
        source = {"model": "sys2"}
    else:
        spec = parse_model_spec(args.model)
        ks = build_model_1d(spec)
        source = {"model": spec.to_dict()}
    vxc = getattr(args, "vxc", None)
    if vxc is not None:
        ks = ks.with_vxc(np.full(ks.n, float(vxc)))
    return ks, source


def _energy(ks, text) -> float:
    key = str(text).strip().lower()
    if key == "midgap":
        return ks.midgap
    if key == "homo":
        return ks.homo
    if key == "lumo":
        return ks.lumo
    return float(key)


def _floats(text) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def _scale(units: str) -> float:
    return HARTREE_TO_EV if units == "ev" else 1.0


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        _sys.stdout.write(text)
        return
    target = Path(out)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(config: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + config.to_json() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _shift_arg(text):
    return "auto" if str(text).strip().lower() == "auto" else float(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_gen_model(args, config):
    ks, _ = _load_system(args)
    if not args.out or args.out == "-":
        raise GWError("gen-model needs --out DIR")
    save_ksd(ks, args.out)
    print(json.dumps({"written": str(args.out), "n_grid": ks.n_grid, "n": ks.n, "n_v": ks.n_v}))


def cmd_info(args, config):
    ks, _ = _load_system(args)
    spec = spectra.casida_full(ks)
    sc = _scale(args.units)
    info = {
        "config": json.loads(config.to_json()),
        "n_grid": ks.n_grid,
        "n": ks.n,
        "n_v": ks.n_v,
        "units": args.units,
        "homo": ks.homo * sc,
        "lumo": ks.lumo * sc,
        "gap": ks.gap * sc,
        "delta_w": spec.omegas[0] * sc,
        "eigenvalues": [float(e) * sc for e in ks.eigenvalues],
    }
    _emit(json.dumps(info, indent=2) + "\n", args.out)


def cmd_poles(args, config):
    ks, _ = _load_system(args)
    omega = _energy(ks, args.omega)
    sc = _scale(args.units)
    rows = [(re * sc, im * sc, kind) for re, im, kind in spectra.pole_map(ks, omega)]
    _emit(_csv_text(config, ["re", "im", "kind"], rows), args.out)


def _provider(ks, args):
    scheme = SCHEME_NAMES[args.scheme]
    rank = args.rank if scheme != "DENSE" else None
    if scheme != "DENSE" and rank is None:
        raise GWError(f"--scheme {args.scheme} needs --rank")
    return lowrank.make_provider(ks, scheme, rank)


def cmd_integrand(args, config):
    ks, _ = _load_system(args)
    i = ks.state_index(args.state)
    omega = _energy(ks, args.omega)
    spec = spectra.casida_full(ks)
    shift = spectra.auto_shift(ks, omega, spec.omegas[0]) if args.shift == "auto" else args.shift
    xi = contour.lgr_rule(args.quad).nodes
    rows = contour.integrand_trace(ks, i, omega, shift, xi, _provider(ks, args))
    sc = _scale(args.units)
    rows = [(x, z, re * sc, im * sc) for x, z, re, im in rows]
    _emit(_csv_text(config, ["xi", "zeta", "re", "im"], rows), args.out)


def _delta_shifts(ks, omega, deltas):
    # paths Re(w') = (1 - delta) (eps_LUMO - omega): delta -> 0 approaches the LUMO pole
    return [(1.0 - d) * (ks.lumo - omega) for d in deltas]


def cmd_sweep_quadrature(args, config):
    ks, _ = _load_system(args)
    i = ks.state_index(args.state)
    omega = _energy(ks, args.omega)
    shifts = _floats(args.shifts) if args.shifts else _delta_shifts(ks, omega, _floats(args.deltas))
    rows = contour.quadrature_error_sweep(
        ks, i, omega, shifts, _ints(args.quads), _provider(ks, args), max_workers=args.threads
    )
    sc = _scale(args.units)
    out = [(r["shift"] * sc, r["m"], r["value_Ha"], r["value_eV"], r["abs_error"] * sc) for r in rows]
    _emit(_csv_text(config, ["shift", "m", "value_Ha", "value_eV", "abs_error"], out), args.out)


def cmd_sweep_contour(args, config):
    ks, _ = _load_system(args)
    i = ks.state_index(args.state)
    omega = _energy(ks, args.omega)
    spec = spectra.casida_full(ks)
    shifts = _floats(args.shifts) if args.shifts else _delta_shifts(ks, omega, _floats(args.deltas))
    reference = sigma.sigma_c_exact_sos(ks, i, omega, spec)
    provider = _provider(ks, args)
    sc = _scale(args.units)
    rows = []
    for shift in shifts:
        path = contour.make_path(ks, omega, shift, args.quad, spec)
        val = contour.sigma_c_contour(ks, i, omega, path, provider, args.threads)
        rows.append((shift * sc, args.quad, val, val * HARTREE_TO_EV, abs(val - reference) * sc))
    _emit(_csv_text(config, ["shift", "m", "value_Ha", "value_eV", "abs_error"], rows), args.out)


def cmd_sweep_rank(args, config):
    ks, _ = _load_system(args)
    i = ks.state_index(args.state)
    omega = _energy(ks, args.omega)
    spec = spectra.casida_full(ks)
    names = list(SCHEME_NAMES)[1:] if args.schemes == "all" else args.schemes.split(",")
    base = sigma.SigmaConfig(quad=args.quad, shift=args.shift, max_workers=args.threads, bounds=False)
    dense = sigma.sigma_c_element(ks, i, omega, base, spec)
    rows = []
    cache = {}
    for name in names:
        for k in _ints(args.ranks):
            cfg = sigma.SigmaConfig(
                scheme=SCHEME_NAMES[name], rank=k, quad=args.quad, shift=args.shift,
                max_workers=args.threads, bounds=True,
            )
            rep = sigma.sigma_c_element(ks, i, omega, cfg, spec, cache)
            b = rep.bounds
            rows.append(
                (name, k, rep.sigma_c, abs(rep.sigma_c - dense.sigma_c), b["E1"], b["E2"], b["E3"], b["E3_valid"])
            )
    header = ["scheme", "k", "sigma_c_Ha", "abs_error_Ha", "E1", "E2", "E3", "E3_valid"]
    _emit(_csv_text(config, header, rows), args.out)


def cmd_singvals(args, config):
    ks, _ = _load_system(args)
    prof = lowrank.singular_value_profile(ks, complex(args.freq.replace("i", "j")))
    rows = [(idx + 1, a, b, c) for idx, (a, b, c) in enumerate(zip(prof["wp"], prof["vchi0"], prof["vchi"]))]
    _emit(_csv_text(config, ["index", "sv_wp", "sv_vchi0", "sv_vchi"], rows), args.out)


def _sigma_config(args, **kw):
    scheme = SCHEME_NAMES[args.scheme]
    if scheme != "DENSE" and args.rank is None:
        raise GWError(f"--scheme {args.scheme} needs --rank")
    return sigma.SigmaConfig(
        scheme=scheme, rank=args.rank, quad=args.quad, shift=args.shift, max_workers=args.threads, **kw
    )


def _report_rows(rep: sigma.SigmaReport, units: str):
    sc = _scale(units)
    fields = [
        ("state", rep.state), ("omega", rep.omega * sc), ("scheme", rep.scheme), ("rank", rep.rank),
        ("quad", rep.quad), ("shift", rep.shift * sc), ("residue_count", rep.residue_count),
        ("residue_free", rep.residue_free), ("delta_w", rep.delta_w * sc),
        ("sigma_x", rep.sigma_x * sc), ("sigma_c", rep.sigma_c * sc), ("sigma_c_Ha", rep.sigma_c),
        ("oracle", None if rep.oracle_value is None else rep.oracle_value * sc),
        ("oracle_error", None if rep.oracle_error is None else rep.oracle_error * sc),
    ]
    if rep.bounds:
        fields += [(k, v * sc if isinstance(v, float) else v) for k, v in rep.bounds.items()]
    return fields


def cmd_sigma(args, config):
    ks, _ = _load_system(args)
    i = ks.state_index(args.state)
    omega = _energy(ks, args.omega)
    rep = sigma.sigma_c_element(ks, i, omega, _sigma_config(args, oracle=args.oracle))
    fields = _report_rows(rep, args.units)
    if args.out and str(args.out).endswith(".json"):
        payload = {"config": json.loads(config.to_json()), "units": args.units, **dict(fields)}
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _emit(_csv_text(config, [k for k, _ in fields], [[v for _, v in fields]]), args.out)


def cmd_qp(args, config):
    ks, _ = _load_system(args)
    i = ks.state_index(args.state)
    res = sigma.solve_qp(ks, i, _sigma_config(args, bounds=False), max_iter=args.max_iter, tol=args.tol)
    sc = _scale(args.units)
    fields = [
        ("state", i), ("eps_ks", float(ks.eigenvalues[i - 1]) * sc), ("energy", res.energy * sc),
        ("energy_Ha", res.energy), ("converged", res.converged), ("iterations", res.iterations),
    ]
    if args.out and str(args.out).endswith(".json"):
        payload = {"config": json.loads(config.to_json()), "units": args.units, **dict(fields)}
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _emit(_csv_text(config, [k for k, _ in fields], [[v for _, v in fields]]), args.out)
    if not res.converged:
        return 1
    return 0


def cmd_selftest(args, config):
    from .selftest import run_selftest

    ok = run_selftest(_sys.stdout)
    return 0 if ok else 1


# --------------------------------------------------------------------------
# parser


def _add_source(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ksd", help="KSD bundle directory")
    g.add_argument("--model", default="default", help="'default', 'sys2', a JSON ModelSpec or a .json file")


def _add_common(p, out_help="output file (default: stdout)"):
    p.add_argument("--out", default=None, help=out_help)
    p.add_argument("--units", choices=["ev", "ha"], default="ev")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)


def _add_eval(p, rank=True):
    p.add_argument("--state", default="homo", help="1-based index, 'homo' or 'lumo'")
    p.add_argument("--omega", default="midgap", help="Ha value, 'midgap', 'homo' or 'lumo'")
    p.add_argument("--scheme", choices=list(SCHEME_NAMES), default="dense")
    if rank:
        p.add_argument("--rank", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gwlowrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="write a model system as a KSD bundle")
    _add_source(p)
    _add_common(p, "bundle directory")
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("info", help="summary of a system (JSON)")
    _add_source(p)
    _add_common(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("poles", help="pole map of G0(omega + w') and W_p(w')")
    _add_source(p)
    _add_common(p)
    p.add_argument("--omega", default="midgap")
    p.set_defaults(func=cmd_poles)

    p = sub.add_parser("integrand", help="integrand along a vertical path at LGR nodes")
    _add_source(p)
    _add_common(p)
    _add_eval(p)
    p.add_argument("--shift", type=_shift_arg, default="auto")
    p.add_argument("--quad", type=int, default=64)
    p.set_defaults(func=cmd_integrand)

    p = sub.add_parser("sweep-quadrature", help="|I_m - I_mmax| over shifts and rule sizes")
    _add_source(p)
    _add_common(p)
    _add_eval(p)
    p.add_argument("--deltas", default="1,0.1,0.01,0.001")
    p.add_argument("--shifts", default=None, help="explicit shifts (Ha), overrides --deltas")
    p.add_argument("--quads", default="8,16,32,64")
    p.set_defaults(func=cmd_sweep_quadrature)

    p = sub.add_parser("sweep-contour", help="Sigma_C on several paths against the exact value")
    _add_source(p)
    _add_common(p)
    _add_eval(p)
    p.add_argument("--deltas", default="1,0.001,-0.001")
    p.add_argument("--shifts", default=None)
    p.add_argument("--quad", type=int, default=256)
    p.set_defaults(func=cmd_sweep_contour)

    p = sub.add_parser("sweep-rank", help="low-rank error and bounds over ranks and schemes")
    _add_source(p)
    _add_common(p)
    p.add_argument("--state", default="homo")
    p.add_argument("--omega", default="midgap")
    p.add_argument("--schemes", default="all")
    p.add_argument("--ranks", default="4,8,16,32")
    p.add_argument("--quad", type=int, default=64)
    p.add_argument("--shift", type=_shift_arg, default="auto")
    p.set_defaults(func=cmd_sweep_rank)

    p = sub.add_parser("singvals", help="normalized singular values of W_p, v chi0, v chi")
    _add_source(p)
    _add_common(p)
    p.add_argument("--freq", default="0", help="frequency w' (Ha), e.g. 0 or 2i")
    p.set_defaults(func=cmd_singvals)

    for name, func in (("sigma", cmd_sigma), ("qp", cmd_qp)):
        p = sub.add_parser(name, help="correlation element" if name == "sigma" else "quasiparticle energy")
        _add_source(p)
        _add_common(p, "CSV or .json output path")
        _add_eval(p)
        p.add_argument("--quad", type=int, default=64)
        p.add_argument("--shift", type=_shift_arg, default="auto")
        p.add_argument("--vxc", type=float, default=None, help="override <V_xc> for every state (Ha)")
        if name == "sigma":
            p.add_argument("--oracle", action="store_true", help="also compute the sum-over-states value")
        else:
            p.add_argument("--max-iter", type=int, default=50)
            p.add_argument("--tol", type=float, default=1e-6)
        p.set_defaults(func=func)

    p = sub.add_parser("selftest", help="quick built-in consistency checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def _config_from_args(args) -> RunConfig:
    skip = {"func", "command", "ksd", "model", "out", "units", "seed", "threads"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    if getattr(args, "ksd", None):
        source = {"ksd": str(args.ksd)}
    elif hasattr(args, "model"):
        source = {"model": args.model}
    else:
        source = {}
    return RunConfig(
        command=args.command,
        source=source,
        params=params,
        out=getattr(args, "out", None),
        units=getattr(args, "units", "ev"),
        seed=getattr(args, "seed", 0),
        threads=getattr(args, "threads", 1),
    )


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _config_from_args(args)
    try:
        with threadpool_limits(limits=1):
            status = args.func(args, config)
    except (GWError, FileNotFoundError, ValueError, IndexError, np.linalg.LinAlgError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        _sys.stderr.write(json.dumps(record) + "\n")
        return 1
    return int(status or 0)


def main() -> None:
    raise SystemExit(run())
