"""Exchange and correlation self-energy matrix elements and the QP equation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .contour import jacobian, make_path, sigma_c_contour
from .errors import MissingDataError, PoleProximityError
from .greens import g0_dense
from .ks_model import HARTREE_TO_EV, KsSystem, pair_density
from .lowrank import ErrorBounds, Scheme, Screening, error_bounds, make_provider
from .spectra import CasidaSpectrum, auto_shift, casida_full, residue_free

SOS_TOL = 1e-10


def sigma_x_element(sys: KsSystem, i: int) -> float:
    """Exchange element -sum_{j occ} rho_ij^T v rho_ij."""
    total = 0.0
    for j in range(1, sys.n_v + 1):
        rho = pair_density(sys, i, j)
        total -= float(rho @ (sys.coulomb @ rho))
    return total


def sigma_c_exact_sos(
    sys: KsSystem, i: int, omega: float, spectrum: CasidaSpectrum | None = None
) -> float:
    """Closed-form correlation element from the pole expansions of G0 and W_p.

    Sigma_C(w) = sum_s [ sum_{j occ} M_js / (w - eps_j + O_s)
                       + sum_{j unocc} M_js / (w - eps_j - O_s) ],
    M_js = (rho_ij^T b_s)^2.
    """
    spectrum = spectrum or casida_full(sys)
    eps = sys.eigenvalues
    rho = sys.orbitals[:, [i - 1]] * sys.orbitals  # column j = rho_ij
    strength = (rho.T @ spectrum.amplitudes) ** 2  # (n, n_exc)
    sign = np.where(np.arange(sys.n) < sys.n_v, 1.0, -1.0)
    denom = omega - eps[:, None] + sign[:, None] * spectrum.omegas[None, :]
    if np.min(np.abs(denom)) < SOS_TOL:
        raise PoleProximityError(f"omega={omega:.12g} sits on a pole of Sigma_C")
    return float(np.sum(strength / denom))


@dataclass(frozen=True)
class SigmaConfig:
    """How a correlation element is computed.

    ``shift`` is ``"auto"`` or a fixed real part of the vertical path (Ha).
    """

    scheme: str = "DENSE"
    rank: int | None = None
    quad: int = 64
    shift: object = "auto"
    bounds: bool = True
    compare_dense: bool = False
    oracle: bool = False
    max_workers: int | None = None
    basis_omega: complex | None = None


@dataclass
class SigmaReport:
    state: int
    omega: float
    sigma_x: float
    sigma_c: float
    scheme: str
    rank: int | None
    quad: int
    shift: float
    residue_count: int
    residue_free: bool
    delta_w: float
    bounds: dict | None = None
    dense_value: float | None = None
    oracle_value: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def oracle_error(self) -> float | None:
        if self.oracle_value is None:
            return None
        return abs(self.sigma_c - self.oracle_value)

    @property
    def dense_error(self) -> float | None:
        if self.dense_value is None:
            return None
        return abs(self.sigma_c - self.dense_value)

    def to_dict(self, units: str = "ev") -> dict:
        d = dataclasses.asdict(self)
        d["oracle_error"] = self.oracle_error
        d["dense_error"] = self.dense_error
        if units == "ev":
            for key in ("sigma_x", "sigma_c", "dense_value", "oracle_value", "oracle_error", "dense_error"):
                if d[key] is not None:
                    d[key + "_eV"] = d[key] * HARTREE_TO_EV
        return d


def integrated_bounds(sys: KsSystem, i: int, omega: float, path, k: int, cache: dict | None = None) -> dict:
    """Quadrature-weighted E1..E3 bounding |Sigma_C(k) - Sigma_C(dense)|.

    Node bounds enter with |w_q| J_q / pi; each residue term contributes
    ||rho_ij||^2 times the bound on ||Delta W_p|| at its real point.
    ``cache`` maps frequencies to Screening objects and may be shared
    between calls that differ only in k.
    """
    cache = {} if cache is None else cache

    def snap(w):
        w = complex(w)
        if w not in cache:
            cache[w] = Screening(sys, w)
        return cache[w]

    e = np.zeros(3)
    valid = True
    rule = path.rule
    for x, wq, om in zip(rule.nodes, rule.weights, path.frequencies()):
        b = error_bounds(sys, om, k, omega=omega, snap=snap(om))
        e += abs(wq) * jacobian(x) / np.pi * np.array([b.e1, b.e2, b.e3])
        valid &= b.e3_valid
    for pole in path.residues:
        rho = pair_density(sys, i, pole.state)
        b = error_bounds(sys, pole.z, k, omega=omega, snap=snap(pole.z), g0_norm=1.0)
        e += float(rho @ rho) * np.array([b.e1, b.e2, b.e3])
        valid &= b.e3_valid
    return {"E1": float(e[0]), "E2": float(e[1]), "E3": float(e[2]), "E3_valid": bool(valid)}


def sigma_c_element(
    sys: KsSystem,
    i: int,
    omega: float,
    config: SigmaConfig | None = None,
    spectrum: CasidaSpectrum | None = None,
    bounds_cache: dict | None = None,
) -> SigmaReport:
    """Correlation element via the contour path, dense or with a low-rank W_p."""
    config = config or SigmaConfig()
    scheme = Scheme.parse(config.scheme)
    spectrum = spectrum or casida_full(sys)
    delta = float(spectrum.omegas[0])
    rf = residue_free(sys, omega, delta)
    if config.shift == "auto":
        shift = auto_shift(sys, omega, delta)
    else:
        shift = float(config.shift)
    path = make_path(sys, omega, shift, config.quad, spectrum)
    rank = None if scheme is Scheme.DENSE else int(config.rank if config.rank is not None else sys.n_grid)
    provider = make_provider(sys, scheme, rank, config.basis_omega)
    value = sigma_c_contour(sys, i, omega, path, provider, config.max_workers)

    report = SigmaReport(
        state=i,
        omega=float(omega),
        sigma_x=sigma_x_element(sys, i),
        sigma_c=value,
        scheme=scheme.value,
        rank=rank,
        quad=config.quad,
        shift=shift,
        residue_count=len(path.residues),
        residue_free=rf.is_residue_free,
        delta_w=delta,
    )
    if scheme is not Scheme.DENSE:
        if config.bounds:
            report.bounds = integrated_bounds(sys, i, omega, path, rank, bounds_cache)
        if config.compare_dense:
            report.dense_value = sigma_c_contour(
                sys, i, omega, path, make_provider(sys, Scheme.DENSE), config.max_workers
            )
    if config.oracle:
        report.oracle_value = sigma_c_exact_sos(sys, i, omega, spectrum)
    return report


def sigma_element(sys: KsSystem, i: int, omega: float, config: SigmaConfig | None = None, spectrum=None) -> float:
    """Sigma_X + Sigma_C for state i at omega (Hartree)."""
    rep = sigma_c_element(sys, i, omega, dataclasses.replace(config or SigmaConfig(), bounds=False), spectrum)
    return rep.sigma_x + rep.sigma_c


@dataclass(frozen=True)
class QPResult:
    state: int
    energy: float
    converged: bool
    iterations: int
    history: tuple


def solve_qp(
    sys: KsSystem,
    i: int,
    config: SigmaConfig | None = None,
    sigma_fn=None,
    max_iter: int = 50,
    tol: float = 1e-6,
) -> QPResult:
    """Secant solution of w = eps_i + Sigma(w) - <V_xc>_i.

    ``sigma_fn(w)`` overrides the self-energy (Sigma_X + Sigma_C); by default
    it is evaluated with ``config``.  Iteration stops when the step or the
    residual drops below ``tol``.  Non-convergence is reported through
    ``converged=False`` with the last iterate.
    """
    if sys.vxc_element is None:
        raise MissingDataError("quasiparticle solve needs vxc_element")
    eps_i = float(sys.eigenvalues[i - 1])
    vxc = float(sys.vxc_element[i - 1])
    if sigma_fn is None:
        spectrum = casida_full(sys)

        def sigma_fn(w):
            return sigma_element(sys, i, w, config, spectrum)

    def residual(w):
        return eps_i + sigma_fn(w) - vxc - w

    w0 = eps_i
    r0 = residual(w0)
    w1 = w0 + r0
    history = [w0, w1]
    if abs(w1 - w0) <= tol:
        return QPResult(i, w1, True, 1, tuple(history))
    r1 = residual(w1)
    if abs(r1) <= tol:
        return QPResult(i, w1, True, 1, tuple(history))
    for it in range(2, max_iter + 1):
        if r1 == r0:
            return QPResult(i, w1, r1 == 0.0, it - 1, tuple(history))
        w2 = w1 - r1 * (w1 - w0) / (r1 - r0)
        history.append(w2)
        if abs(w2 - w1) <= tol:
            return QPResult(i, w2, True, it, tuple(history))
        w0, r0, w1 = w1, r1, w2
        r1 = residual(w1)
        if abs(r1) <= tol:
            return QPResult(i, w1, True, it, tuple(history))
    return QPResult(i, w1, False, max_iter, tuple(history))


def dense_integrand_error(sys, i, omega, omega_prime, factor) -> float:
    """|<psi_i|G0 o (W_p + dW)|psi_i> - <psi_i|G0 o W_p|psi_i>| for a factor."""
    psi = sys.orbitals[:, i - 1]
    g0 = g0_dense(sys, complex(omega) + complex(omega_prime))
    dw = factor.dense() - Screening(sys, omega_prime).wp
    return abs(psi @ ((g0 * dw) @ psi))
