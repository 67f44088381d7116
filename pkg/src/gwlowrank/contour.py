"""Contour-deformed frequency integration of the correlation self-energy.

The real-axis convolution is moved onto the vertical line w' = shift + i*zeta.
Conjugate symmetry of G0 and W_p folds the line onto zeta >= 0, and
zeta = xi / (1 - xi) maps that half-line to [0, 1), where a Radau rule with
its fixed node at xi = 0 is applied.  G0 poles caught between the real axis
and the line are added back as residues.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .greens import g0_apply, g0_dense
from .errors import PoleOnPathError
from .ks_model import HARTREE_TO_EV, KsSystem
from .spectra import (
    PATH_TOL,
    CasidaSpectrum,
    EnclosedPole,
    casida_full,
    check_residue_overlap,
    check_wp_clearance,
    enclosed_g0_poles,
)


@dataclass(frozen=True)
class QuadratureRule:
    m: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=64)
def _radau(m: int):
    # Legendre Jacobi matrix on [-1, 1], last diagonal entry modified so that
    # -1 becomes an eigenvalue (Golub's Radau construction)
    k = np.arange(1, m)
    beta = k / np.sqrt(4.0 * k**2 - 1.0)
    alpha = np.zeros(m)
    if m > 1:
        jm = np.diag(beta[:-1], 1) + np.diag(beta[:-1], -1)
        rhs = np.zeros(m - 1)
        rhs[-1] = beta[-1] ** 2
        delta = np.linalg.solve(jm + np.eye(m - 1), rhs)
        alpha[-1] = -1.0 + delta[-1]
    x, vec = sla.eigh_tridiagonal(alpha, beta)
    w = 2.0 * vec[0, :] ** 2
    order = np.argsort(x)
    x, w = x[order], w[order]
    x[0] = -1.0
    return x, w


def lgr_rule(m: int) -> QuadratureRule:
    """m-point Legendre-Gauss-Radau rule on [0, 1] with a node fixed at 0."""
    if m < 2:
        raise ValueError("LGR rule needs m >= 2")
    x, w = _radau(int(m))
    nodes = 0.5 * (x + 1.0)
    nodes[0] = 0.0
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(int(m), nodes, weights)


def zeta_of_xi(xi):
    xi = np.asarray(xi, dtype=float)
    return xi / (1.0 - xi)


def jacobian(xi):
    xi = np.asarray(xi, dtype=float)
    return 1.0 / (1.0 - xi) ** 2


@dataclass(frozen=True)
class IntegrationPath:
    shift: float
    rule: QuadratureRule
    residues: list = field(default_factory=list)

    def frequencies(self) -> np.ndarray:
        return self.shift + 1j * zeta_of_xi(self.rule.nodes)


def make_path(
    sys: KsSystem,
    omega: float,
    shift: float,
    m: int,
    spectrum: CasidaSpectrum | None = None,
) -> IntegrationPath:
    """Vertical path at ``shift`` with its enclosed G0 residues.

    Raises PoleOnPathError if the line touches a G0 pole or reaches the W_p
    poles, and ResidueOverlapError if a residue point sits on a W_p pole.
    """
    spectrum = spectrum or casida_full(sys)
    check_wp_clearance(shift, float(spectrum.omegas[0]))
    residues = enclosed_g0_poles(sys, omega, shift)
    check_residue_overlap(residues, spectrum)
    return IntegrationPath(float(shift), lgr_rule(m), residues)


# --------------------------------------------------------------------------
# integrand


def hadamard_form(a, amat, b, bmat) -> complex:
    """a^T (A o B) b evaluated as trace(Diag(a) A Diag(b) B^T)."""
    return complex(np.trace((a[:, None] * amat) @ (b[:, None] * bmat.T)))


def integrand_sample(sys: KsSystem, i: int, omega: float, omega_prime: complex, wp_provider) -> complex:
    """<psi_i| G0(omega + w') o W_p(w') |psi_i>.

    ``wp_provider(w')`` returns either a dense W_p matrix or a low-rank factor
    (anything with U, S, V attributes representing U S V^*).  The low-rank
    path never forms G0: it solves for G0 Diag(psi_i) U and takes the trace
    of the k x k matrix (Diag(psi_i) V)^* G0 Diag(psi_i) U S.
    """
    psi = sys.orbitals[:, i - 1]
    z = complex(omega) + complex(omega_prime)
    w = wp_provider(omega_prime)
    if isinstance(w, np.ndarray):
        g0 = g0_dense(sys, z)
        return complex(psi @ ((g0 * w) @ psi))
    u_psi = psi[:, None] * w.U
    v_psi = psi[:, None] * w.V
    gu = g0_apply(sys, z, 0.0, u_psi)
    core = v_psi.conj().T @ gu
    return complex(np.sum(core * w.S.T))


def residue_term(sys: KsSystem, i: int, pole: EnclosedPole, wp_provider) -> float:
    """Residue of G0(omega + w') o W_p(w') at an enclosed G0 pole, i.e.
    rho_ij^T W_p(z_j) rho_ij, with W_p taken at the real point z_j."""
    rho = sys.orbitals[:, i - 1] * sys.orbitals[:, pole.state - 1]
    w = wp_provider(complex(pole.z))
    if isinstance(w, np.ndarray):
        val = rho @ (w @ rho)
    else:
        val = (rho @ w.U) @ w.S @ (w.V.conj().T @ rho)
    return float(np.real(val))


def node_values(sys, i, omega, path: IntegrationPath, wp_provider, max_workers: int | None = None):
    """Integrand values at the path nodes, in node order."""
    freqs = path.frequencies()

    def one(wq):
        return integrand_sample(sys, i, omega, wq, wp_provider)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            vals = list(pool.map(one, freqs))
    else:
        vals = [one(wq) for wq in freqs]
    return np.array(vals, dtype=complex)


def sigma_c_contour(
    sys: KsSystem,
    i: int,
    omega: float,
    path: IntegrationPath,
    wp_provider,
    max_workers: int | None = None,
) -> float:
    """Correlation self-energy <psi_i|Sigma_C(omega)|psi_i> in Hartree."""
    vals = node_values(sys, i, omega, path, wp_provider, max_workers)
    rule = path.rule
    terms = rule.weights * jacobian(rule.nodes) * vals
    total = 0.0 + 0.0j
    for t in terms:  # fixed-order reduction
        total += t
    value = -total.real / np.pi
    for pole in path.residues:
        value += pole.coefficient * residue_term(sys, i, pole, wp_provider)
    return float(value)


def quadrature_error_sweep(
    sys: KsSystem,
    i: int,
    omega: float,
    shifts,
    m_list,
    wp_provider,
    spectrum: CasidaSpectrum | None = None,
    max_workers: int | None = None,
):
    """Sigma_C for every (shift, m) and its distance to the largest-m value.

    Returns a list of dict rows with keys shift, m, value_Ha, value_eV, abs_error.
    """
    spectrum = spectrum or casida_full(sys)
    m_list = [int(m) for m in m_list]
    m_ref = max(m_list)
    rows = []
    for shift in shifts:
        values = {}
        for m in sorted(set(m_list)):
            path = make_path(sys, omega, shift, m, spectrum)
            values[m] = sigma_c_contour(sys, i, omega, path, wp_provider, max_workers)
        for m in m_list:
            rows.append(
                {
                    "shift": float(shift),
                    "m": m,
                    "value_Ha": values[m],
                    "value_eV": values[m] * HARTREE_TO_EV,
                    "abs_error": abs(values[m] - values[m_ref]),
                }
            )
    return rows


def integrand_trace(sys: KsSystem, i: int, omega: float, shift: float, xi, wp_provider):
    """Rows (xi, zeta, re, im) of the Jacobian-free integrand along a path."""
    xi = np.asarray(xi, dtype=float)
    if np.any((xi < 0) | (xi >= 1)):
        raise ValueError("xi must lie in [0, 1)")
    if np.min(np.abs(sys.eigenvalues - omega - shift)) < PATH_TOL:
        raise PoleOnPathError("path touches a G0 pole at xi = 0")
    rows = []
    for x, z in zip(xi, zeta_of_xi(xi)):
        val = integrand_sample(sys, i, omega, shift + 1j * z, wp_provider)
        rows.append((float(x), float(z), val.real, val.imag))
    return rows
