"""Polarizabilities, dielectric matrix and the screened interaction W_p.

All matrices are complex symmetric (not Hermitian) for complex frequency.
For ``Im(omega) != 0`` the imaginary part of the frequency regularizes the
poles and ``eta`` is ignored; on the real axis either ``eta > 0`` or a
frequency at least ``POLE_TOL`` away from every transition energy is needed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import PoleProximityError, SingularShiftError
from .ks_model import KsSystem, transition_densities, transition_energies

POLE_TOL = 1e-10
RCOND_MIN = 1e-13
SPIN = 2.0


def effective_eta(omega: complex, eta: float) -> float:
    if eta < 0:
        raise ValueError("eta must be >= 0")
    return 0.0 if complex(omega).imag != 0.0 else float(eta)


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _solve(a, b, what: str):
    # LAPACK only warns below machine epsilon; a matrix evaluated exactly on a
    # pole usually rounds to a reciprocal condition number a little above it
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            lu = sla.lu_factor(a)
        except (np.linalg.LinAlgError, sla.LinAlgWarning, ValueError) as exc:
            raise PoleProximityError(f"{what} is singular to working precision") from exc
    anorm = np.linalg.norm(a, 1)
    gecon = sla.get_lapack_funcs("gecon", (lu[0],))
    rcond = gecon(lu[0], anorm, norm="1")[0] if anorm > 0 else 0.0
    if not rcond >= RCOND_MIN:
        raise PoleProximityError(f"{what} is near singular (rcond={rcond:.2e})")
    return sla.lu_solve(lu, b)


def chi0_coefficients(sys: KsSystem, omega: complex, eta: float = 0.0) -> np.ndarray:
    """Per-transition weights 2[1/(w - D + i eta) - 1/(w + D - i eta)]."""
    omega = complex(omega)
    eta = effective_eta(omega, eta)
    delta = transition_energies(sys)
    if eta == 0.0 and omega.imag == 0.0:
        dist = np.min(np.abs(np.abs(omega.real) - delta))
        if dist < POLE_TOL:
            raise PoleProximityError(
                f"omega={omega.real:.12g} is {dist:.2e} Ha from a transition energy"
            )
    return SPIN * (1.0 / (omega - delta + 1j * eta) - 1.0 / (omega + delta - 1j * eta))


def chi0_dense(sys: KsSystem, omega: complex, eta: float = 0.0) -> np.ndarray:
    """Irreducible polarizability chi0(omega) as a dense n_grid x n_grid matrix."""
    phi = transition_densities(sys)
    c = chi0_coefficients(sys, omega, eta)
    return _symmetrize((phi * c) @ phi.T)


def epsilon_dense(sys: KsSystem, omega: complex, eta: float = 0.0) -> np.ndarray:
    """Dielectric matrix I - v chi0(omega)."""
    return np.eye(sys.n_grid) - sys.coulomb @ chi0_dense(sys, omega, eta)


def chi_dense(sys: KsSystem, omega: complex, eta: float = 0.0) -> np.ndarray:
    """Reducible polarizability [I - chi0 v]^{-1} chi0."""
    chi0 = chi0_dense(sys, omega, eta)
    a = np.eye(sys.n_grid) - chi0 @ sys.coulomb
    return _symmetrize(_solve(a, chi0, "I - chi0 v"))


def wp_dense(sys: KsSystem, omega: complex, eta: float = 0.0) -> np.ndarray:
    """Frequency-dependent screened interaction W_p = eps^{-1} v - v.

    Evaluated as eps^{-1} (v chi0 v), which equals eps^{-1} v - v exactly but
    avoids the cancellation between two O(|v|) terms at large |omega|.
    """
    v = sys.coulomb
    chi0 = chi0_dense(sys, omega, eta)
    vchi0 = v @ chi0
    eps = np.eye(sys.n_grid) - vchi0
    return _symmetrize(_solve(eps, vchi0 @ v, "epsilon"))


@dataclass(frozen=True)
class ResponseSnapshot:
    omega: complex
    chi0: np.ndarray
    epsilon: np.ndarray
    wp: np.ndarray


def response_snapshot(sys: KsSystem, omega: complex, eta: float = 0.0) -> ResponseSnapshot:
    v = sys.coulomb
    chi0 = chi0_dense(sys, omega, eta)
    vchi0 = v @ chi0
    eps = np.eye(sys.n_grid) - vchi0
    wp = _symmetrize(_solve(eps, vchi0 @ v, "epsilon"))
    return ResponseSnapshot(complex(omega), chi0, eps, wp)


# --------------------------------------------------------------------------
# matrix-free chi0 via Sternheimer solves


def _projected_solve(ham, proj, energies, shift: complex, rhs):
    """Solve P (H - shift) P x = rhs for rhs in range(P) by dense LU.

    ``energies`` are the eigenvalues of H on range(P); the complement of P is
    padded with the identity so the factorized matrix is nonsingular.
    """
    margin = np.min(np.abs(energies - shift))
    if margin < POLE_TOL:
        raise SingularShiftError(f"shift {shift:.12g} is {margin:.2e} Ha from an eigenvalue")
    n = ham.shape[0]
    a = proj @ (ham - shift * np.eye(n)) @ proj + (np.eye(n) - proj)
    return sla.lu_solve(sla.lu_factor(a), rhs)


def chi0_apply(sys: KsSystem, omega: complex, g) -> np.ndarray:
    """chi0(omega) @ g without forming chi0 or summing over unoccupied states.

    For each occupied psi_i the Sternheimer systems
    [H - (eps_i -/+ omega)] dpsi = -P_c (psi_i * g) are solved at both shifts;
    the two solutions give the two resolvent terms of chi0.  ``g`` may be a
    vector or an (n_grid, k) block.
    """
    g = np.asarray(g)
    block = g.ndim == 2
    gb = g if block else g[:, None]
    omega = complex(omega)
    ham = sys.hamiltonian()
    p_c = sys.unoccupied_projector()
    e_c = sys.eigenvalues[sys.n_v :]
    out = np.zeros(gb.shape, dtype=complex)
    for i in range(sys.n_v):
        psi_i = sys.orbitals[:, i][:, None]
        rhs = -(p_c @ (psi_i * gb))
        eps_i = sys.eigenvalues[i]
        d_minus = _projected_solve(ham, p_c, e_c, eps_i - omega, rhs)
        d_plus = _projected_solve(ham, p_c, e_c, eps_i + omega, rhs)
        out += psi_i * (d_minus + d_plus)
    out *= SPIN
    return out if block else out[:, 0]
